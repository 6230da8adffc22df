#include "obbtable/raster.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

namespace obbtable::raster {

namespace {

constexpr int kJpegQuality = 90;

ImageFormat format_from_path(const std::string& path) {
    const auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == "jpg" || ext == "jpeg") return ImageFormat::Jpeg;
    return ImageFormat::Png;
}

// ---- PNG via the libpng simplified API ----

Raster decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw DecodeError(std::string("PNG decode failed: ") + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    Raster out(static_cast<int>(image.width), static_cast<int>(image.height), color ? 3 : 1);
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("PNG decode failed: " + msg);
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const Raster& r) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(r.width);
    image.height = static_cast<png_uint_32>(r.height);
    image.format = r.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, r.pixels.data(), 0, nullptr)) {
        throw EncodeError(std::string("PNG encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> bytes(size);
    if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, r.pixels.data(), 0,
                                   nullptr)) {
        throw EncodeError(std::string("PNG encode failed: ") + image.message);
    }
    bytes.resize(size);
    return bytes;
}

// ---- JPEG via libjpeg with longjmp error recovery ----

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX]{};
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

Raster decode_jpeg(const std::vector<std::uint8_t>& bytes) {
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError(std::string("JPEG decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    Raster out(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height),
               cinfo.output_components);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW rowp = out.row(static_cast<int>(cinfo.output_scanline));
        jpeg_read_scanlines(&cinfo, &rowp, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

std::vector<std::uint8_t> encode_jpeg(const Raster& r) {
    jpeg_compress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;

    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        throw EncodeError(std::string("JPEG encode failed: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(r.width);
    cinfo.image_height = static_cast<JDIMENSION>(r.height);
    cinfo.input_components = r.channels;
    cinfo.in_color_space = r.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, kJpegQuality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW rowp = const_cast<JSAMPROW>(r.row(static_cast<int>(cinfo.next_scanline)));
        jpeg_write_scanlines(&cinfo, &rowp, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> bytes(buffer, buffer + size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return bytes;
}

}  // namespace

ImageFormat sniff_format(const std::vector<std::uint8_t>& bytes, ImageFormat hint) {
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' &&
        bytes[3] == 'G') {
        return ImageFormat::Png;
    }
    if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) {
        return ImageFormat::Jpeg;
    }
    return hint;
}

Raster decode(const std::vector<std::uint8_t>& bytes, ImageFormat hint) {
    if (bytes.empty()) throw DecodeError("empty image stream");
    switch (sniff_format(bytes, hint)) {
        case ImageFormat::Png: return decode_png(bytes);
        case ImageFormat::Jpeg: return decode_jpeg(bytes);
    }
    throw DecodeError("unsupported format");
}

std::vector<std::uint8_t> encode(const Raster& r, ImageFormat format) {
    if (r.width < 1 || r.height < 1 || (r.channels != 1 && r.channels != 3)) {
        throw EncodeError("invalid raster dimensions");
    }
    return format == ImageFormat::Png ? encode_png(r) : encode_jpeg(r);
}

Raster warp_affine(const Raster& r, const geometry::AffineMap& m, int out_width,
                   int out_height, const WarpOptions& opts) {
    if (out_width < 1 || out_height < 1) {
        throw WarpError("warp_affine: output size must be positive");
    }
    const double det = m.det2();
    if (std::abs(det) <= 1e-12) {
        throw WarpError("warp_affine: singular map");
    }
    std::vector<std::uint8_t> fill = opts.fill;
    if (fill.empty()) fill.assign(static_cast<std::size_t>(r.channels), 0);
    if (static_cast<int>(fill.size()) != r.channels) {
        throw WarpError("warp_affine: fill length must match channel count");
    }

    // invert: src = inv * dst
    const double inv00 = m.m11 / det;
    const double inv01 = -m.m01 / det;
    const double inv10 = -m.m10 / det;
    const double inv11 = m.m00 / det;
    const double inv02 = -(inv00 * m.m02 + inv01 * m.m12);
    const double inv12 = -(inv10 * m.m02 + inv11 * m.m12);

    Raster out(out_width, out_height, r.channels);
    const int ch = r.channels;
    for (int v = 0; v < out_height; ++v) {
        std::uint8_t* row = out.row(v);
        for (int u = 0; u < out_width; ++u) {
            const double sx = inv00 * u + inv01 * v + inv02;
            const double sy = inv10 * u + inv11 * v + inv12;
            std::uint8_t* px = row + static_cast<std::size_t>(u) * ch;
            if (opts.interpolation == Interpolation::Nearest) {
                const int ix = static_cast<int>(std::lround(sx));
                const int iy = static_cast<int>(std::lround(sy));
                if (ix < 0 || ix >= r.width || iy < 0 || iy >= r.height) {
                    std::copy(fill.begin(), fill.end(), px);
                } else {
                    const std::uint8_t* sp = r.row(iy) + static_cast<std::size_t>(ix) * ch;
                    std::copy(sp, sp + ch, px);
                }
            } else {
                const double fx = std::floor(sx);
                const double fy = std::floor(sy);
                const int x0 = static_cast<int>(fx);
                const int y0 = static_cast<int>(fy);
                const double tx = sx - fx;
                const double ty = sy - fy;
                for (int c = 0; c < ch; ++c) {
                    auto sample = [&](int x, int y) -> double {
                        if (x < 0 || x >= r.width || y < 0 || y >= r.height) return fill[c];
                        return r.at(x, y, c);
                    };
                    const double top = sample(x0, y0) * (1 - tx) + sample(x0 + 1, y0) * tx;
                    const double bot =
                        sample(x0, y0 + 1) * (1 - tx) + sample(x0 + 1, y0 + 1) * tx;
                    const double val = top * (1 - ty) + bot * ty;
                    px[c] = static_cast<std::uint8_t>(
                        std::clamp(std::lround(val), 0L, 255L));
                }
            }
        }
    }
    return out;
}

Raster load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode(bytes, format_from_path(path));
}

void save(const Raster& r, const std::string& path) {
    const std::vector<std::uint8_t> bytes = encode(r, format_from_path(path));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EncodeError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw EncodeError("short write to " + path);
}

}  // namespace obbtable::raster
