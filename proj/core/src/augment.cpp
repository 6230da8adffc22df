#include "obbtable/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace obbtable::augment {

namespace fs = std::filesystem;

AffineMap rotation_matrix(const RotationSpec& spec) {
    const double rad = spec.angle_deg * M_PI / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double cx = spec.center.x;
    const double cy = spec.center.y;
    // clockwise on screen (y-down)
    AffineMap m;
    m.m00 = c;
    m.m01 = -s;
    m.m02 = (1.0 - c) * cx + s * cy;
    m.m10 = s;
    m.m11 = c;
    m.m12 = -s * cx + (1.0 - c) * cy;
    return m;
}

BoundedMap adapt_bounds(const AffineMap& m, int width, int height) {
    const double c = std::abs(m.m00);
    const double s = std::abs(m.m01);
    const int new_w = static_cast<int>(std::floor(height * s + width * c + 0.5));
    const int new_h = static_cast<int>(std::floor(height * c + width * s + 0.5));
    AffineMap out = m;
    out.m02 += (new_w - width) * 0.5;
    out.m12 += (new_h - height) * 0.5;
    return {out, new_w, new_h};
}

namespace {

std::vector<annot::Instance> map_instances(const AffineMap& m,
                                           const std::vector<annot::Instance>& instances) {
    std::vector<annot::Instance> out;
    out.reserve(instances.size());
    for (const annot::Instance& inst : instances) {
        annot::Instance mapped = inst;
        mapped.quad = geometry::apply_affine(m, inst.quad);
        out.push_back(std::move(mapped));
    }
    return out;
}

}  // namespace

RotatedImage rotate_original(const raster::Raster& img, const RotationSpec& spec,
                             const std::vector<annot::Instance>& instances,
                             const raster::WarpOptions& opts) {
    const AffineMap m = rotation_matrix(spec);
    return {raster::warp_affine(img, m, img.width, img.height, opts),
            map_instances(m, instances)};
}

RotatedImage rotate_bounded(const raster::Raster& img, const RotationSpec& spec,
                            const std::vector<annot::Instance>& instances,
                            const raster::WarpOptions& opts) {
    const BoundedMap bm = adapt_bounds(rotation_matrix(spec), img.width, img.height);
    return {raster::warp_affine(img, bm.map, bm.new_width, bm.new_height, opts),
            map_instances(bm.map, instances)};
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double draw_angle(std::uint64_t seed, const std::string& image_id, double lo, double hi) {
    std::uint64_t z = seed ^ fnv1a64(image_id);
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

std::string obb_dir_name(const std::string& split) {
    return "ann_" + split + "_obbox";
}

std::string hbb_dir_name(const std::string& split) {
    // the published layout mixes "hbb" (train) and "hbbox" (test)
    return split == "test" ? "ann_test_hbbox" : "ann_" + split + "_hbb";
}

namespace {

struct WorkItem {
    std::string image_id;
    fs::path image_path;
    fs::path ann_path;
};

struct WorkResult {
    ManifestRecord record;
    std::vector<fs::path> emitted;  // relative to out_dir
};

std::vector<annot::Instance> read_dota_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw annot::ParseError("cannot open " + path.string());
    std::vector<annot::Instance> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(annot::parse_dota_line(line, line_no));
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("short write to " + path.string());
}

WorkResult process_one(const GenerationConfig& cfg, const WorkItem& item) {
    WorkResult result;
    result.record.image_id = item.image_id;

    if (item.ann_path.empty()) {
        result.record.skip_reason = "missing annotation file";
        return result;
    }

    raster::Raster img;
    try {
        img = raster::load(item.image_path.string());
    } catch (const std::exception& e) {
        result.record.skip_reason = std::string("unreadable image: ") + e.what();
        return result;
    }

    std::vector<annot::Instance> instances;
    try {
        instances = read_dota_file(item.ann_path);
    } catch (const std::exception& e) {
        result.record.skip_reason = std::string("bad annotation: ") + e.what();
        return result;
    }

    const double angle = draw_angle(cfg.seed, item.image_id, cfg.angle_lo, cfg.angle_hi);
    const RotationSpec spec = RotationSpec::for_image(angle, img.width, img.height);
    const RotatedImage rotated = rotate_bounded(img, spec, instances);

    result.record.angle_deg = angle;
    result.record.src_width = img.width;
    result.record.src_height = img.height;
    result.record.out_width = rotated.image.width;
    result.record.out_height = rotated.image.height;
    result.record.instance_count = rotated.instances.size();

    const fs::path img_rel =
        fs::path("images") / (item.image_id + item.image_path.extension().string());
    raster::save(rotated.image, (cfg.out_dir / img_rel).string());
    result.emitted.push_back(img_rel);

    auto emit_lines = [&](const fs::path& rel, bool hbb) {
        std::string text;
        for (const annot::Instance& inst : rotated.instances) {
            annot::Instance e = inst;
            if (hbb) e.quad = annot::obb_to_hbb(inst.quad);
            text += annot::emit_dota_line(e);
            text += '\n';
        }
        write_text(cfg.out_dir / rel, text);
        result.emitted.push_back(rel);
    };
    if (cfg.emit_obb) {
        emit_lines(fs::path(obb_dir_name(cfg.split)) / (item.image_id + ".txt"), false);
    }
    if (cfg.emit_hbb) {
        emit_lines(fs::path(hbb_dir_name(cfg.split)) / (item.image_id + ".txt"), true);
    }
    return result;
}

bool is_image_ext(std::string ext) {
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::uint64_t digest_files(const fs::path& root, std::vector<fs::path> rel_paths) {
    std::sort(rel_paths.begin(), rel_paths.end());
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](std::string_view data) {
        for (unsigned char c : data) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const fs::path& rel : rel_paths) {
        mix(rel.generic_string());
        mix(std::string_view("\0", 1));
        std::ifstream in(root / rel, std::ios::binary);
        std::string contents((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
        mix(contents);
        mix(std::string_view("\0", 1));
    }
    return h;
}

}  // namespace

std::string Manifest::to_text() const {
    std::ostringstream out;
    out << "seed: " << config.seed << '\n';
    out << "angle_lo: " << annot::format_number(config.angle_lo) << '\n';
    out << "angle_hi: " << annot::format_number(config.angle_hi) << '\n';
    out << "split: " << config.split << '\n';
    out << "emit_obb: " << (config.emit_obb ? 1 : 0) << '\n';
    out << "emit_hbb: " << (config.emit_hbb ? 1 : 0) << '\n';
    for (const ManifestRecord& rec : records) {
        out << "image: " << rec.image_id << '\n';
        if (!rec.skip_reason.empty()) {
            out << "  skipped: " << rec.skip_reason << '\n';
            continue;
        }
        out << "  angle: " << annot::format_number(rec.angle_deg) << '\n';
        out << "  source_size: " << rec.src_width << 'x' << rec.src_height << '\n';
        out << "  output_size: " << rec.out_width << 'x' << rec.out_height << '\n';
        out << "  instances: " << rec.instance_count << '\n';
    }
    out << "total_images: " << total_images << '\n';
    out << "total_instances: " << total_instances << '\n';
    out << "skipped: " << skipped << '\n';
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    out << "digest: fnv1a64:" << buf << '\n';
    return out.str();
}

Manifest generate_dataset(const GenerationConfig& cfg) {
    if (!(cfg.angle_lo < cfg.angle_hi) || cfg.angle_hi - cfg.angle_lo > 360.0) {
        throw std::invalid_argument("generate_dataset: angle range must satisfy lo < hi, hi - lo <= 360");
    }

    std::vector<WorkItem> items;
    if (fs::exists(cfg.src_img_dir)) {
        for (const auto& entry : fs::directory_iterator(cfg.src_img_dir)) {
            if (!entry.is_regular_file() || !is_image_ext(entry.path().extension().string())) {
                continue;
            }
            WorkItem item;
            item.image_id = entry.path().stem().string();
            item.image_path = entry.path();
            const fs::path ann = cfg.src_ann_dir / (item.image_id + ".txt");
            if (fs::exists(ann)) item.ann_path = ann;
            items.push_back(std::move(item));
        }
    }
    std::sort(items.begin(), items.end(),
              [](const WorkItem& a, const WorkItem& b) { return a.image_id < b.image_id; });

    fs::create_directories(cfg.out_dir / "images");
    if (cfg.emit_obb) fs::create_directories(cfg.out_dir / obb_dir_name(cfg.split));
    if (cfg.emit_hbb) fs::create_directories(cfg.out_dir / hbb_dir_name(cfg.split));

    std::vector<WorkResult> results(items.size());
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1 || items.size() <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = process_one(cfg, items[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        const int n = std::min<std::size_t>(jobs, items.size());
        workers.reserve(n);
        for (int t = 0; t < n; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < items.size();
                     i = next.fetch_add(1)) {
                    results[i] = process_one(cfg, items[i]);
                }
            });
        }
        for (std::thread& w : workers) w.join();
    }

    Manifest manifest;
    manifest.config = cfg;
    std::vector<fs::path> emitted;
    for (WorkResult& r : results) {
        if (r.record.skip_reason.empty()) {
            manifest.total_images += 1;
            manifest.total_instances += r.record.instance_count;
        } else {
            manifest.skipped += 1;
        }
        emitted.insert(emitted.end(), r.emitted.begin(), r.emitted.end());
        manifest.records.push_back(std::move(r.record));
    }
    manifest.digest = digest_files(cfg.out_dir, std::move(emitted));
    write_text(cfg.out_dir / "manifest.txt", manifest.to_text());
    return manifest;
}

}  // namespace obbtable::augment
