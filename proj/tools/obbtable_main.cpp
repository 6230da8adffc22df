// obbtable: convert, validate, generate, evaluate and render oriented
// table annotations (DOTA-style text lines + competition XML).

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "obbtable/annot.hpp"
#include "obbtable/augment.hpp"
#include "obbtable/metrics.hpp"
#include "obbtable/raster.hpp"

namespace fs = std::filesystem;
using namespace obbtable;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitHard = 1;
constexpr int kExitPartial = 2;

struct GlobalOpts {
    bool quiet{false};
    int jobs{1};
};

std::ostream& info(const GlobalOpts& g) {
    static std::ostringstream devnull;
    if (g.quiet) {
        devnull.str({});
        return devnull;
    }
    return std::cout;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ext) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("short write to " + path.string());
}

/// Ordered parallel map: results come back in input order whatever the
/// worker count.
template <typename T, typename Fn>
auto parallel_map(const std::vector<T>& items, int jobs, Fn fn)
    -> std::vector<decltype(fn(items[0]))> {
    std::vector<decltype(fn(items[0]))> results(items.size());
    jobs = std::max(1, jobs);
    if (jobs == 1 || items.size() <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < std::min<std::size_t>(jobs, items.size()); ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
                results[i] = fn(items[i]);
            }
        });
    }
    for (std::thread& w : workers) w.join();
    return results;
}

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

// ---- convert ----

int cmd_convert(const GlobalOpts& g, const fs::path& xml_dir, const fs::path& out_dir,
                bool hbb) {
    if (!fs::is_directory(xml_dir)) {
        std::cerr << "error: not a readable directory: " << xml_dir << "\n";
        return kExitHard;
    }
    fs::create_directories(out_dir);
    const std::vector<fs::path> files = list_files(xml_dir, ".xml");

    struct Result {
        std::size_t instances{0};
        std::string error;
    };
    const auto results = parallel_map(files, g.jobs, [&](const fs::path& path) -> Result {
        Result r;
        try {
            annot::ImageAnnotation ann =
                annot::parse_icdar_xml(read_file(path), path.stem().string());
            std::string text;
            for (const annot::Instance& inst : ann.instances) {
                annot::Instance e = inst;
                if (hbb) e.quad = annot::obb_to_hbb(inst.quad);
                text += annot::emit_dota_line(e);
                text += '\n';
            }
            write_file(out_dir / (path.stem().string() + ".txt"), text);
            r.instances = ann.instances.size();
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    });

    std::size_t converted = 0, instances = 0, failed = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (results[i].error.empty()) {
            ++converted;
            instances += results[i].instances;
        } else {
            ++failed;
            std::cerr << "skip " << files[i].filename().string() << ": " << results[i].error
                      << "\n";
        }
    }
    info(g) << converted << " files, " << instances << " instances\n";
    return failed == 0 ? kExitOk : kExitPartial;
}

// ---- validate ----

int cmd_validate(const GlobalOpts& g, const fs::path& ann_dir, const fs::path& img_dir) {
    if (!fs::is_directory(ann_dir)) {
        std::cerr << "error: not a readable directory: " << ann_dir << "\n";
        return kExitHard;
    }
    bool any_finding = false;
    bool any_parse_error = false;
    for (const fs::path& path : list_files(ann_dir, ".txt")) {
        annot::ImageAnnotation ann;
        ann.image_id = path.stem().string();
        try {
            ann.instances = read_dota_file(path);
        } catch (const annot::ParseError& e) {
            std::cout << path.filename().string() << ":" << e.line_number << ": parse error: "
                      << e.what() << "\n";
            any_parse_error = true;
            continue;
        }
        if (!img_dir.empty()) {
            for (const char* ext : {".png", ".jpg", ".jpeg"}) {
                const fs::path img = img_dir / (ann.image_id + ext);
                if (fs::exists(img)) {
                    try {
                        const raster::Raster r = raster::load(img.string());
                        ann.image_size = annot::ImageSize{r.width, r.height};
                    } catch (const std::exception&) {
                    }
                    break;
                }
            }
        }
        const annot::ValidationReport report = annot::validate(ann);
        for (const annot::Finding& f : report.findings) {
            std::cout << path.filename().string() << ": instance " << f.index << ": "
                      << annot::finding_kind_name(f.kind) << ": " << f.detail << "\n";
            any_finding = true;
        }
    }
    if (any_parse_error || any_finding) return kExitPartial;
    info(g) << "all clean\n";
    return kExitOk;
}

// ---- generate ----

int cmd_generate(const GlobalOpts& g, augment::GenerationConfig cfg) {
    if (!fs::is_directory(cfg.src_img_dir) || !fs::is_directory(cfg.src_ann_dir)) {
        std::cerr << "error: source directories must exist\n";
        return kExitHard;
    }
    cfg.jobs = g.jobs;
    const augment::Manifest manifest = augment::generate_dataset(cfg);
    info(g) << "manifest: " << (cfg.out_dir / "manifest.txt").string() << "\n";
    info(g) << manifest.total_images << " images, " << manifest.total_instances
            << " instances";
    if (manifest.skipped > 0) info(g) << ", " << manifest.skipped << " skipped";
    info(g) << "\n";
    if (manifest.skipped > 0) {
        for (const augment::ManifestRecord& rec : manifest.records) {
            if (!rec.skip_reason.empty()) {
                std::cerr << "skip " << rec.image_id << ": " << rec.skip_reason << "\n";
            }
        }
        return kExitPartial;
    }
    return kExitOk;
}

// ---- evaluate ----

int cmd_evaluate(const GlobalOpts& g, const fs::path& det_dir, const fs::path& gt_dir,
                 double t_iou, double t_theta, bool custom_cfg, const std::string& ap_interp,
                 fs::path report_path) {
    if (!fs::is_directory(det_dir) || !fs::is_directory(gt_dir)) {
        std::cerr << "error: detection and ground-truth directories must exist\n";
        return kExitHard;
    }
    bool partial = false;

    std::vector<metrics::ImageGroundTruth> gts;
    std::vector<metrics::ImageDetections> dets;
    std::set<std::string> gt_ids, det_ids;
    for (const fs::path& path : list_files(gt_dir, ".txt")) gt_ids.insert(path.stem().string());
    for (const fs::path& path : list_files(det_dir, ".txt")) det_ids.insert(path.stem().string());

    for (const std::string& id : gt_ids) {
        if (!det_ids.count(id)) {
            std::cerr << "missing detection file for " << id << "\n";
            partial = true;
        }
        metrics::ImageGroundTruth gt;
        gt.image_id = id;
        try {
            gt.instances = read_dota_file(gt_dir / (id + ".txt"));
        } catch (const annot::ParseError& e) {
            std::cerr << id << ".txt: parse error: " << e.what() << "\n";
            partial = true;
            continue;
        }
        gts.push_back(std::move(gt));
    }
    for (const std::string& id : det_ids) {
        if (!gt_ids.count(id)) {
            std::cerr << "missing ground-truth file for " << id << "\n";
            partial = true;
        }
        metrics::ImageDetections det;
        det.image_id = id;
        std::ifstream in(det_dir / (id + ".txt"));
        std::string line;
        int line_no = 0;
        bool bad = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                det.detections.push_back(metrics::parse_detection_line(line, line_no));
            } catch (const annot::ParseError& e) {
                std::cerr << id << ".txt:" << line_no << ": parse error: " << e.what() << "\n";
                partial = true;
                bad = true;
                break;
            }
        }
        if (!bad) dets.push_back(std::move(det));
    }

    std::vector<metrics::EvalConfig> extra;
    if (custom_cfg) extra.push_back({t_iou, t_theta});
    const metrics::ApInterp interp = ap_interp == "all" ? metrics::ApInterp::AllPoint
                                                        : metrics::ApInterp::ElevenPoint;
    const metrics::EvalReport report = metrics::evaluate(dets, gts, extra, interp);
    std::cout << report.to_text();
    write_file(report_path, report.to_key_values());
    info(g) << "report: " << report_path.string() << "\n";
    return partial ? kExitPartial : kExitOk;
}

// ---- render ----

int cmd_render(const GlobalOpts& g, const fs::path& img_path, const fs::path& ann_path,
               const fs::path& out_path) {
    if (!fs::exists(img_path) || !fs::exists(ann_path)) {
        std::cerr << "error: image and annotation files must exist\n";
        return kExitHard;
    }
    raster::Raster img;
    std::vector<annot::Instance> instances;
    try {
        img = raster::load(img_path.string());
        instances = read_dota_file(ann_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitHard;
    }

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" "
           "xmlns:xlink=\"http://www.w3.org/1999/xlink\" width=\"" << img.width
        << "\" height=\"" << img.height << "\" viewBox=\"0 0 " << img.width << ' '
        << img.height << "\">\n";
    svg << "  <image xlink:href=\"" << img_path.string() << "\" x=\"0\" y=\"0\" width=\""
        << img.width << "\" height=\"" << img.height << "\"/>\n";
    for (const annot::Instance& inst : instances) {
        const geometry::Quad& q = inst.quad;
        svg << "  <polygon points=\"";
        for (int i = 0; i < 4; ++i) {
            if (i) svg << ' ';
            svg << annot::format_number(q.v[i].x) << ',' << annot::format_number(q.v[i].y);
        }
        svg << "\" fill=\"none\" stroke=\"#00a43c\" stroke-width=\"3\"/>\n";
        // direction cue: the A->B edge and a marker on A
        svg << "  <line x1=\"" << annot::format_number(q.a().x) << "\" y1=\""
            << annot::format_number(q.a().y) << "\" x2=\"" << annot::format_number(q.b().x)
            << "\" y2=\"" << annot::format_number(q.b().y)
            << "\" stroke=\"#ff8c00\" stroke-width=\"4\"/>\n";
        svg << "  <circle cx=\"" << annot::format_number(q.a().x) << "\" cy=\""
            << annot::format_number(q.a().y) << "\" r=\"6\" fill=\"#d40000\"/>\n";
    }
    svg << "</svg>\n";
    write_file(out_path, svg.str());
    info(g) << "wrote " << out_path.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Oriented table annotation toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    if (const char* env = std::getenv("OBBTABLE_JOBS")) {
        g.jobs = std::max(1, std::atoi(env));
    }
    app.add_flag("--quiet", g.quiet, "Suppress informational output");
    app.add_option("--jobs", g.jobs, "Parallel worker count")->check(CLI::PositiveNumber);

    // convert
    auto* convert = app.add_subcommand("convert", "XML annotations to DOTA-style txt");
    fs::path xml_dir, conv_out_dir;
    bool conv_hbb = false, conv_obb = false;
    convert->add_option("--xml-dir", xml_dir, "Directory of XML annotation files")->required();
    convert->add_option("--out-dir", conv_out_dir, "Output directory for txt files")->required();
    auto* hbb_flag = convert->add_flag("--hbb", conv_hbb, "Emit axis-aligned envelopes");
    convert->add_flag("--obb", conv_obb, "Emit quads as written (default)")->excludes(hbb_flag);

    // validate
    auto* validate = app.add_subcommand("validate", "Check annotation constraints");
    fs::path ann_dir, img_dir;
    validate->add_option("--ann-dir", ann_dir, "Directory of txt annotation files")->required();
    validate->add_option("--img-dir", img_dir, "Directory of matching images (bounds check)");

    // generate
    auto* generate = app.add_subcommand("generate", "Build a rotated dataset");
    augment::GenerationConfig cfg;
    std::string angle_range = "0,360";
    std::string emit = "hbb,obb";
    generate->add_option("--src-img", cfg.src_img_dir, "Source image directory")->required();
    generate->add_option("--src-ann", cfg.src_ann_dir, "Source annotation directory")->required();
    generate->add_option("--out", cfg.out_dir, "Output dataset root")->required();
    generate->add_option("--seed", cfg.seed, "Generation seed");
    generate->add_option("--angle-range", angle_range, "Rotation range \"lo,hi\" in degrees");
    generate->add_option("--emit", emit, "Comma-separated subset of hbb,obb");
    generate->add_option("--split", cfg.split, "Split name (train|test), selects folder names")
        ->check(CLI::IsMember({"train", "test"}));

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Angle-aware AP evaluation");
    fs::path det_dir, gt_dir, report_path = "eval_report.txt";
    double t_iou = 0.5, t_theta = 90.0;
    std::string ap_interp = "11point";
    evaluate->add_option("--det-dir", det_dir, "Detection txt directory")->required();
    evaluate->add_option("--gt-dir", gt_dir, "Ground-truth txt directory")->required();
    auto* iou_opt = evaluate->add_option("--t-iou", t_iou, "Custom IoU threshold");
    auto* theta_opt = evaluate->add_option("--t-theta", t_theta, "Custom angle threshold");
    evaluate->add_option("--ap-interp", ap_interp, "AP interpolation: 11point or all")
        ->check(CLI::IsMember({"11point", "all"}));
    evaluate->add_option("--report", report_path, "Machine-readable report path");

    // render
    auto* render = app.add_subcommand("render", "SVG overlay of one annotated image");
    fs::path r_img, r_ann, r_out;
    render->add_option("--img", r_img, "Image file")->required();
    render->add_option("--ann", r_ann, "Annotation txt file")->required();
    render->add_option("--out", r_out, "Output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitHard;
    }

    try {
        if (*convert) return cmd_convert(g, xml_dir, conv_out_dir, conv_hbb);
        if (*validate) return cmd_validate(g, ann_dir, img_dir);
        if (*generate) {
            const auto comma = angle_range.find(',');
            if (comma == std::string::npos) {
                std::cerr << "error: --angle-range expects \"lo,hi\"\n";
                return kExitHard;
            }
            cfg.angle_lo = std::stod(angle_range.substr(0, comma));
            cfg.angle_hi = std::stod(angle_range.substr(comma + 1));
            if (cfg.angle_hi == cfg.angle_lo) {
                // identity-rotation shorthand, e.g. --angle-range "0,0"
                cfg.angle_hi = std::nextafter(cfg.angle_hi, cfg.angle_hi + 1.0);
            }
            cfg.emit_hbb = emit.find("hbb") != std::string::npos;
            cfg.emit_obb = emit.find("obb") != std::string::npos;
            if (!cfg.emit_hbb && !cfg.emit_obb) {
                std::cerr << "error: --emit must name hbb and/or obb\n";
                return kExitHard;
            }
            return cmd_generate(g, cfg);
        }
        if (*evaluate) {
            return cmd_evaluate(g, det_dir, gt_dir, t_iou, t_theta,
                                iou_opt->count() > 0 || theta_opt->count() > 0, ap_interp,
                                report_path);
        }
        if (*render) return cmd_render(g, r_img, r_ann, r_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitHard;
    }
    return kExitHard;
}
