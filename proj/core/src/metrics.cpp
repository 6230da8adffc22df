#include "obbtable/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace obbtable::metrics {

void EvalConfig::check() const {
    if (!(t_iou > 0.0 && t_iou < 1.0)) {
        throw std::invalid_argument("EvalConfig: t_iou must lie in (0,1)");
    }
    if (!(t_theta > 0.0 && t_theta <= 180.0)) {
        throw std::invalid_argument("EvalConfig: t_theta must lie in (0,180]");
    }
}

namespace {

struct GtSlot {
    const annot::Instance* instance{nullptr};
    bool matched{false};
    bool has_angle{false};
    geometry::AngleDeg angle;
};

struct DetRef {
    const Detection* det{nullptr};
    const std::string* image_id{nullptr};
    std::size_t image_index{0};
    std::size_t det_index{0};
};

}  // namespace

MatchResult match_detections(const std::vector<ImageDetections>& dets,
                             const std::vector<ImageGroundTruth>& gts,
                             const EvalConfig& cfg) {
    cfg.check();

    std::map<std::string, std::vector<GtSlot>> gt_by_image;
    MatchResult result;
    for (const ImageGroundTruth& img : gts) {
        auto& slots = gt_by_image[img.image_id];
        for (const annot::Instance& inst : img.instances) {
            GtSlot slot;
            slot.instance = &inst;
            try {
                slot.angle = geometry::quad_angle(inst.quad);
                slot.has_angle = true;
            } catch (const geometry::DegenerateEdgeError&) {
            }
            slots.push_back(slot);
            ++result.total_ground_truth;
        }
    }

    std::vector<DetRef> order;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        for (std::size_t j = 0; j < dets[i].detections.size(); ++j) {
            order.push_back({&dets[i].detections[j], &dets[i].image_id, i, j});
        }
    }
    std::sort(order.begin(), order.end(), [](const DetRef& a, const DetRef& b) {
        if (a.det->score != b.det->score) return a.det->score > b.det->score;
        if (*a.image_id != *b.image_id) return *a.image_id < *b.image_id;
        return a.det_index < b.det_index;
    });

    for (const DetRef& ref : order) {
        const Detection& det = *ref.det;
        Verdict verdict;
        verdict.image_id = *ref.image_id;
        verdict.score = det.score;

        bool det_finite = true;
        for (const geometry::Point& p : det.quad.v) det_finite &= geometry::is_finite(p);

        geometry::AngleDeg det_angle;
        bool det_has_angle = false;
        if (det_finite) {
            try {
                det_angle = geometry::quad_angle(det.quad);
                det_has_angle = true;
            } catch (const geometry::DegenerateEdgeError&) {
            }
        }

        GtSlot* best = nullptr;
        double best_iou = 0.0;
        if (det_finite) {
            auto it = gt_by_image.find(*ref.image_id);
            if (it != gt_by_image.end()) {
                for (GtSlot& slot : it->second) {
                    if (slot.matched || slot.instance->category != det.category) continue;
                    const double iou = geometry::rotated_iou(det.quad, slot.instance->quad);
                    if (!(iou > cfg.t_iou)) continue;
                    if (!det_has_angle || !slot.has_angle ||
                        !(geometry::angle_diff(det_angle, slot.angle) < cfg.t_theta)) {
                        continue;  // angle gate fails; GT stays available
                    }
                    if (iou > best_iou) {
                        best_iou = iou;
                        best = &slot;
                    }
                }
            }
        }
        if (best) {
            best->matched = true;
            verdict.true_positive = true;
            ++result.tp;
        } else {
            ++result.fp;
        }
        result.verdicts.push_back(std::move(verdict));
    }
    result.fn = result.total_ground_truth - result.tp;
    return result;
}

std::pair<double, double> precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) {
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    return {precision, recall};
}

PRCurve pr_curve(const std::vector<ImageDetections>& dets,
                 const std::vector<ImageGroundTruth>& gts, const EvalConfig& cfg) {
    const MatchResult match = match_detections(dets, gts, cfg);

    PRCurve curve;
    curve.total_ground_truth = match.total_ground_truth;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < match.verdicts.size(); ++i) {
        const Verdict& v = match.verdicts[i];
        if (v.true_positive) ++tp; else ++fp;
        // emit one point per distinct score, after its last verdict
        if (i + 1 < match.verdicts.size() && match.verdicts[i + 1].score == v.score) continue;
        PRPoint pt;
        pt.threshold = v.score;
        pt.cum_tp = tp;
        pt.cum_fp = fp;
        pt.precision = static_cast<double>(tp) / (tp + fp);
        pt.recall = match.total_ground_truth == 0
                        ? 0.0
                        : static_cast<double>(tp) / match.total_ground_truth;
        curve.points.push_back(pt);
    }
    return curve;
}

namespace {

double max_precision_at(const PRCurve& curve, double recall_level) {
    double best = 0.0;
    for (const PRPoint& pt : curve.points) {
        if (pt.recall >= recall_level - 1e-12) best = std::max(best, pt.precision);
    }
    return best;
}

}  // namespace

double ap_11point(const PRCurve& curve) {
    double sum = 0.0;
    for (int i = 0; i <= 10; ++i) {
        sum += max_precision_at(curve, i / 10.0);
    }
    return sum / 11.0;
}

double ap_allpoint(const PRCurve& curve) {
    double ap = 0.0;
    double prev_recall = 0.0;
    for (const PRPoint& pt : curve.points) {
        if (pt.recall <= prev_recall) continue;
        ap += (pt.recall - prev_recall) * max_precision_at(curve, pt.recall);
        prev_recall = pt.recall;
    }
    return ap;
}

namespace {

ConfigResult run_config(const std::vector<ImageDetections>& dets,
                        const std::vector<ImageGroundTruth>& gts, const EvalConfig& cfg,
                        ApInterp interp) {
    ConfigResult result;
    result.config = cfg;
    const MatchResult match = match_detections(dets, gts, cfg);
    result.tp = match.tp;
    result.fp = match.fp;
    result.fn = match.fn;
    std::tie(result.precision, result.recall) =
        precision_recall(match.tp, match.fp, match.fn);
    const PRCurve curve = pr_curve(dets, gts, cfg);
    result.ap = interp == ApInterp::ElevenPoint ? ap_11point(curve) : ap_allpoint(curve);
    return result;
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

void describe(std::ostringstream& out, const char* name, const ConfigResult& r) {
    out << name << ": AP=" << fmt4(r.ap) << "  (T_IoU=" << annot::format_number(r.config.t_iou)
        << ", T_theta=" << annot::format_number(r.config.t_theta) << ", TP=" << r.tp
        << ", FP=" << r.fp << ", FN=" << r.fn << ", P=" << fmt4(r.precision)
        << ", R=" << fmt4(r.recall) << ")\n";
}

}  // namespace

std::string EvalReport::to_text() const {
    std::ostringstream out;
    describe(out, "AP50(T<90)", ap50_t90);
    describe(out, "AP75(T<40)", ap75_t40);
    for (const ConfigResult& r : extra) {
        const std::string name = "AP(T_IoU=" + annot::format_number(r.config.t_iou) +
                                 ",T_theta=" + annot::format_number(r.config.t_theta) + ")";
        describe(out, name.c_str(), r);
    }
    return out.str();
}

std::string EvalReport::to_key_values() const {
    std::ostringstream out;
    auto emit = [&](const std::string& prefix, const ConfigResult& r) {
        out << prefix << "=" << fmt4(r.ap) << '\n';
        out << prefix << "_tp=" << r.tp << '\n';
        out << prefix << "_fp=" << r.fp << '\n';
        out << prefix << "_fn=" << r.fn << '\n';
        out << prefix << "_precision=" << fmt4(r.precision) << '\n';
        out << prefix << "_recall=" << fmt4(r.recall) << '\n';
    };
    emit("ap50_t90", ap50_t90);
    emit("ap75_t40", ap75_t40);
    for (std::size_t i = 0; i < extra.size(); ++i) {
        emit("ap_custom" + (extra.size() > 1 ? std::to_string(i) : std::string()), extra[i]);
    }
    return out.str();
}

EvalReport evaluate(const std::vector<ImageDetections>& dets,
                    const std::vector<ImageGroundTruth>& gts,
                    const std::vector<EvalConfig>& extra_configs, ApInterp interp) {
    EvalReport report;
    report.ap50_t90 = run_config(dets, gts, {0.5, 90.0}, interp);
    report.ap75_t40 = run_config(dets, gts, {0.75, 40.0}, interp);
    for (const EvalConfig& cfg : extra_configs) {
        report.extra.push_back(run_config(dets, gts, cfg, interp));
    }
    return report;
}

Detection parse_detection_line(const std::string& line, int line_number) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    if (tokens.size() != 10) {
        throw annot::ParseError("expected 10 tokens (8 coordinates, category, score), got " +
                                    std::to_string(tokens.size()),
                                line_number);
    }
    double coords[8];
    for (int i = 0; i < 8; ++i) {
        auto [ptr, ec] =
            std::from_chars(tokens[i].data(), tokens[i].data() + tokens[i].size(), coords[i]);
        if (ec != std::errc() || ptr != tokens[i].data() + tokens[i].size()) {
            throw annot::ParseError("non-numeric coordinate: '" + tokens[i] + "'", line_number);
        }
    }
    Detection det;
    det.quad = Quad{{coords[0], coords[1]},
                    {coords[2], coords[3]},
                    {coords[4], coords[5]},
                    {coords[6], coords[7]}};
    det.category = tokens[8];
    const std::string& sc = tokens[9];
    auto [ptr, ec] = std::from_chars(sc.data(), sc.data() + sc.size(), det.score);
    if (ec != std::errc() || ptr != sc.data() + sc.size() || !std::isfinite(det.score) ||
        det.score < 0.0 || det.score > 1.0) {
        throw annot::ParseError("score must be a real in [0,1], got '" + sc + "'", line_number);
    }
    return det;
}

std::string emit_detection_line(const Detection& det) {
    std::string out;
    for (const geometry::Point& p : det.quad.v) {
        out += annot::format_number(p.x);
        out += ' ';
        out += annot::format_number(p.y);
        out += ' ';
    }
    out += det.category;
    out += ' ';
    out += annot::format_number(det.score);
    return out;
}

}  // namespace obbtable::metrics
