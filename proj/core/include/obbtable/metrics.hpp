#pragma once

#include <map>
#include <string>
#include <vector>

#include "obbtable/annot.hpp"
#include "obbtable/geometry.hpp"

namespace obbtable::metrics {

using geometry::Quad;

struct Detection {
    Quad quad;
    std::string category{"table"};
    double score{0.0};
};

/// Detections/ground truth grouped per image; image ids drive matching
/// tie-breaks, so ids should be unique.
struct ImageDetections {
    std::string image_id;
    std::vector<Detection> detections;
};

struct ImageGroundTruth {
    std::string image_id;
    std::vector<annot::Instance> instances;
};

struct EvalConfig {
    double t_iou{0.5};     // in (0,1); TP requires IoU strictly above
    double t_theta{90.0};  // degrees in (0,180]; TP requires angle diff strictly below

    void check() const;
};

/// One detection's fate in score-descending order.
struct Verdict {
    std::string image_id;
    double score{0.0};
    bool true_positive{false};
};

struct MatchResult {
    std::vector<Verdict> verdicts;  // score-descending (ties: image_id, input order)
    std::size_t total_ground_truth{0};
    std::size_t tp{0}, fp{0}, fn{0};
};

/// Greedy score-descending matching: a detection is TP iff an unmatched
/// same-image same-category GT has IoU > t_iou and angle difference
/// < t_theta; it consumes the qualifying GT with highest IoU. An
/// angle-gate failure does not consume the GT.
MatchResult match_detections(const std::vector<ImageDetections>& dets,
                             const std::vector<ImageGroundTruth>& gts,
                             const EvalConfig& cfg);

/// Eq.-style ratios; 0/0 is defined as 0.
std::pair<double, double> precision_recall(std::size_t tp, std::size_t fp, std::size_t fn);

struct PRPoint {
    double threshold{0.0};
    double precision{0.0};
    double recall{0.0};
    std::size_t cum_tp{0};
    std::size_t cum_fp{0};
};

struct PRCurve {
    std::vector<PRPoint> points;  // threshold descending
    std::size_t total_ground_truth{0};
};

PRCurve pr_curve(const std::vector<ImageDetections>& dets,
                 const std::vector<ImageGroundTruth>& gts, const EvalConfig& cfg);

/// 11-point interpolated AP: mean over recall levels {0.0,0.1,...,1.0} of
/// the max precision among points with recall >= r (0 when none).
double ap_11point(const PRCurve& curve);

/// All-points interpolated AP (area under the interpolated PR envelope).
double ap_allpoint(const PRCurve& curve);

struct ConfigResult {
    EvalConfig config;
    std::size_t tp{0}, fp{0}, fn{0};  // at threshold 0
    double precision{0.0};
    double recall{0.0};
    double ap{0.0};
};

struct EvalReport {
    ConfigResult ap50_t90;
    ConfigResult ap75_t40;
    std::vector<ConfigResult> extra;  // custom configs, when requested

    std::string to_text() const;
    std::string to_key_values() const;
};

enum class ApInterp { ElevenPoint, AllPoint };

EvalReport evaluate(const std::vector<ImageDetections>& dets,
                    const std::vector<ImageGroundTruth>& gts,
                    const std::vector<EvalConfig>& extra_configs = {},
                    ApInterp interp = ApInterp::ElevenPoint);

/// One text line: eight coordinates, category, score in [0,1].
Detection parse_detection_line(const std::string& line, int line_number = 0);

std::string emit_detection_line(const Detection& det);

}  // namespace obbtable::metrics
