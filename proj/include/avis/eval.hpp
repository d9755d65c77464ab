#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "avis/dataset.hpp"

namespace avis::eval {

/// 0.50, 0.55, ..., 0.95.
std::vector<double> default_iou_thresholds();

struct EvalConfig {
    std::vector<double> iou_thresholds = default_iou_thresholds();
    int recall_points = 101;
    std::vector<int> ar_caps{1, 10};
    // AR caps retain the top-k hypotheses per video across categories; set
    // this to scope the cap per (video, category) instead.
    bool ar_cap_per_category = false;
    std::optional<double> score_floor;
    int workers = 1;
};

/// Throws Error unless thresholds are strictly increasing within (0,1],
/// recall_points >= 2, caps are positive, and workers >= 1.
void validate_config(const EvalConfig& config);

/// Hypothesis handle in rank order: descending score, ascending id.
struct RankedHypothesis {
    int id = 0;
    double score = 0.0;
};

struct MatchRow {
    std::optional<int> gt_index;
    double iou = 0.0;
};

/// Greedy matching at one threshold. Hypotheses must arrive in rank order;
/// each takes the unmatched ground truth of highest IoU >= threshold (IoU
/// ties resolved toward the lowest ground-truth index). Returns one row per
/// hypothesis in the given order; unmatched rows are false positives.
std::vector<MatchRow> match(int gt_count, const std::vector<RankedHypothesis>& ranked,
                            const std::function<double(int rank, int gt_index)>& iou_oracle,
                            double threshold);

struct PooledDetection {
    double score = 0.0;
    std::int64_t id = 0;  // global tie-break id
    bool tp = false;
};

/// Interpolated precision at `recall_points` evenly spaced recall values on
/// [0,1]: detections are sorted by (score desc, id asc), the raw precision
/// curve gets the right-max envelope, and each grid point reads the envelope
/// at the first rank reaching that recall (0 past the highest recall).
/// Throws Error when gt_count is zero.
std::vector<double> pr_curve(std::vector<PooledDetection> detections, std::uint64_t gt_count,
                             int recall_points);

struct MetricsReport {
    bool has_metrics = false;
    std::string diagnostic;

    // Percentages in [0, 100].
    std::optional<double> ap;
    std::optional<double> ap50;
    std::optional<double> ap75;
    std::vector<std::pair<int, double>> average_recall;   // (cap, value), config order
    std::vector<std::pair<int, double>> per_category_ap;  // (category id, value), ascending

    // Config echo (workers intentionally omitted: results never depend on it).
    std::vector<double> iou_thresholds;
    int recall_points = 0;
    std::vector<int> ar_caps;
    bool ar_cap_per_category = false;
    std::optional<double> score_floor;

    int video_count = 0;
    int gt_instance_count = 0;
    int hypothesis_count = 0;
    int category_count = 0;  // categories with ground truth
};

/// Full metric suite: AP averaged over IoU thresholds and categories, AP at
/// 0.50/0.75, and AR at each cap of retained hypotheses per video.
MetricsReport evaluate(const io::DatasetManifest& manifest,
                       const std::vector<io::Hypothesis>& hypotheses, const EvalConfig& config);

nlohmann::ordered_json report_to_json(const MetricsReport& report);
std::string serialize_report(const MetricsReport& report);

/// One-row table in the AP / AP50 / AP75 / AR1 / AR10 layout.
std::string render_table(const MetricsReport& report);

}  // namespace avis::eval
