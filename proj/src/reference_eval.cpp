// Brute-force reference evaluator. Deliberately naive: dense pixel grids,
// exhaustive matching replay per threshold, per-cap refiltering and
// rematching, direct precision-recall sampling. Shares the report types with
// eval but none of its computation paths.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "avis/errors.hpp"
#include "avis/synth.hpp"

namespace avis::synth {

namespace {

constexpr int kMaxVideos = 50;
constexpr int kMaxInstancesPerVideo = 6;

std::vector<std::uint8_t> dense(const FrameMask& mask) {
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(mask.height) * mask.width, 0);
    std::size_t at = 0;
    bool value = false;
    for (std::uint32_t c : mask.counts) {
        for (std::uint32_t k = 0; k < c; ++k) grid[at++] = value ? 1 : 0;
        value = !value;
    }
    return grid;
}

double dense_track_iou(const MaskTrack& gt, const MaskTrack& hyp) {
    std::uint64_t inter = 0, uni = 0;
    for (int t = 0; t < gt.frame_count; ++t) {
        const auto& a = gt.masks[t];
        const auto& b = hyp.masks[t];
        if (!a && !b) continue;
        if (a && b) {
            const auto ga = dense(*a), gb = dense(*b);
            for (std::size_t p = 0; p < ga.size(); ++p) {
                if (ga[p] && gb[p]) ++inter;
                if (ga[p] || gb[p]) ++uni;
            }
        } else {
            for (std::uint8_t px : dense(a ? *a : *b)) uni += px ? 1 : 0;
        }
    }
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct Detection {
    int id = 0;  // index into the input hypothesis list
    double score = 0.0;
};

bool rank_before(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

// Score-order replay at one threshold: each detection takes the best still-free
// ground truth; returns tp flags aligned with `detections`.
std::vector<bool> replay_matching(const std::vector<Detection>& detections,
                                  const std::vector<int>& gt_ids,
                                  const std::map<std::pair<int, int>, double>& iou,
                                  double threshold) {
    std::vector<bool> tp(detections.size(), false);
    std::vector<bool> used(gt_ids.size(), false);
    for (std::size_t d = 0; d < detections.size(); ++d) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gt_ids.size(); ++g) {
            if (used[g]) continue;
            const auto it = iou.find({detections[d].id, gt_ids[g]});
            const double value = it == iou.end() ? 0.0 : it->second;
            if (value < threshold) continue;
            if (best < 0 || value > best_iou) {
                best = static_cast<int>(g);
                best_iou = value;
            }
        }
        if (best >= 0) {
            used[best] = true;
            tp[d] = true;
        }
    }
    return tp;
}

}  // namespace

eval::MetricsReport reference_evaluate(const io::DatasetManifest& manifest,
                                       const std::vector<io::Hypothesis>& hypotheses,
                                       const eval::EvalConfig& config) {
    eval::validate_config(config);
    if (static_cast<int>(manifest.videos.size()) > kMaxVideos) {
        throw OracleScaleError("reference evaluator handles at most " +
                               std::to_string(kMaxVideos) + " videos");
    }
    std::map<int, int> instances_of_video;
    for (const auto& track : manifest.tracks) ++instances_of_video[track.video_id];
    for (const auto& [video_id, count] : instances_of_video) {
        if (count > kMaxInstancesPerVideo) {
            throw OracleScaleError("reference evaluator handles at most " +
                                   std::to_string(kMaxInstancesPerVideo) +
                                   " instances per video (video " + std::to_string(video_id) +
                                   " has " + std::to_string(count) + ")");
        }
    }

    eval::MetricsReport report;
    report.iou_thresholds = config.iou_thresholds;
    report.recall_points = config.recall_points;
    report.ar_caps = config.ar_caps;
    report.ar_cap_per_category = config.ar_cap_per_category;
    report.score_floor = config.score_floor;
    report.video_count = static_cast<int>(manifest.videos.size());
    report.gt_instance_count = static_cast<int>(manifest.tracks.size());

    std::vector<Detection> retained;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        if (config.score_floor && hypotheses[i].score < *config.score_floor) continue;
        retained.push_back(Detection{static_cast<int>(i), hypotheses[i].score});
    }
    report.hypothesis_count = static_cast<int>(retained.size());

    if (manifest.videos.empty() || manifest.tracks.empty()) {
        report.diagnostic = manifest.videos.empty() ? "no videos to evaluate"
                                                    : "no ground-truth instances to evaluate";
        return report;
    }

    // IoU of every hypothesis/ground-truth pair sharing video and category.
    std::map<std::pair<int, int>, double> iou;  // (hyp id, track index)
    for (const Detection& det : retained) {
        const auto& hyp = hypotheses[det.id];
        for (std::size_t g = 0; g < manifest.tracks.size(); ++g) {
            const auto& track = manifest.tracks[g];
            if (track.video_id != hyp.video_id || track.category_id != hyp.category_id) continue;
            iou[{det.id, static_cast<int>(g)}] = dense_track_iou(track.track, hyp.track);
        }
    }

    std::map<int, std::uint64_t> gt_total;  // per category
    for (const auto& track : manifest.tracks) ++gt_total[track.category_id];
    std::vector<int> categories;
    for (const auto& [category_id, count] : gt_total) categories.push_back(category_id);
    std::sort(categories.begin(), categories.end());
    report.category_count = static_cast<int>(categories.size());

    std::vector<int> video_ids;
    for (const auto& video : manifest.videos) video_ids.push_back(video.id);
    std::sort(video_ids.begin(), video_ids.end());

    const std::size_t threshold_count = config.iou_thresholds.size();
    const std::size_t cap_count = config.ar_caps.size();

    std::map<int, std::vector<double>> ap;  // per category, per threshold
    std::vector<std::map<int, std::vector<double>>> recall_at_cap(cap_count);

    for (int c : categories) {
        ap[c] = std::vector<double>(threshold_count, 0.0);
        for (std::size_t k = 0; k < cap_count; ++k) {
            recall_at_cap[k][c] = std::vector<double>(threshold_count, 0.0);
        }
        const double n_gt = static_cast<double>(gt_total[c]);

        for (std::size_t t = 0; t < threshold_count; ++t) {
            const double threshold = config.iou_thresholds[t];

            // Pool matched flags across videos, then sort the pool by rank.
            std::vector<std::pair<Detection, bool>> pooled;
            for (int video_id : video_ids) {
                std::vector<Detection> local;
                for (const Detection& det : retained) {
                    const auto& hyp = hypotheses[det.id];
                    if (hyp.video_id == video_id && hyp.category_id == c) local.push_back(det);
                }
                std::sort(local.begin(), local.end(), rank_before);
                std::vector<int> gt_ids;
                for (std::size_t g = 0; g < manifest.tracks.size(); ++g) {
                    if (manifest.tracks[g].video_id == video_id &&
                        manifest.tracks[g].category_id == c) {
                        gt_ids.push_back(static_cast<int>(g));
                    }
                }
                const auto tp = replay_matching(local, gt_ids, iou, threshold);
                for (std::size_t d = 0; d < local.size(); ++d) {
                    pooled.emplace_back(local[d], tp[d]);
                }
            }
            std::sort(pooled.begin(), pooled.end(),
                      [](const auto& a, const auto& b) { return rank_before(a.first, b.first); });

            // Raw precision/recall at every rank.
            const std::size_t n = pooled.size();
            std::vector<double> precision(n), recall(n);
            std::uint64_t tp_count = 0;
            for (std::size_t d = 0; d < n; ++d) {
                if (pooled[d].second) ++tp_count;
                precision[d] = static_cast<double>(tp_count) / static_cast<double>(d + 1);
                recall[d] = static_cast<double>(tp_count) / n_gt;
            }

            // Sample the envelope directly: best precision at or beyond each
            // recall level.
            double ap_sum = 0.0;
            for (int k = 0; k < config.recall_points; ++k) {
                const double level =
                    static_cast<double>(k) / static_cast<double>(config.recall_points - 1);
                double best = 0.0;
                for (std::size_t d = 0; d < n; ++d) {
                    if (recall[d] >= level && precision[d] > best) best = precision[d];
                }
                ap_sum += best;
            }
            ap[c][t] = ap_sum / static_cast<double>(config.recall_points);

            // AR@k by refiltering to each video's top-k and rematching.
            for (std::size_t k = 0; k < cap_count; ++k) {
                std::uint64_t matched = 0;
                for (int video_id : video_ids) {
                    std::vector<Detection> in_video;
                    for (const Detection& det : retained) {
                        if (hypotheses[det.id].video_id != video_id) continue;
                        if (config.ar_cap_per_category && hypotheses[det.id].category_id != c) {
                            continue;
                        }
                        in_video.push_back(det);
                    }
                    std::sort(in_video.begin(), in_video.end(), rank_before);
                    if (in_video.size() > static_cast<std::size_t>(config.ar_caps[k])) {
                        in_video.resize(static_cast<std::size_t>(config.ar_caps[k]));
                    }
                    std::vector<Detection> local;
                    for (const Detection& det : in_video) {
                        if (hypotheses[det.id].category_id == c) local.push_back(det);
                    }
                    std::vector<int> gt_ids;
                    for (std::size_t g = 0; g < manifest.tracks.size(); ++g) {
                        if (manifest.tracks[g].video_id == video_id &&
                            manifest.tracks[g].category_id == c) {
                            gt_ids.push_back(static_cast<int>(g));
                        }
                    }
                    for (bool hit : replay_matching(local, gt_ids, iou, threshold)) {
                        if (hit) ++matched;
                    }
                }
                recall_at_cap[k][c][t] = static_cast<double>(matched) / n_gt;
            }
        }
    }

    // Same aggregation order as the production evaluator: categories first,
    // thresholds second.
    std::vector<double> ap_by_threshold(threshold_count, 0.0);
    for (std::size_t t = 0; t < threshold_count; ++t) {
        double sum = 0.0;
        for (int c : categories) sum += ap[c][t];
        ap_by_threshold[t] = sum / static_cast<double>(categories.size());
    }
    double ap_total = 0.0;
    for (double value : ap_by_threshold) ap_total += value;

    report.has_metrics = true;
    report.ap = 100.0 * (ap_total / static_cast<double>(threshold_count));
    for (std::size_t t = 0; t < threshold_count; ++t) {
        if (std::fabs(config.iou_thresholds[t] - 0.50) < 1e-9) {
            report.ap50 = 100.0 * ap_by_threshold[t];
        }
        if (std::fabs(config.iou_thresholds[t] - 0.75) < 1e-9) {
            report.ap75 = 100.0 * ap_by_threshold[t];
        }
    }
    for (std::size_t k = 0; k < cap_count; ++k) {
        double total = 0.0;
        for (std::size_t t = 0; t < threshold_count; ++t) {
            double sum = 0.0;
            for (int c : categories) sum += recall_at_cap[k][c][t];
            total += sum / static_cast<double>(categories.size());
        }
        report.average_recall.emplace_back(config.ar_caps[k],
                                           100.0 * (total / static_cast<double>(threshold_count)));
    }
    for (int c : categories) {
        double sum = 0.0;
        for (double value : ap[c]) sum += value;
        report.per_category_ap.emplace_back(
            c, 100.0 * (sum / static_cast<double>(threshold_count)));
    }
    return report;
}

}  // namespace avis::synth
