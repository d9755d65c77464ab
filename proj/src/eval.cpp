#include "avis/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

#include "avis/errors.hpp"
#include "avis/mask.hpp"

namespace avis::eval {

using ojson = nlohmann::ordered_json;

std::vector<double> default_iou_thresholds() {
    std::vector<double> thresholds;
    for (int i = 0; i < 10; ++i) thresholds.push_back((50 + 5 * i) / 100.0);
    return thresholds;
}

void validate_config(const EvalConfig& config) {
    if (config.iou_thresholds.empty()) throw Error("config: need at least one IoU threshold");
    double prev = 0.0;
    for (double t : config.iou_thresholds) {
        if (!(t > 0.0 && t <= 1.0)) throw Error("config: IoU thresholds must lie in (0,1]");
        if (!(t > prev)) throw Error("config: IoU thresholds must be strictly increasing");
        prev = t;
    }
    if (config.recall_points < 2) throw Error("config: recall_points must be at least 2");
    for (int cap : config.ar_caps) {
        if (cap <= 0) throw Error("config: AR caps must be positive");
    }
    if (config.workers < 1) throw Error("config: workers must be at least 1");
}

std::vector<MatchRow> match(int gt_count, const std::vector<RankedHypothesis>& ranked,
                            const std::function<double(int rank, int gt_index)>& iou_oracle,
                            double threshold) {
    std::vector<MatchRow> rows(ranked.size());
    std::vector<bool> taken(gt_count, false);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        int best = -1;
        double best_iou = 0.0;
        for (int g = 0; g < gt_count; ++g) {
            if (taken[g]) continue;
            const double iou = iou_oracle(static_cast<int>(r), g);
            if (iou < threshold) continue;
            if (best < 0 || iou > best_iou) {  // ties keep the lowest gt index
                best = g;
                best_iou = iou;
            }
        }
        if (best >= 0) {
            taken[best] = true;
            rows[r] = MatchRow{best, best_iou};
        }
    }
    return rows;
}

namespace {

void sort_detections(std::vector<PooledDetection>& detections) {
    std::sort(detections.begin(), detections.end(),
              [](const PooledDetection& a, const PooledDetection& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.id < b.id;
              });
}

}  // namespace

std::vector<double> pr_curve(std::vector<PooledDetection> detections, std::uint64_t gt_count,
                             int recall_points) {
    if (gt_count == 0) throw Error("pr_curve: no ground truth (category must be flagged absent)");
    sort_detections(detections);

    const std::size_t n = detections.size();
    std::vector<double> precision(n), recall(n);
    std::uint64_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (detections[i].tp) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
    }
    // Right-max envelope: precision at a recall level is the best achievable
    // at that recall or beyond.
    for (std::size_t i = n; i-- > 1;) {
        if (precision[i] > precision[i - 1]) precision[i - 1] = precision[i];
    }

    std::vector<double> sampled(recall_points, 0.0);
    for (int k = 0; k < recall_points; ++k) {
        const double level = static_cast<double>(k) / static_cast<double>(recall_points - 1);
        const auto it = std::lower_bound(recall.begin(), recall.end(), level);
        if (it != recall.end()) {
            sampled[k] = precision[static_cast<std::size_t>(it - recall.begin())];
        }
    }
    return sampled;
}

namespace {

struct Unit {
    int category_id = 0;
    int video_id = 0;
    std::vector<int> gt_track_indices;  // into manifest.tracks, ascending track id
    std::vector<RankedHypothesis> ranked;
    std::vector<int> video_rank;  // per ranked hyp: rank within its video
};

struct UnitOutcome {
    // Per threshold, per ranked hypothesis: true positive flag.
    std::vector<std::vector<bool>> tp;
};

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
    const std::size_t thread_count =
        std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    if (thread_count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::once_flag failed_once;
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    body(i);
                } catch (...) {
                    std::call_once(failed_once, [&] { failure = std::current_exception(); });
                }
            }
        });
    }
    for (auto& thread : pool) thread.join();
    if (failure) std::rethrow_exception(failure);
}

double mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

std::optional<int> threshold_index(const std::vector<double>& thresholds, double wanted) {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (std::fabs(thresholds[i] - wanted) < 1e-9) return static_cast<int>(i);
    }
    return std::nullopt;
}

}  // namespace

MetricsReport evaluate(const io::DatasetManifest& manifest,
                       const std::vector<io::Hypothesis>& hypotheses, const EvalConfig& config) {
    validate_config(config);

    MetricsReport report;
    report.iou_thresholds = config.iou_thresholds;
    report.recall_points = config.recall_points;
    report.ar_caps = config.ar_caps;
    report.ar_cap_per_category = config.ar_cap_per_category;
    report.score_floor = config.score_floor;
    report.video_count = static_cast<int>(manifest.videos.size());
    report.gt_instance_count = static_cast<int>(manifest.tracks.size());

    // Stable global ids; the optional score floor drops hypotheses but keeps
    // the ids of the survivors.
    struct Entry {
        int id;
        const io::Hypothesis* hyp;
    };
    std::vector<Entry> retained;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        if (config.score_floor && hypotheses[i].score < *config.score_floor) continue;
        retained.push_back(Entry{static_cast<int>(i), &hypotheses[i]});
    }
    report.hypothesis_count = static_cast<int>(retained.size());

    if (manifest.videos.empty() || manifest.tracks.empty()) {
        report.diagnostic = manifest.videos.empty() ? "no videos to evaluate"
                                                    : "no ground-truth instances to evaluate";
        return report;
    }

    // Rank hypotheses inside each video (across categories by default): the
    // AR caps keep the top-k of this order.
    std::map<std::pair<int, int>, std::vector<int>> hyps_of_video;  // key -> retained indices
    for (std::size_t i = 0; i < retained.size(); ++i) {
        const int scope = config.ar_cap_per_category ? retained[i].hyp->category_id : 0;
        hyps_of_video[{retained[i].hyp->video_id, scope}].push_back(static_cast<int>(i));
    }
    std::vector<int> video_rank(retained.size(), 0);
    for (auto& [key, indices] : hyps_of_video) {
        std::sort(indices.begin(), indices.end(), [&](int a, int b) {
            if (retained[a].hyp->score != retained[b].hyp->score) {
                return retained[a].hyp->score > retained[b].hyp->score;
            }
            return retained[a].id < retained[b].id;
        });
        for (std::size_t rank = 0; rank < indices.size(); ++rank) {
            video_rank[indices[rank]] = static_cast<int>(rank);
        }
    }

    std::map<int, std::uint64_t> gt_count_of_category;
    std::map<std::pair<int, int>, Unit> units;  // (category, video) -> unit
    for (std::size_t i = 0; i < manifest.tracks.size(); ++i) {
        const auto& track = manifest.tracks[i];
        ++gt_count_of_category[track.category_id];
        Unit& unit = units[{track.category_id, track.video_id}];
        unit.category_id = track.category_id;
        unit.video_id = track.video_id;
        unit.gt_track_indices.push_back(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < retained.size(); ++i) {
        const auto& hyp = *retained[i].hyp;
        Unit& unit = units[{hyp.category_id, hyp.video_id}];
        unit.category_id = hyp.category_id;
        unit.video_id = hyp.video_id;
        unit.ranked.push_back(RankedHypothesis{retained[i].id, hyp.score});
        unit.video_rank.push_back(video_rank[i]);
    }

    std::vector<Unit*> unit_list;
    for (auto& entry : units) {
        Unit& unit = entry.second;
        std::sort(unit.gt_track_indices.begin(), unit.gt_track_indices.end(),
                  [&](int a, int b) { return manifest.tracks[a].id < manifest.tracks[b].id; });
        // Sort ranked hypotheses together with their video ranks.
        std::vector<std::size_t> order(unit.ranked.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (unit.ranked[a].score != unit.ranked[b].score) {
                return unit.ranked[a].score > unit.ranked[b].score;
            }
            return unit.ranked[a].id < unit.ranked[b].id;
        });
        Unit sorted = unit;
        for (std::size_t i = 0; i < order.size(); ++i) {
            sorted.ranked[i] = unit.ranked[order[i]];
            sorted.video_rank[i] = unit.video_rank[order[i]];
        }
        unit = std::move(sorted);
        unit_list.push_back(&unit);
    }

    // Per-unit IoU and matching, parallel over units; every output lands in
    // a preassigned slot, so the result is independent of scheduling.
    const std::size_t threshold_count = config.iou_thresholds.size();
    std::vector<UnitOutcome> outcomes(unit_list.size());
    parallel_for(unit_list.size(), config.workers, [&](std::size_t u) {
        const Unit& unit = *unit_list[u];
        const int gt_count = static_cast<int>(unit.gt_track_indices.size());
        std::vector<std::vector<double>> iou(unit.ranked.size(),
                                             std::vector<double>(gt_count, 0.0));
        for (std::size_t r = 0; r < unit.ranked.size(); ++r) {
            const io::Hypothesis& hyp = hypotheses[unit.ranked[r].id];
            for (int g = 0; g < gt_count; ++g) {
                const auto& gt = manifest.tracks[unit.gt_track_indices[g]];
                iou[r][g] = spatiotemporal_iou(gt.track, hyp.track);
            }
        }
        UnitOutcome& outcome = outcomes[u];
        outcome.tp.resize(threshold_count);
        for (std::size_t t = 0; t < threshold_count; ++t) {
            const auto rows = match(
                gt_count, unit.ranked, [&](int r, int g) { return iou[r][g]; },
                config.iou_thresholds[t]);
            outcome.tp[t].resize(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                outcome.tp[t][r] = rows[r].gt_index.has_value();
            }
        }
    });

    // Pool per (category, threshold) across videos. Categories without
    // ground truth are excluded from every average.
    std::vector<int> categories;
    for (const auto& [category_id, count] : gt_count_of_category) {
        if (count > 0) categories.push_back(category_id);
    }
    report.category_count = static_cast<int>(categories.size());

    const std::size_t cap_count = config.ar_caps.size();
    // ap[c][t], recall_at_cap[k][c][t]
    std::map<int, std::vector<double>> ap;
    std::vector<std::map<int, std::vector<double>>> recall_at_cap(cap_count);
    for (int c : categories) {
        ap[c] = std::vector<double>(threshold_count, 0.0);
        for (std::size_t k = 0; k < cap_count; ++k) {
            recall_at_cap[k][c] = std::vector<double>(threshold_count, 0.0);
        }
    }

    for (int c : categories) {
        const std::uint64_t n_gt = gt_count_of_category[c];
        for (std::size_t t = 0; t < threshold_count; ++t) {
            std::vector<PooledDetection> pooled;
            std::vector<std::uint64_t> tp_at_cap(cap_count, 0);
            for (std::size_t u = 0; u < unit_list.size(); ++u) {
                const Unit& unit = *unit_list[u];
                if (unit.category_id != c) continue;
                const auto& tp = outcomes[u].tp[t];
                for (std::size_t r = 0; r < unit.ranked.size(); ++r) {
                    pooled.push_back(
                        PooledDetection{unit.ranked[r].score, unit.ranked[r].id, tp[r]});
                    if (!tp[r]) continue;
                    for (std::size_t k = 0; k < cap_count; ++k) {
                        if (unit.video_rank[r] < config.ar_caps[k]) ++tp_at_cap[k];
                    }
                }
            }
            ap[c][t] = mean(pr_curve(std::move(pooled), n_gt, config.recall_points));
            for (std::size_t k = 0; k < cap_count; ++k) {
                recall_at_cap[k][c][t] =
                    static_cast<double>(tp_at_cap[k]) / static_cast<double>(n_gt);
            }
        }
    }

    // Scalar metrics: mean over thresholds of the mean over categories.
    const auto mean_over_categories = [&](const auto& per_category, std::size_t t) {
        double sum = 0.0;
        for (int c : categories) sum += per_category.at(c)[t];
        return sum / static_cast<double>(categories.size());
    };

    std::vector<double> ap_by_threshold(threshold_count);
    for (std::size_t t = 0; t < threshold_count; ++t) {
        ap_by_threshold[t] = mean_over_categories(ap, t);
    }
    report.has_metrics = true;
    report.ap = 100.0 * mean(ap_by_threshold);
    if (const auto t50 = threshold_index(config.iou_thresholds, 0.50)) {
        report.ap50 = 100.0 * ap_by_threshold[*t50];
    }
    if (const auto t75 = threshold_index(config.iou_thresholds, 0.75)) {
        report.ap75 = 100.0 * ap_by_threshold[*t75];
    }
    for (std::size_t k = 0; k < cap_count; ++k) {
        std::vector<double> recall_by_threshold(threshold_count);
        for (std::size_t t = 0; t < threshold_count; ++t) {
            recall_by_threshold[t] = mean_over_categories(recall_at_cap[k], t);
        }
        report.average_recall.emplace_back(config.ar_caps[k], 100.0 * mean(recall_by_threshold));
    }
    for (int c : categories) {
        report.per_category_ap.emplace_back(c, 100.0 * mean(ap[c]));
    }
    return report;
}

ojson report_to_json(const MetricsReport& report) {
    ojson j = ojson::object();
    j["schema"] = "avis-metrics/1";
    j["matching"] =
        "greedy score-descending, best IoU first, one ground truth per hypothesis; "
        "ties broken by ascending id";
    j["averaging"] =
        "AP and AR are averaged over IoU thresholds and over categories with ground truth; "
        "AR caps retained hypotheses per video across categories";
    ojson config = ojson::object();
    config["iou_thresholds"] = report.iou_thresholds;
    config["recall_points"] = report.recall_points;
    config["ar_caps"] = report.ar_caps;
    config["ar_cap_scope"] = report.ar_cap_per_category ? "video-category" : "video";
    if (report.score_floor) {
        config["score_floor"] = *report.score_floor;
    } else {
        config["score_floor"] = nullptr;
    }
    j["config"] = std::move(config);
    ojson counts = ojson::object();
    counts["videos"] = report.video_count;
    counts["gt_instances"] = report.gt_instance_count;
    counts["hypotheses"] = report.hypothesis_count;
    counts["categories_evaluated"] = report.category_count;
    j["counts"] = std::move(counts);

    ojson metrics = ojson::object();
    metrics["ap"] = report.ap ? ojson(*report.ap) : ojson(nullptr);
    metrics["ap50"] = report.ap50 ? ojson(*report.ap50) : ojson(nullptr);
    metrics["ap75"] = report.ap75 ? ojson(*report.ap75) : ojson(nullptr);
    ojson ar = ojson::object();
    for (const auto& [cap, value] : report.average_recall) {
        ar[std::to_string(cap)] = value;
    }
    metrics["ar"] = std::move(ar);
    j["metrics"] = std::move(metrics);

    ojson per_category = ojson::object();
    for (const auto& [category_id, value] : report.per_category_ap) {
        per_category[std::to_string(category_id)] = value;
    }
    j["per_category_ap"] = std::move(per_category);
    if (!report.has_metrics) j["diagnostic"] = report.diagnostic;
    return j;
}

std::string serialize_report(const MetricsReport& report) {
    return report_to_json(report).dump(2) + "\n";
}

std::string render_table(const MetricsReport& report) {
    std::string header, row;
    char buffer[64];
    const auto add = [&](const std::string& name, const std::optional<double>& value) {
        std::snprintf(buffer, sizeof(buffer), "%8s", name.c_str());
        header += buffer;
        if (value) {
            std::snprintf(buffer, sizeof(buffer), "%8.1f", *value);
        } else {
            std::snprintf(buffer, sizeof(buffer), "%8s", "-");
        }
        row += buffer;
    };
    add("AP", report.ap);
    add("AP50", report.ap50);
    add("AP75", report.ap75);
    for (const auto& [cap, value] : report.average_recall) {
        add("AR" + std::to_string(cap), value);
    }
    return header + "\n" + row + "\n";
}

}  // namespace avis::eval
