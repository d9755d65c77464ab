#include "avis/stats.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace avis::io {

using ojson = nlohmann::ordered_json;

DatasetStats compute_stats(const DatasetManifest& manifest) {
    DatasetStats stats;
    stats.video_count = static_cast<int>(manifest.videos.size());
    double duration_sum = 0.0;
    for (const auto& video : manifest.videos) {
        if (video.split == Split::Train) {
            ++stats.train_count;
        } else {
            ++stats.test_count;
        }
        stats.frame_count += video.frame_count;
        duration_sum += static_cast<double>(video.frame_count) / video.fps;
    }
    if (stats.video_count > 0) {
        stats.mean_duration_seconds = duration_sum / stats.video_count;
    }

    stats.track_count = static_cast<int>(manifest.tracks.size());
    for (const auto& track : manifest.tracks) {
        for (const auto& mask : track.track.masks) {
            if (mask && frame_area(*mask) > 0) ++stats.mask_count;
        }
    }

    // Which categories appear in which videos.
    std::map<int, std::set<int>> videos_of_category;
    std::map<int, std::set<int>> categories_of_video;
    for (const auto& track : manifest.tracks) {
        videos_of_category[track.category_id].insert(track.video_id);
        categories_of_video[track.video_id].insert(track.category_id);
    }

    for (const auto& def : manifest.categories) {
        DatasetStats::CategoryVideos row;
        row.category_id = def.id;
        row.name = def.name;
        const auto it = videos_of_category.find(def.id);
        row.video_count = it == videos_of_category.end() ? 0 : static_cast<int>(it->second.size());
        stats.category_video_histogram.push_back(std::move(row));
    }
    std::sort(stats.category_video_histogram.begin(), stats.category_video_histogram.end(),
              [](const auto& a, const auto& b) {
                  if (a.video_count != b.video_count) return a.video_count > b.video_count;
                  return a.category_id < b.category_id;
              });

    std::map<int, Scenario> scenario_of_category;
    for (const auto& def : manifest.categories) scenario_of_category[def.id] = def.scenario;

    for (const auto& def : manifest.categories) {
        DatasetStats::CategoryScenarioRow row;
        row.category_id = def.id;
        const auto it = videos_of_category.find(def.id);
        if (it != videos_of_category.end()) {
            for (int video_id : it->second) {
                std::set<Scenario> present;
                for (int cat : categories_of_video[video_id]) {
                    present.insert(scenario_of_category[cat]);
                }
                for (std::size_t s = 0; s < kScenarioOrder.size(); ++s) {
                    if (present.count(kScenarioOrder[s])) ++row.videos_by_scenario[s];
                }
            }
        }
        stats.category_scenario_matrix.push_back(row);
    }
    std::sort(stats.category_scenario_matrix.begin(), stats.category_scenario_matrix.end(),
              [](const auto& a, const auto& b) { return a.category_id < b.category_id; });

    return stats;
}

ojson stats_to_json(const DatasetStats& stats) {
    ojson j = ojson::object();
    j["videos"] = stats.video_count;
    j["videos_train"] = stats.train_count;
    j["videos_test"] = stats.test_count;
    j["frames"] = stats.frame_count;
    j["tracks"] = stats.track_count;
    j["masks"] = stats.mask_count;
    if (stats.mean_duration_seconds) {
        j["mean_duration_seconds"] = *stats.mean_duration_seconds;
    } else {
        j["mean_duration_seconds"] = nullptr;
    }
    j["category_video_histogram"] = ojson::array();
    for (const auto& row : stats.category_video_histogram) {
        ojson r = ojson::object();
        r["category_id"] = row.category_id;
        r["name"] = row.name;
        r["videos"] = row.video_count;
        j["category_video_histogram"].push_back(std::move(r));
    }
    j["category_scenario_matrix"] = ojson::array();
    for (const auto& row : stats.category_scenario_matrix) {
        ojson r = ojson::object();
        r["category_id"] = row.category_id;
        for (std::size_t s = 0; s < kScenarioOrder.size(); ++s) {
            r[to_string(kScenarioOrder[s])] = row.videos_by_scenario[s];
        }
        j["category_scenario_matrix"].push_back(std::move(r));
    }
    return j;
}

std::string serialize_stats(const DatasetStats& stats) {
    return stats_to_json(stats).dump(2) + "\n";
}

}  // namespace avis::io
