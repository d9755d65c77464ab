#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avis/dataset.hpp"

namespace avis::io {

constexpr std::array<Scenario, 5> kScenarioOrder = {
    Scenario::Music, Scenario::Speaking, Scenario::Animal, Scenario::Machine,
    Scenario::Panorama};

struct DatasetStats {
    int video_count = 0;
    int train_count = 0;
    int test_count = 0;
    std::int64_t frame_count = 0;
    int track_count = 0;
    std::int64_t mask_count = 0;  // present, non-empty frame masks
    std::optional<double> mean_duration_seconds;

    struct CategoryVideos {
        int category_id = 0;
        std::string name;
        int video_count = 0;
    };
    // Sorted by video count descending, category id ascending.
    std::vector<CategoryVideos> category_video_histogram;

    // Row per category (ascending id); column s counts videos in which the
    // category co-occurs with at least one category of scenario s.
    struct CategoryScenarioRow {
        int category_id = 0;
        std::array<int, 5> videos_by_scenario{};
    };
    std::vector<CategoryScenarioRow> category_scenario_matrix;
};

DatasetStats compute_stats(const DatasetManifest& manifest);
nlohmann::ordered_json stats_to_json(const DatasetStats& stats);
std::string serialize_stats(const DatasetStats& stats);

}  // namespace avis::io
