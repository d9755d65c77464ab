#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "avis/dataset.hpp"
#include "avis/mask.hpp"

namespace avis::io {

/// One run of identical labels in a column-major semantic map; label 0 is
/// background, other labels are category ids.
struct LabelRun {
    std::uint32_t length = 0;
    std::uint32_t label = 0;
};

struct LabelFrame {
    int height = 0;
    int width = 0;
    std::vector<LabelRun> runs;
};

/// Saliency targets: per frame, the pixelwise union of every instance mask.
/// Frames where nothing sounds are all-background. Throws LookupError on an
/// unknown video id.
std::vector<FrameMask> to_avsd(const DatasetManifest& manifest, int video_id);

/// Semantic targets: each sounding pixel carries its instance's category id;
/// where instances overlap, the instance with the higher track id wins.
std::vector<LabelFrame> to_avss(const DatasetManifest& manifest, int video_id);

nlohmann::ordered_json avsd_to_json(const VideoMeta& video, const std::vector<FrameMask>& frames);
nlohmann::ordered_json avss_to_json(const VideoMeta& video, const std::vector<LabelFrame>& frames);

}  // namespace avis::io
