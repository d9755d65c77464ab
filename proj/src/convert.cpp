#include "avis/convert.hpp"

#include <algorithm>
#include <string>

#include "avis/errors.hpp"

namespace avis::io {

using ojson = nlohmann::ordered_json;

namespace {

const VideoMeta& require_video(const DatasetManifest& manifest, int video_id) {
    const VideoMeta* video = manifest.find_video(video_id);
    if (video == nullptr) {
        throw LookupError("unknown video id " + std::to_string(video_id));
    }
    return *video;
}

// Overwrites `base` with `label` wherever `mask` is foreground. Run-level
// two-pointer merge; adjacent equal labels are coalesced.
std::vector<LabelRun> overlay(const std::vector<LabelRun>& base, const FrameMask& mask,
                              std::uint32_t label) {
    std::vector<LabelRun> out;
    std::size_t bi = 0;           // current base run
    std::uint32_t bleft = base.empty() ? 0 : base[0].length;
    bool fg = true;               // toggles to background on the first run
    for (std::uint32_t c : mask.counts) {
        fg = !fg;
        std::uint32_t left = c;
        while (left > 0) {
            const std::uint32_t step = std::min(left, bleft);
            const std::uint32_t value = fg ? label : base[bi].label;
            if (!out.empty() && out.back().label == value) {
                out.back().length += step;
            } else {
                out.push_back(LabelRun{step, value});
            }
            left -= step;
            bleft -= step;
            if (bleft == 0 && bi + 1 < base.size()) bleft = base[++bi].length;
        }
    }
    return out;
}

}  // namespace

std::vector<FrameMask> to_avsd(const DatasetManifest& manifest, int video_id) {
    const VideoMeta& video = require_video(manifest, video_id);
    const FrameMask blank{video.height, video.width,
                          {static_cast<std::uint32_t>(video.height) *
                           static_cast<std::uint32_t>(video.width)}};
    std::vector<FrameMask> frames(video.frame_count, blank);
    for (const auto& track : manifest.tracks) {
        if (track.video_id != video_id) continue;
        for (int t = 0; t < track.track.frame_count; ++t) {
            const auto& mask = track.track.masks[t];
            if (mask) frames[t] = frame_union(frames[t], *mask);
        }
    }
    return frames;
}

std::vector<LabelFrame> to_avss(const DatasetManifest& manifest, int video_id) {
    const VideoMeta& video = require_video(manifest, video_id);
    const std::uint32_t pixels = static_cast<std::uint32_t>(video.height) *
                                 static_cast<std::uint32_t>(video.width);
    std::vector<LabelFrame> frames(video.frame_count,
                                   LabelFrame{video.height, video.width, {LabelRun{pixels, 0}}});

    // Ascending track id, so a higher id overwrites a lower one.
    std::vector<const InstanceTrack*> tracks;
    for (const auto& track : manifest.tracks) {
        if (track.video_id == video_id) tracks.push_back(&track);
    }
    std::sort(tracks.begin(), tracks.end(),
              [](const InstanceTrack* a, const InstanceTrack* b) { return a->id < b->id; });

    for (const InstanceTrack* track : tracks) {
        for (int t = 0; t < track->track.frame_count; ++t) {
            const auto& mask = track->track.masks[t];
            if (!mask || frame_area(*mask) == 0) continue;
            frames[t].runs =
                overlay(frames[t].runs, *mask, static_cast<std::uint32_t>(track->category_id));
        }
    }
    return frames;
}

ojson avsd_to_json(const VideoMeta& video, const std::vector<FrameMask>& frames) {
    ojson j = ojson::object();
    j["task"] = "avsd";
    j["video_id"] = video.id;
    j["height"] = video.height;
    j["width"] = video.width;
    j["frame_count"] = video.frame_count;
    j["frames"] = ojson::array();
    for (const auto& mask : frames) {
        ojson f = ojson::object();
        f["counts"] = mask.counts;
        j["frames"].push_back(std::move(f));
    }
    return j;
}

ojson avss_to_json(const VideoMeta& video, const std::vector<LabelFrame>& frames) {
    ojson j = ojson::object();
    j["task"] = "avss";
    j["video_id"] = video.id;
    j["height"] = video.height;
    j["width"] = video.width;
    j["frame_count"] = video.frame_count;
    j["frames"] = ojson::array();
    for (const auto& frame : frames) {
        ojson f = ojson::object();
        f["runs"] = ojson::array();
        for (const auto& run : frame.runs) {
            f["runs"].push_back({run.length, run.label});
        }
        j["frames"].push_back(std::move(f));
    }
    return j;
}

}  // namespace avis::io
