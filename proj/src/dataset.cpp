#include "avis/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "avis/errors.hpp"

namespace avis::io {

using ojson = nlohmann::ordered_json;

std::string to_string(Split split) {
    return split == Split::Train ? "train" : "test";
}

std::string to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::Music: return "music";
        case Scenario::Speaking: return "speaking";
        case Scenario::Animal: return "animal";
        case Scenario::Machine: return "machine";
        case Scenario::Panorama: return "panorama";
    }
    return "music";
}

std::optional<Split> split_from_string(const std::string& text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    return std::nullopt;
}

std::optional<Scenario> scenario_from_string(const std::string& text) {
    if (text == "music") return Scenario::Music;
    if (text == "speaking") return Scenario::Speaking;
    if (text == "animal") return Scenario::Animal;
    if (text == "machine") return Scenario::Machine;
    if (text == "panorama") return Scenario::Panorama;
    return std::nullopt;
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::Syntax: return "syntax";
        case ViolationKind::Schema: return "schema";
        case ViolationKind::Referential: return "referential";
        case ViolationKind::Geometry: return "geometry";
    }
    return "schema";
}

const CategoryDef* DatasetManifest::find_category(int id) const {
    for (const auto& c : categories) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

const VideoMeta* DatasetManifest::find_video(int id) const {
    for (const auto& v : videos) {
        if (v.id == id) return &v;
    }
    return nullptr;
}

namespace {

struct Collector {
    std::vector<Violation>& out;

    void add(ViolationKind kind, std::string path, std::string message) {
        out.push_back(Violation{kind, std::move(path), std::move(message)});
    }
};

std::optional<int> get_int(Collector& c, const ojson& obj, const std::string& path,
                           const char* key) {
    if (!obj.contains(key)) {
        c.add(ViolationKind::Schema, path + "." + key, "missing required field");
        return std::nullopt;
    }
    const auto& j = obj.at(key);
    if (!j.is_number_integer()) {
        c.add(ViolationKind::Schema, path + "." + key, "expected an integer");
        return std::nullopt;
    }
    return j.get<int>();
}

std::optional<double> get_number(Collector& c, const ojson& obj, const std::string& path,
                                 const char* key) {
    if (!obj.contains(key)) {
        c.add(ViolationKind::Schema, path + "." + key, "missing required field");
        return std::nullopt;
    }
    const auto& j = obj.at(key);
    if (!j.is_number()) {
        c.add(ViolationKind::Schema, path + "." + key, "expected a number");
        return std::nullopt;
    }
    return j.get<double>();
}

std::optional<std::string> get_string(Collector& c, const ojson& obj, const std::string& path,
                                      const char* key) {
    if (!obj.contains(key)) {
        c.add(ViolationKind::Schema, path + "." + key, "missing required field");
        return std::nullopt;
    }
    const auto& j = obj.at(key);
    if (!j.is_string()) {
        c.add(ViolationKind::Schema, path + "." + key, "expected a string");
        return std::nullopt;
    }
    return j.get<std::string>();
}

const ojson* get_array(Collector& c, const ojson& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) {
        c.add(ViolationKind::Schema, path + "." + key, "missing required field");
        return nullptr;
    }
    const auto& j = obj.at(key);
    if (!j.is_array()) {
        c.add(ViolationKind::Schema, path + "." + key, "expected an array");
        return nullptr;
    }
    return &j;
}

// Parses one `segmentations` entry: null, or {"size":[h,w],"counts":[...]}.
// Returns nullopt (absent mask) for null entries, parse failures (after
// recording the violation), and zero-area masks, which are canonicalized to
// absent on load.
std::optional<FrameMask> parse_segmentation(Collector& c, const ojson& j, const std::string& path,
                                            const VideoMeta* video) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_object()) {
        c.add(ViolationKind::Schema, path, "expected null or an RLE object");
        return std::nullopt;
    }
    const ojson* size = get_array(c, j, path, "size");
    const ojson* counts = get_array(c, j, path, "counts");
    if (size == nullptr || counts == nullptr) return std::nullopt;

    if (size->size() != 2 || !(*size)[0].is_number_integer() || !(*size)[1].is_number_integer()) {
        c.add(ViolationKind::Schema, path + ".size", "expected [height, width]");
        return std::nullopt;
    }
    FrameMask mask;
    mask.height = (*size)[0].get<int>();
    mask.width = (*size)[1].get<int>();
    if (mask.height <= 0 || mask.width <= 0) {
        c.add(ViolationKind::Geometry, path + ".size", "mask dimensions must be positive");
        return std::nullopt;
    }
    if (video != nullptr && (mask.height != video->height || mask.width != video->width)) {
        c.add(ViolationKind::Geometry, path + ".size",
              "mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                  " but video " + std::to_string(video->id) + " is " +
                  std::to_string(video->height) + "x" + std::to_string(video->width));
        return std::nullopt;
    }

    std::uint64_t total = 0;
    for (std::size_t i = 0; i < counts->size(); ++i) {
        const auto& run = (*counts)[i];
        if (!run.is_number_integer() || run.get<std::int64_t>() < 0) {
            c.add(ViolationKind::Schema, path + ".counts[" + std::to_string(i) + "]",
                  "run lengths must be non-negative integers");
            return std::nullopt;
        }
        total += run.get<std::uint64_t>();
        mask.counts.push_back(run.get<std::uint32_t>());
    }
    const std::uint64_t expected =
        static_cast<std::uint64_t>(mask.height) * static_cast<std::uint64_t>(mask.width);
    if (total != expected) {
        c.add(ViolationKind::Geometry, path + ".counts",
              "run total " + std::to_string(total) + " does not cover " +
                  std::to_string(expected) + " pixels");
        return std::nullopt;
    }
    mask = canonical(std::move(mask));
    if (frame_area(mask) == 0) return std::nullopt;
    return mask;
}

std::optional<MaskTrack> parse_track(Collector& c, const ojson& obj, const std::string& path,
                                     const VideoMeta* video, bool pad_to_video) {
    const ojson* segs = get_array(c, obj, path, "segmentations");
    if (segs == nullptr) return std::nullopt;

    MaskTrack track;
    track.frame_count = static_cast<int>(segs->size());
    track.masks.resize(track.frame_count);
    const std::size_t before = c.out.size();
    for (std::size_t t = 0; t < segs->size(); ++t) {
        track.masks[t] = parse_segmentation(
            c, (*segs)[t], path + ".segmentations[" + std::to_string(t) + "]", video);
    }
    if (video != nullptr) {
        if (track.frame_count > video->frame_count) {
            c.add(ViolationKind::Geometry, path + ".segmentations",
                  "track has " + std::to_string(track.frame_count) + " frames but video " +
                      std::to_string(video->id) + " has " + std::to_string(video->frame_count));
            return std::nullopt;
        }
        if (track.frame_count < video->frame_count) {
            if (!pad_to_video) {
                c.add(ViolationKind::Geometry, path + ".segmentations",
                      "track has " + std::to_string(track.frame_count) + " frames but video " +
                          std::to_string(video->id) + " has " +
                          std::to_string(video->frame_count));
                return std::nullopt;
            }
            track.frame_count = video->frame_count;
            track.masks.resize(track.frame_count);
        }
    }
    if (c.out.size() != before) return std::nullopt;
    return track;
}

std::optional<ojson> parse_document(Collector& c, const std::string& text) {
    try {
        return ojson::parse(text);
    } catch (const ojson::parse_error& e) {
        c.add(ViolationKind::Syntax, "$", e.what());
        return std::nullopt;
    }
}

}  // namespace

LoadResult load_ground_truth(const std::string& text) {
    LoadResult result;
    Collector c{result.violations};

    const std::optional<ojson> doc = parse_document(c, text);
    if (!doc) return result;
    if (!doc->is_object()) {
        c.add(ViolationKind::Schema, "$", "top-level value must be an object");
        return result;
    }

    DatasetManifest manifest;
    if (doc->contains("info")) manifest.info = doc->at("info");

    // Categories.
    if (const ojson* cats = get_array(c, *doc, "$", "categories")) {
        for (std::size_t i = 0; i < cats->size(); ++i) {
            const std::string path = "categories[" + std::to_string(i) + "]";
            const auto& j = (*cats)[i];
            if (!j.is_object()) {
                c.add(ViolationKind::Schema, path, "expected an object");
                continue;
            }
            CategoryDef def;
            const auto id = get_int(c, j, path, "id");
            const auto name = get_string(c, j, path, "name");
            const auto scenario = get_string(c, j, path, "scenario");
            if (!id || !name || !scenario) continue;
            def.id = *id;
            def.name = *name;
            if (const auto s = scenario_from_string(*scenario)) {
                def.scenario = *s;
            } else {
                c.add(ViolationKind::Schema, path + ".scenario",
                      "unknown scenario '" + *scenario + "'");
                continue;
            }
            manifest.categories.push_back(std::move(def));
        }
        // Ids must be unique and contiguous from 1.
        std::vector<int> ids;
        for (const auto& def : manifest.categories) ids.push_back(def.id);
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] != static_cast<int>(i) + 1) {
                c.add(ViolationKind::Schema, "categories",
                      "ids must be unique and contiguous from 1");
                break;
            }
        }
    }

    // Videos.
    if (const ojson* videos = get_array(c, *doc, "$", "videos")) {
        std::set<int> seen;
        for (std::size_t i = 0; i < videos->size(); ++i) {
            const std::string path = "videos[" + std::to_string(i) + "]";
            const auto& j = (*videos)[i];
            if (!j.is_object()) {
                c.add(ViolationKind::Schema, path, "expected an object");
                continue;
            }
            VideoMeta video;
            const auto id = get_int(c, j, path, "id");
            const auto name = get_string(c, j, path, "name");
            const auto width = get_int(c, j, path, "width");
            const auto height = get_int(c, j, path, "height");
            const auto frame_count = get_int(c, j, path, "frame_count");
            const auto fps = get_number(c, j, path, "fps");
            const ojson* file_names = get_array(c, j, path, "file_names");
            if (!id || !name || !width || !height || !frame_count || !fps || !file_names) {
                continue;
            }
            video.id = *id;
            video.name = *name;
            video.width = *width;
            video.height = *height;
            video.frame_count = *frame_count;
            video.fps = *fps;
            bool good = true;
            if (video.width <= 0 || video.height <= 0) {
                c.add(ViolationKind::Schema, path, "width and height must be positive");
                good = false;
            }
            if (video.frame_count <= 0) {
                c.add(ViolationKind::Schema, path + ".frame_count", "must be positive");
                good = false;
            }
            if (!(video.fps > 0)) {
                c.add(ViolationKind::Schema, path + ".fps", "must be positive");
                good = false;
            }
            if (j.contains("split")) {
                const auto split = get_string(c, j, path, "split");
                if (!split) {
                    good = false;
                } else if (const auto s = split_from_string(*split)) {
                    video.split = *s;
                } else {
                    c.add(ViolationKind::Schema, path + ".split",
                          "expected 'train' or 'test', got '" + *split + "'");
                    good = false;
                }
            }
            for (std::size_t f = 0; f < file_names->size(); ++f) {
                if (!(*file_names)[f].is_string()) {
                    c.add(ViolationKind::Schema,
                          path + ".file_names[" + std::to_string(f) + "]", "expected a string");
                    good = false;
                    break;
                }
                video.file_names.push_back((*file_names)[f].get<std::string>());
            }
            if (good && static_cast<int>(video.file_names.size()) != video.frame_count) {
                c.add(ViolationKind::Schema, path + ".file_names",
                      "lists " + std::to_string(video.file_names.size()) + " names but frame_count is " +
                          std::to_string(video.frame_count));
                good = false;
            }
            if (!seen.insert(video.id).second) {
                c.add(ViolationKind::Schema, path + ".id",
                      "duplicate video id " + std::to_string(video.id));
                good = false;
            }
            if (good) manifest.videos.push_back(std::move(video));
        }
    }

    // Annotations.
    if (const ojson* anns = get_array(c, *doc, "$", "annotations")) {
        std::set<int> seen;
        for (std::size_t i = 0; i < anns->size(); ++i) {
            const std::string path = "annotations[" + std::to_string(i) + "]";
            const auto& j = (*anns)[i];
            if (!j.is_object()) {
                c.add(ViolationKind::Schema, path, "expected an object");
                continue;
            }
            InstanceTrack track;
            const auto id = get_int(c, j, path, "id");
            const auto video_id = get_int(c, j, path, "video_id");
            const auto category_id = get_int(c, j, path, "category_id");
            if (!id || !video_id || !category_id) continue;
            track.id = *id;
            track.video_id = *video_id;
            track.category_id = *category_id;
            if (!seen.insert(track.id).second) {
                c.add(ViolationKind::Schema, path + ".id",
                      "duplicate annotation id " + std::to_string(track.id));
                continue;
            }
            const VideoMeta* video = manifest.find_video(track.video_id);
            bool good = true;
            if (video == nullptr) {
                c.add(ViolationKind::Referential, path + ".video_id",
                      "video_id " + std::to_string(track.video_id) + " references no video");
                good = false;
            }
            if (manifest.find_category(track.category_id) == nullptr) {
                c.add(ViolationKind::Referential, path + ".category_id",
                      "category_id " + std::to_string(track.category_id) +
                          " references no category");
                good = false;
            }
            auto parsed = parse_track(c, j, path, video, /*pad_to_video=*/false);
            if (!parsed || !good) continue;
            track.track = std::move(*parsed);
            if (support(track.track).empty()) {
                c.add(ViolationKind::Geometry, path + ".segmentations",
                      "track has empty support (the instance never sounds)");
                continue;
            }
            manifest.tracks.push_back(std::move(track));
        }
    }

    if (result.violations.empty()) result.manifest = std::move(manifest);
    return result;
}

LoadResult load_ground_truth_file(const std::filesystem::path& path) {
    return load_ground_truth(read_text_file(path));
}

PredictionLoadResult load_predictions(const std::string& text, const DatasetManifest& manifest) {
    PredictionLoadResult result;
    Collector c{result.violations};

    const std::optional<ojson> doc = parse_document(c, text);
    if (!doc) return result;
    if (!doc->is_array()) {
        c.add(ViolationKind::Schema, "$", "top-level value must be an array of hypotheses");
        return result;
    }

    for (std::size_t i = 0; i < doc->size(); ++i) {
        const std::string path = "predictions[" + std::to_string(i) + "]";
        const auto& j = (*doc)[i];
        if (!j.is_object()) {
            c.add(ViolationKind::Schema, path, "expected an object");
            continue;
        }
        Hypothesis hyp;
        const auto video_id = get_int(c, j, path, "video_id");
        const auto category_id = get_int(c, j, path, "category_id");
        const auto score = get_number(c, j, path, "score");
        if (!video_id || !category_id || !score) continue;
        hyp.video_id = *video_id;
        hyp.category_id = *category_id;
        hyp.score = *score;
        bool good = true;
        if (!(hyp.score >= 0.0 && hyp.score <= 1.0)) {
            c.add(ViolationKind::Schema, path + ".score", "score outside [0,1]");
            good = false;
        }
        const VideoMeta* video = manifest.find_video(hyp.video_id);
        if (video == nullptr) {
            c.add(ViolationKind::Referential, path + ".video_id",
                  "video_id " + std::to_string(hyp.video_id) + " references no video");
            good = false;
        }
        if (manifest.find_category(hyp.category_id) == nullptr) {
            c.add(ViolationKind::Referential, path + ".category_id",
                  "unknown category " + std::to_string(hyp.category_id));
            good = false;
        }
        auto parsed = parse_track(c, j, path, video, /*pad_to_video=*/true);
        if (!parsed || !good) continue;
        hyp.track = std::move(*parsed);
        result.hypotheses.push_back(std::move(hyp));
    }
    return result;
}

PredictionLoadResult load_predictions_file(const std::filesystem::path& path,
                                           const DatasetManifest& manifest) {
    return load_predictions(read_text_file(path), manifest);
}

namespace {

ojson segmentations_to_json(const MaskTrack& track) {
    ojson segs = ojson::array();
    for (const auto& mask : track.masks) {
        if (!mask || frame_area(*mask) == 0) {
            segs.push_back(nullptr);
        } else {
            ojson m = ojson::object();
            m["size"] = {mask->height, mask->width};
            m["counts"] = mask->counts;
            segs.push_back(std::move(m));
        }
    }
    return segs;
}

}  // namespace

ojson manifest_to_json(const DatasetManifest& manifest) {
    ojson j = ojson::object();
    j["info"] = manifest.info;
    j["categories"] = ojson::array();
    for (const auto& def : manifest.categories) {
        ojson cat = ojson::object();
        cat["id"] = def.id;
        cat["name"] = def.name;
        cat["scenario"] = to_string(def.scenario);
        j["categories"].push_back(std::move(cat));
    }
    j["videos"] = ojson::array();
    for (const auto& video : manifest.videos) {
        ojson v = ojson::object();
        v["id"] = video.id;
        v["name"] = video.name;
        v["width"] = video.width;
        v["height"] = video.height;
        v["frame_count"] = video.frame_count;
        v["fps"] = video.fps;
        v["split"] = to_string(video.split);
        v["file_names"] = video.file_names;
        j["videos"].push_back(std::move(v));
    }
    j["annotations"] = ojson::array();
    for (const auto& track : manifest.tracks) {
        ojson a = ojson::object();
        a["id"] = track.id;
        a["video_id"] = track.video_id;
        a["category_id"] = track.category_id;
        a["segmentations"] = segmentations_to_json(track.track);
        j["annotations"].push_back(std::move(a));
    }
    return j;
}

ojson predictions_to_json(const std::vector<Hypothesis>& hypotheses) {
    ojson j = ojson::array();
    for (const auto& hyp : hypotheses) {
        ojson h = ojson::object();
        h["video_id"] = hyp.video_id;
        h["category_id"] = hyp.category_id;
        h["score"] = hyp.score;
        h["segmentations"] = segmentations_to_json(hyp.track);
        j.push_back(std::move(h));
    }
    return j;
}

ojson violations_to_json(const std::vector<Violation>& violations) {
    ojson j = ojson::object();
    j["violation_count"] = violations.size();
    j["violations"] = ojson::array();
    for (const auto& v : violations) {
        ojson entry = ojson::object();
        entry["kind"] = to_string(v.kind);
        entry["path"] = v.path;
        entry["message"] = v.message;
        j["violations"].push_back(std::move(entry));
    }
    return j;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
    return manifest_to_json(manifest).dump(2) + "\n";
}

std::string serialize_predictions(const std::vector<Hypothesis>& hypotheses) {
    return predictions_to_json(hypotheses).dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace avis::io
