#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avis/mask.hpp"

namespace avis::io {

enum class Split { Train, Test };
enum class Scenario { Music, Speaking, Animal, Machine, Panorama };

std::string to_string(Split split);
std::string to_string(Scenario scenario);
std::optional<Split> split_from_string(const std::string& text);
std::optional<Scenario> scenario_from_string(const std::string& text);

struct CategoryDef {
    int id = 0;
    std::string name;
    Scenario scenario = Scenario::Music;
};

struct VideoMeta {
    int id = 0;
    std::string name;
    int width = 0;
    int height = 0;
    int frame_count = 0;
    double fps = 1.0;
    Split split = Split::Test;
    std::vector<std::string> file_names;
};

/// Ground-truth sounding instance: category plus per-frame optional masks.
struct InstanceTrack {
    int id = 0;
    int video_id = 0;
    int category_id = 0;
    MaskTrack track;
};

/// Predicted instance with a confidence score in [0,1].
struct Hypothesis {
    int video_id = 0;
    int category_id = 0;
    double score = 0.0;
    MaskTrack track;
};

struct DatasetManifest {
    nlohmann::ordered_json info = nlohmann::ordered_json::object();
    std::vector<CategoryDef> categories;
    std::vector<VideoMeta> videos;
    std::vector<InstanceTrack> tracks;

    const CategoryDef* find_category(int id) const;
    const VideoMeta* find_video(int id) const;
};

enum class ViolationKind { Syntax, Schema, Referential, Geometry };

std::string to_string(ViolationKind kind);

/// One structured validation finding, anchored to a document path.
struct Violation {
    ViolationKind kind = ViolationKind::Schema;
    std::string path;
    std::string message;
};

struct LoadResult {
    std::optional<DatasetManifest> manifest;
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

struct PredictionLoadResult {
    std::vector<Hypothesis> hypotheses;
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Parses and fully validates a ground-truth document. Collects every
/// violation instead of stopping at the first; the manifest is only
/// produced when the document is violation-free.
LoadResult load_ground_truth(const std::string& text);
LoadResult load_ground_truth_file(const std::filesystem::path& path);

/// Parses a prediction document and validates it against a loaded manifest.
/// Tracks shorter than the video are padded with absent masks; hypotheses
/// are returned in document order (their index is the stable tie-break id).
PredictionLoadResult load_predictions(const std::string& text, const DatasetManifest& manifest);
PredictionLoadResult load_predictions_file(const std::filesystem::path& path,
                                           const DatasetManifest& manifest);

nlohmann::ordered_json manifest_to_json(const DatasetManifest& manifest);
nlohmann::ordered_json predictions_to_json(const std::vector<Hypothesis>& hypotheses);
nlohmann::ordered_json violations_to_json(const std::vector<Violation>& violations);

/// Canonical serialization: loading its output and serializing again is
/// byte-identical.
std::string serialize_manifest(const DatasetManifest& manifest);
std::string serialize_predictions(const std::vector<Hypothesis>& hypotheses);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace avis::io
