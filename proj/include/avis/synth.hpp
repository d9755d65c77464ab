#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avis/dataset.hpp"
#include "avis/eval.hpp"

namespace avis::synth {

enum class ShapeFamily { Rectangles, Ellipses, Mixed };

std::string to_string(ShapeFamily family);
std::optional<ShapeFamily> shape_family_from_string(const std::string& text);

/// Everything the generator needs; equal specs produce byte-identical
/// documents.
struct SceneSpec {
    std::uint64_t seed = 1;
    int video_count = 2;
    int frames_per_video = 8;
    int grid_height = 16;
    int grid_width = 16;
    int instances_per_video = 2;
    int category_count = 3;
    int interval_min = 2;   // sounding-interval length range, in frames
    int interval_max = 6;
    ShapeFamily shapes = ShapeFamily::Rectangles;
};

SceneSpec spec_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json spec_to_json(const SceneSpec& spec);

/// Throws GenerationError when the spec cannot be realized (non-positive
/// counts, grid under 8x8, or intervals that do not fit the video).
void validate_spec(const SceneSpec& spec);

struct Scene {
    io::DatasetManifest manifest;
    std::vector<io::Hypothesis> oracle;  // exact GT copies, score 1.0
};

Scene generate(const SceneSpec& spec);

struct PerturbationOp {
    enum class Kind {
        Shift,             // translate masks by (dx, dy) = (columns, rows)
        Dilate,            // grow by a Chebyshev ball of the given radius
        Erode,             // shrink by a Chebyshev ball of the given radius
        TruncateInterval,  // drop the last `frames` frames of support
        ScoreNoise,        // subtract seeded grid noise scaled by sigma (all hypotheses)
        FlipCategory,      // advance the category id cyclically
        Drop,              // remove one hypothesis
        Duplicate,         // append an exact copy with a slightly lower score
    };
    Kind kind = Kind::Shift;
    int dx = 0;
    int dy = 0;
    int radius = 0;
    int frames = 0;
    double sigma = 0.0;
    // Hypothesis index the op applies to; seeded choice when absent.
    // ScoreNoise ignores it and always touches every hypothesis.
    std::optional<int> target;
};

/// "shift(1,0)", "dilate(2)@3", "score_noise(0.4)", "drop", ...
/// The optional @N suffix pins the target hypothesis index.
PerturbationOp parse_op(const std::string& text);

struct PerturbResult {
    std::vector<io::Hypothesis> hypotheses;
    std::vector<std::string> warnings;  // e.g. shapes pushed fully off-grid
};

/// Applies ops in order, deterministically under (ops, seed). Geometric ops
/// change masks only; score and category ops change metadata only.
/// `category_count` is the size of the category set FlipCategory wraps in.
PerturbResult perturb(std::vector<io::Hypothesis> hypotheses,
                      const std::vector<PerturbationOp>& ops, std::uint64_t seed,
                      int category_count);

/// Brute-force reference evaluator: dense-grid IoU, score-order matching
/// replay, and direct PR construction, sharing no code with eval::evaluate.
/// Refuses inputs beyond desk scale (50 videos / 6 instances per video) with
/// OracleScaleError.
eval::MetricsReport reference_evaluate(const io::DatasetManifest& manifest,
                                       const std::vector<io::Hypothesis>& hypotheses,
                                       const eval::EvalConfig& config);

}  // namespace avis::synth
