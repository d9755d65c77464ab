#include "avis/synth.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "avis/errors.hpp"
#include "avis/stats.hpp"

namespace avis::synth {

using ojson = nlohmann::ordered_json;

namespace {

// splitmix64: identical streams on every platform, unlike the standard
// library distributions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>((next() >> 32) * n >> 32);
    }

    int range(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<std::uint32_t>(hi - lo + 1)));
    }

  private:
    std::uint64_t state_;
};

struct Placement {
    bool ellipse = false;
    int x = 0;  // rect corner or ellipse center, (column, row)
    int y = 0;
    int w = 0;  // rect extent or ellipse radii
    int h = 0;
    int vx = 0;  // per-frame drift
    int vy = 0;
    int start = 0;
    int length = 0;
};

// Column-major dense rasterization, clipped to the grid.
std::vector<std::uint8_t> rasterize(const Placement& shape, int frame, int grid_h, int grid_w) {
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(grid_h) * grid_w, 0);
    const int elapsed = frame - shape.start;
    const int x = shape.x + elapsed * shape.vx;
    const int y = shape.y + elapsed * shape.vy;
    if (shape.ellipse) {
        const std::int64_t rx = shape.w, ry = shape.h;
        for (int c = x - shape.w; c <= x + shape.w; ++c) {
            if (c < 0 || c >= grid_w) continue;
            for (int r = y - shape.h; r <= y + shape.h; ++r) {
                if (r < 0 || r >= grid_h) continue;
                const std::int64_t dx = c - x, dy = r - y;
                if (dx * dx * ry * ry + dy * dy * rx * rx <= rx * rx * ry * ry) {
                    grid[static_cast<std::size_t>(c) * grid_h + r] = 1;
                }
            }
        }
    } else {
        for (int c = std::max(0, x); c < std::min(grid_w, x + shape.w); ++c) {
            for (int r = std::max(0, y); r < std::min(grid_h, y + shape.h); ++r) {
                grid[static_cast<std::size_t>(c) * grid_h + r] = 1;
            }
        }
    }
    return grid;
}

}  // namespace

std::string to_string(ShapeFamily family) {
    switch (family) {
        case ShapeFamily::Rectangles: return "rectangles";
        case ShapeFamily::Ellipses: return "ellipses";
        case ShapeFamily::Mixed: return "mixed";
    }
    return "rectangles";
}

std::optional<ShapeFamily> shape_family_from_string(const std::string& text) {
    if (text == "rectangles") return ShapeFamily::Rectangles;
    if (text == "ellipses") return ShapeFamily::Ellipses;
    if (text == "mixed") return ShapeFamily::Mixed;
    return std::nullopt;
}

SceneSpec spec_from_json(const ojson& j) {
    SceneSpec spec;
    const auto read_int = [&](const char* key, int& out) {
        if (j.contains(key)) {
            if (!j.at(key).is_number_integer()) {
                throw GenerationError(std::string("spec field '") + key + "' must be an integer");
            }
            out = j.at(key).get<int>();
        }
    };
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    read_int("videos", spec.video_count);
    read_int("frames_per_video", spec.frames_per_video);
    read_int("grid_height", spec.grid_height);
    read_int("grid_width", spec.grid_width);
    read_int("instances_per_video", spec.instances_per_video);
    read_int("categories", spec.category_count);
    read_int("interval_min", spec.interval_min);
    read_int("interval_max", spec.interval_max);
    if (j.contains("shapes")) {
        const auto family = shape_family_from_string(j.at("shapes").get<std::string>());
        if (!family) {
            throw GenerationError("spec field 'shapes' must be rectangles, ellipses, or mixed");
        }
        spec.shapes = *family;
    }
    return spec;
}

ojson spec_to_json(const SceneSpec& spec) {
    ojson j = ojson::object();
    j["seed"] = spec.seed;
    j["videos"] = spec.video_count;
    j["frames_per_video"] = spec.frames_per_video;
    j["grid_height"] = spec.grid_height;
    j["grid_width"] = spec.grid_width;
    j["instances_per_video"] = spec.instances_per_video;
    j["categories"] = spec.category_count;
    j["interval_min"] = spec.interval_min;
    j["interval_max"] = spec.interval_max;
    j["shapes"] = to_string(spec.shapes);
    return j;
}

void validate_spec(const SceneSpec& spec) {
    if (spec.video_count <= 0 || spec.frames_per_video <= 0 || spec.instances_per_video <= 0 ||
        spec.category_count <= 0) {
        throw GenerationError("spec counts must be positive");
    }
    if (spec.grid_height < 8 || spec.grid_width < 8) {
        throw GenerationError("grid must be at least 8x8");
    }
    if (spec.interval_min < 1 || spec.interval_min > spec.interval_max ||
        spec.interval_max > spec.frames_per_video) {
        throw GenerationError("sounding intervals must fit in [1, frames_per_video]");
    }
}

Scene generate(const SceneSpec& spec) {
    validate_spec(spec);
    Rng rng(spec.seed);

    Scene scene;
    io::DatasetManifest& manifest = scene.manifest;
    manifest.info["description"] = "synthetic audio-visual instance segmentation scene";
    manifest.info["generator"] = "avis synth";
    manifest.info["spec"] = spec_to_json(spec);

    static const char* kNames[] = {"person", "violin", "piano",    "dog",   "cat",
                                   "car",    "engine", "airplane", "siren", "bird"};
    for (int c = 1; c <= spec.category_count; ++c) {
        io::CategoryDef def;
        def.id = c;
        def.name = c <= 10 ? kNames[c - 1] : "category_" + std::to_string(c);
        def.scenario = io::kScenarioOrder[(c - 1) % io::kScenarioOrder.size()];
        manifest.categories.push_back(std::move(def));
    }

    const int grid_h = spec.grid_height, grid_w = spec.grid_width;
    const int frames = spec.frames_per_video;
    int track_id = 0;
    for (int v = 1; v <= spec.video_count; ++v) {
        io::VideoMeta video;
        video.id = v;
        video.name = "video_" + std::to_string(v);
        video.width = grid_w;
        video.height = grid_h;
        video.frame_count = frames;
        video.fps = 1.0;
        video.split = (v % 3 == 0) ? io::Split::Test : io::Split::Train;
        for (int t = 0; t < frames; ++t) {
            char name[32];
            std::snprintf(name, sizeof(name), "%05d.jpg", t);
            video.file_names.push_back(video.name + "/" + name);
        }
        manifest.videos.push_back(std::move(video));

        for (int i = 0; i < spec.instances_per_video; ++i) {
            Placement shape;
            switch (spec.shapes) {
                case ShapeFamily::Rectangles: shape.ellipse = false; break;
                case ShapeFamily::Ellipses: shape.ellipse = true; break;
                case ShapeFamily::Mixed: shape.ellipse = rng.below(2) == 1; break;
            }
            if (shape.ellipse) {
                shape.w = rng.range(2, std::max(2, grid_w / 4));
                shape.h = rng.range(2, std::max(2, grid_h / 4));
                shape.x = rng.range(shape.w, grid_w - 1 - shape.w);
                shape.y = rng.range(shape.h, grid_h - 1 - shape.h);
            } else {
                shape.w = rng.range(2, grid_w / 2);
                shape.h = rng.range(2, grid_h / 2);
                shape.x = rng.range(0, grid_w - shape.w);
                shape.y = rng.range(0, grid_h - shape.h);
            }
            shape.vx = rng.range(-1, 1);
            shape.vy = rng.range(-1, 1);
            shape.length = rng.range(spec.interval_min, std::min(spec.interval_max, frames));
            shape.start = rng.range(0, frames - shape.length);

            io::InstanceTrack track;
            track.id = ++track_id;
            track.video_id = v;
            track.category_id = 1 + static_cast<int>(rng.below(spec.category_count));
            track.track.frame_count = frames;
            track.track.masks.resize(frames);
            for (int t = shape.start; t < shape.start + shape.length; ++t) {
                const auto grid = rasterize(shape, t, grid_h, grid_w);
                FrameMask mask = rle_encode(grid, grid_h, grid_w);
                if (frame_area(mask) > 0) track.track.masks[t] = std::move(mask);
            }
            manifest.tracks.push_back(std::move(track));
        }
    }

    for (const auto& track : manifest.tracks) {
        scene.oracle.push_back(io::Hypothesis{track.video_id, track.category_id, 1.0, track.track});
    }
    return scene;
}

PerturbationOp parse_op(const std::string& text) {
    PerturbationOp op;
    std::string body = text;

    const auto at = body.rfind('@');
    if (at != std::string::npos) {
        try {
            op.target = std::stoi(body.substr(at + 1));
        } catch (const std::exception&) {
            throw Error("cannot parse op target in '" + text + "'");
        }
        body = body.substr(0, at);
    }

    std::string name = body;
    std::vector<std::string> args;
    const auto open = body.find('(');
    if (open != std::string::npos) {
        if (body.back() != ')') throw Error("cannot parse op '" + text + "'");
        name = body.substr(0, open);
        std::string inner = body.substr(open + 1, body.size() - open - 2);
        std::size_t pos = 0;
        while (pos <= inner.size() && !inner.empty()) {
            const auto comma = inner.find(',', pos);
            args.push_back(inner.substr(pos, comma == std::string::npos ? comma : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }

    const auto int_arg = [&](std::size_t i) {
        try {
            return std::stoi(args.at(i));
        } catch (const std::exception&) {
            throw Error("cannot parse arguments of op '" + text + "'");
        }
    };
    const auto double_arg = [&](std::size_t i) {
        try {
            return std::stod(args.at(i));
        } catch (const std::exception&) {
            throw Error("cannot parse arguments of op '" + text + "'");
        }
    };

    if (name == "shift") {
        op.kind = PerturbationOp::Kind::Shift;
        op.dx = int_arg(0);
        op.dy = int_arg(1);
    } else if (name == "dilate") {
        op.kind = PerturbationOp::Kind::Dilate;
        op.radius = int_arg(0);
    } else if (name == "erode") {
        op.kind = PerturbationOp::Kind::Erode;
        op.radius = int_arg(0);
    } else if (name == "truncate_interval" || name == "truncate") {
        op.kind = PerturbationOp::Kind::TruncateInterval;
        op.frames = int_arg(0);
    } else if (name == "score_noise") {
        op.kind = PerturbationOp::Kind::ScoreNoise;
        op.sigma = double_arg(0);
    } else if (name == "flip_category" || name == "flip") {
        op.kind = PerturbationOp::Kind::FlipCategory;
    } else if (name == "drop") {
        op.kind = PerturbationOp::Kind::Drop;
    } else if (name == "duplicate") {
        op.kind = PerturbationOp::Kind::Duplicate;
    } else {
        throw Error("unknown perturbation op '" + name + "'");
    }
    return op;
}

namespace {

// Dense morphology with a Chebyshev ball; pixels beyond the grid count as
// background.
std::vector<std::uint8_t> morph(const std::vector<std::uint8_t>& grid, int h, int w, int radius,
                                bool dilate) {
    std::vector<std::uint8_t> out(grid.size(), 0);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) {
            bool any = false, all = true;
            for (int dc = -radius; dc <= radius; ++dc) {
                for (int dr = -radius; dr <= radius; ++dr) {
                    const int cc = c + dc, rr = r + dr;
                    const bool on = cc >= 0 && cc < w && rr >= 0 && rr < h &&
                                    grid[static_cast<std::size_t>(cc) * h + rr] != 0;
                    any = any || on;
                    all = all && on;
                }
            }
            out[static_cast<std::size_t>(c) * h + r] = (dilate ? any : all) ? 1 : 0;
        }
    }
    return out;
}

std::vector<std::uint8_t> shift_grid(const std::vector<std::uint8_t>& grid, int h, int w, int dx,
                                     int dy) {
    std::vector<std::uint8_t> out(grid.size(), 0);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) {
            if (!grid[static_cast<std::size_t>(c) * h + r]) continue;
            const int cc = c + dx, rr = r + dy;
            if (cc >= 0 && cc < w && rr >= 0 && rr < h) {
                out[static_cast<std::size_t>(cc) * h + rr] = 1;
            }
        }
    }
    return out;
}

// Rewrites every present mask through a dense-grid transform; empty results
// become absent frames.
template <typename Fn>
void transform_masks(io::Hypothesis& hyp, Fn&& fn) {
    for (auto& mask : hyp.track.masks) {
        if (!mask) continue;
        const int h = mask->height, w = mask->width;
        const auto grid = fn(rle_decode(*mask), h, w);
        FrameMask out = rle_encode(grid, h, w);
        if (frame_area(out) == 0) {
            mask.reset();
        } else {
            mask = std::move(out);
        }
    }
}

}  // namespace

PerturbResult perturb(std::vector<io::Hypothesis> hypotheses,
                      const std::vector<PerturbationOp>& ops, std::uint64_t seed,
                      int category_count) {
    if (category_count <= 0) throw GenerationError("category_count must be positive");
    PerturbResult result;
    Rng rng(seed);

    for (std::size_t oi = 0; oi < ops.size(); ++oi) {
        const PerturbationOp& op = ops[oi];
        if (op.kind == PerturbationOp::Kind::ScoreNoise) {
            // Distinct draws from a 1/1024 grid, scaled by sigma.
            std::set<std::uint32_t> used;
            for (auto& hyp : hypotheses) {
                std::uint32_t k = 0;
                do {
                    k = 1 + rng.below(1024);
                } while (used.count(k) && used.size() < 1024);
                used.insert(k);
                hyp.score = std::clamp(hyp.score - op.sigma * (k / 1024.0), 0.0, 1.0);
            }
            continue;
        }

        if (hypotheses.empty()) {
            result.warnings.push_back("op " + std::to_string(oi) +
                                      " skipped: no hypotheses left");
            continue;
        }
        int target;
        if (op.target) {
            target = *op.target;
            if (target < 0 || target >= static_cast<int>(hypotheses.size())) {
                throw GenerationError("op target " + std::to_string(target) +
                                      " out of range (have " +
                                      std::to_string(hypotheses.size()) + " hypotheses)");
            }
        } else {
            target = static_cast<int>(rng.below(static_cast<std::uint32_t>(hypotheses.size())));
        }
        io::Hypothesis& hyp = hypotheses[static_cast<std::size_t>(target)];

        switch (op.kind) {
            case PerturbationOp::Kind::Shift:
                transform_masks(hyp, [&](std::vector<std::uint8_t> grid, int h, int w) {
                    return shift_grid(grid, h, w, op.dx, op.dy);
                });
                break;
            case PerturbationOp::Kind::Dilate:
                transform_masks(hyp, [&](std::vector<std::uint8_t> grid, int h, int w) {
                    return morph(grid, h, w, op.radius, true);
                });
                break;
            case PerturbationOp::Kind::Erode:
                transform_masks(hyp, [&](std::vector<std::uint8_t> grid, int h, int w) {
                    return morph(grid, h, w, op.radius, false);
                });
                break;
            case PerturbationOp::Kind::TruncateInterval: {
                std::vector<int> sounding = support(hyp.track);
                const int cut = std::min<int>(op.frames, static_cast<int>(sounding.size()));
                for (int i = 0; i < cut; ++i) {
                    hyp.track.masks[sounding[sounding.size() - 1 - i]].reset();
                }
                break;
            }
            case PerturbationOp::Kind::FlipCategory:
                hyp.category_id = hyp.category_id % category_count + 1;
                break;
            case PerturbationOp::Kind::Drop:
                hypotheses.erase(hypotheses.begin() + target);
                break;
            case PerturbationOp::Kind::Duplicate: {
                io::Hypothesis copy = hyp;
                copy.score = std::max(0.0, copy.score - 0x1p-20);
                hypotheses.push_back(std::move(copy));
                break;
            }
            case PerturbationOp::Kind::ScoreNoise: break;  // handled above
        }

        if ((op.kind == PerturbationOp::Kind::Shift || op.kind == PerturbationOp::Kind::Erode ||
             op.kind == PerturbationOp::Kind::TruncateInterval) &&
            target < static_cast<int>(hypotheses.size()) &&
            support(hypotheses[static_cast<std::size_t>(target)].track).empty()) {
            result.warnings.push_back("hypothesis " + std::to_string(target) +
                                      " has no sounding frames left; retained with empty track");
        }
    }

    result.hypotheses = std::move(hypotheses);
    return result;
}

}  // namespace avis::synth
