// avis: validation, statistics, evaluation, conversion, and synthesis for
// audio-visual instance segmentation benchmarks.
//
// Exit codes: 0 success, 1 validation failures, 2 usage or I/O error,
// 3 internal error.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avis/convert.hpp"
#include "avis/dataset.hpp"
#include "avis/errors.hpp"
#include "avis/eval.hpp"
#include "avis/stats.hpp"
#include "avis/synth.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kUsageError = 2;
constexpr int kInternalError = 3;

void print_violations(const std::vector<avis::io::Violation>& violations) {
    for (const auto& v : violations) {
        std::cout << avis::io::to_string(v.kind) << " " << v.path << ": " << v.message << "\n";
    }
}

// "0.5:0.05:0.95" (start:step:stop) or "0.5,0.75" (explicit list).
std::vector<double> parse_thresholds(const std::string& text) {
    std::vector<double> values;
    if (text.find(':') != std::string::npos) {
        double start = 0, step = 0, stop = 0;
        if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &step, &stop) != 3 || step <= 0) {
            throw avis::Error("cannot parse thresholds '" + text + "' (want start:step:stop)");
        }
        const int count = static_cast<int>(std::llround((stop - start) / step)) + 1;
        for (int i = 0; i < count; ++i) values.push_back(start + i * step);
    } else {
        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto comma = text.find(',', pos);
            const std::string item =
                text.substr(pos, comma == std::string::npos ? comma : comma - pos);
            try {
                values.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw avis::Error("cannot parse threshold '" + item + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    return values;
}

std::vector<int> parse_caps(const std::string& text) {
    std::vector<int> caps;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto comma = text.find(',', pos);
        const std::string item =
            text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        try {
            caps.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw avis::Error("cannot parse AR cap '" + item + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return caps;
}

avis::io::DatasetManifest load_gt_or_exit(const std::string& path, int& exit_code) {
    const avis::io::LoadResult result = avis::io::load_ground_truth_file(path);
    if (!result.ok()) {
        print_violations(result.violations);
        exit_code = kValidationFailure;
        return {};
    }
    exit_code = kOk;
    return *result.manifest;
}

int cmd_validate(const std::string& gt_path, const std::string& pred_path,
                 const std::string& out_path) {
    const avis::io::LoadResult gt = avis::io::load_ground_truth_file(gt_path);
    std::vector<avis::io::Violation> all = gt.violations;
    if (gt.ok() && !pred_path.empty()) {
        const auto preds = avis::io::load_predictions_file(pred_path, *gt.manifest);
        all.insert(all.end(), preds.violations.begin(), preds.violations.end());
    }
    print_violations(all);
    if (!out_path.empty()) {
        avis::io::write_text_file(out_path, avis::io::violations_to_json(all).dump(2) + "\n");
    }
    return all.empty() ? kOk : kValidationFailure;
}

int cmd_stats(const std::string& gt_path, const std::string& out_path) {
    int exit_code = kOk;
    const auto manifest = load_gt_or_exit(gt_path, exit_code);
    if (exit_code != kOk) return exit_code;
    const auto stats = avis::io::compute_stats(manifest);
    const std::string document = avis::io::serialize_stats(stats);
    std::cout << document;
    if (!out_path.empty()) avis::io::write_text_file(out_path, document);
    return kOk;
}

int cmd_eval(const std::string& gt_path, const std::string& pred_path,
             const avis::eval::EvalConfig& config, const std::string& out_path) {
    avis::eval::validate_config(config);
    const avis::io::LoadResult gt = avis::io::load_ground_truth_file(gt_path);
    if (!gt.ok()) {
        print_violations(gt.violations);
        return kValidationFailure;
    }
    const auto preds = avis::io::load_predictions_file(pred_path, *gt.manifest);
    if (!preds.ok()) {
        print_violations(preds.violations);
        return kValidationFailure;
    }
    const auto report = avis::eval::evaluate(*gt.manifest, preds.hypotheses, config);
    std::cout << avis::eval::render_table(report);
    if (!report.has_metrics) std::cout << "note: " << report.diagnostic << "\n";
    if (!out_path.empty()) {
        avis::io::write_text_file(out_path, avis::eval::serialize_report(report));
    }
    return kOk;
}

int cmd_convert(const std::string& gt_path, const std::string& task, int video_id,
                const std::string& out_dir) {
    int exit_code = kOk;
    const auto manifest = load_gt_or_exit(gt_path, exit_code);
    if (exit_code != kOk) return exit_code;
    const avis::io::VideoMeta* video = manifest.find_video(video_id);
    if (video == nullptr) {
        throw avis::LookupError("unknown video id " + std::to_string(video_id));
    }
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out =
        std::filesystem::path(out_dir) / (task + "_video" + std::to_string(video_id) + ".json");
    if (task == "avsd") {
        const auto frames = avis::io::to_avsd(manifest, video_id);
        avis::io::write_text_file(out, avis::io::avsd_to_json(*video, frames).dump(2) + "\n");
    } else {
        const auto frames = avis::io::to_avss(manifest, video_id);
        avis::io::write_text_file(out, avis::io::avss_to_json(*video, frames).dump(2) + "\n");
    }
    std::cout << out.string() << "\n";
    return kOk;
}

int cmd_synth(avis::synth::SceneSpec spec, const std::vector<std::string>& perturb_ops,
              std::uint64_t perturb_seed, const std::string& out_dir) {
    const avis::synth::Scene scene = avis::synth::generate(spec);
    std::vector<avis::io::Hypothesis> predictions = scene.oracle;
    if (!perturb_ops.empty()) {
        std::vector<avis::synth::PerturbationOp> ops;
        for (const auto& text : perturb_ops) ops.push_back(avis::synth::parse_op(text));
        auto result = avis::synth::perturb(std::move(predictions), ops, perturb_seed,
                                           spec.category_count);
        for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
        predictions = std::move(result.hypotheses);
    }
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    avis::io::write_text_file(dir / "ground_truth.json",
                              avis::io::serialize_manifest(scene.manifest));
    avis::io::write_text_file(dir / "predictions.json",
                              avis::io::serialize_predictions(predictions));
    std::cout << (dir / "ground_truth.json").string() << "\n"
              << (dir / "predictions.json").string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"audio-visual instance segmentation benchmark toolkit"};
    app.require_subcommand(1);

    // validate
    auto* validate = app.add_subcommand("validate", "validate ground-truth and prediction files");
    std::string v_gt, v_pred, v_out;
    validate->add_option("--gt", v_gt, "ground-truth document")->required();
    validate->add_option("--pred", v_pred, "prediction document");
    validate->add_option("--out", v_out, "write the violation report here");

    // stats
    auto* stats = app.add_subcommand("stats", "summarize a dataset manifest");
    std::string s_gt, s_out;
    stats->add_option("--gt", s_gt, "ground-truth document")->required();
    stats->add_option("--out", s_out, "write the statistics document here");

    // eval
    auto* eval = app.add_subcommand("eval", "compute AP/AR metrics");
    std::string e_gt, e_pred, e_out, e_thresholds, e_caps;
    double e_floor = -1.0;
    int e_workers = 1;
    eval->add_option("--gt", e_gt, "ground-truth document")->required();
    eval->add_option("--pred", e_pred, "prediction document")->required();
    eval->add_option("--thresholds", e_thresholds,
                     "IoU thresholds, start:step:stop or a comma list (default 0.5:0.05:0.95)");
    eval->add_option("--ar-caps", e_caps, "AR caps, comma list (default 1,10)");
    bool e_ar_per_category = false;
    eval->add_flag("--ar-per-category", e_ar_per_category,
                   "scope AR caps per (video, category) instead of per video");
    eval->add_option("--score-floor", e_floor, "drop hypotheses scoring below this");
    eval->add_option("--workers", e_workers, "evaluation threads (never changes the output)");
    eval->add_option("--out", e_out, "write the metrics document here");

    // convert
    auto* convert = app.add_subcommand("convert", "derive AVSD or AVSS targets");
    std::string c_gt, c_task, c_out;
    int c_video = 0;
    convert->add_option("--gt", c_gt, "ground-truth document")->required();
    convert->add_option("--task", c_task, "avsd or avss")
        ->required()
        ->check(CLI::IsMember({"avsd", "avss"}));
    convert->add_option("--video", c_video, "video id")->required();
    convert->add_option("--out", c_out, "output directory")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
    std::string sy_spec, sy_out, sy_grid, sy_interval, sy_shapes;
    std::uint64_t sy_seed = 0;
    std::uint64_t sy_perturb_seed = 1;
    int sy_videos = 0, sy_frames = 0, sy_instances = 0, sy_categories = 0;
    std::vector<std::string> sy_perturb;
    synth->add_option("--seed", sy_seed, "generator seed")->required();
    synth->add_option("--spec", sy_spec, "scene spec document");
    synth->add_option("--out", sy_out, "output directory")->required();
    synth->add_option("--videos", sy_videos, "video count");
    synth->add_option("--frames", sy_frames, "frames per video");
    synth->add_option("--grid", sy_grid, "grid size HxW, e.g. 64x64");
    synth->add_option("--instances", sy_instances, "instances per video");
    synth->add_option("--categories", sy_categories, "category count");
    synth->add_option("--interval", sy_interval, "sounding-interval length range min:max");
    synth->add_option("--shapes", sy_shapes, "rectangles, ellipses, or mixed");
    synth->add_option("--perturb", sy_perturb,
                      "perturbation ops applied to the oracle predictions, e.g. shift(1,0)@2");
    synth->add_option("--perturb-seed", sy_perturb_seed, "seed for the perturbation stream");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsageError;
    }

    try {
        if (validate->parsed()) return cmd_validate(v_gt, v_pred, v_out);
        if (stats->parsed()) return cmd_stats(s_gt, s_out);
        if (eval->parsed()) {
            avis::eval::EvalConfig config;
            if (!e_thresholds.empty()) config.iou_thresholds = parse_thresholds(e_thresholds);
            if (!e_caps.empty()) config.ar_caps = parse_caps(e_caps);
            config.ar_cap_per_category = e_ar_per_category;
            if (eval->count("--score-floor") > 0) config.score_floor = e_floor;
            config.workers = e_workers;
            return cmd_eval(e_gt, e_pred, config, e_out);
        }
        if (convert->parsed()) return cmd_convert(c_gt, c_task, c_video, c_out);
        if (synth->parsed()) {
            avis::synth::SceneSpec spec;
            if (!sy_spec.empty()) {
                spec = avis::synth::spec_from_json(
                    nlohmann::ordered_json::parse(avis::io::read_text_file(sy_spec)));
            }
            spec.seed = sy_seed;
            if (sy_videos > 0) spec.video_count = sy_videos;
            if (sy_frames > 0) spec.frames_per_video = sy_frames;
            if (sy_instances > 0) spec.instances_per_video = sy_instances;
            if (sy_categories > 0) spec.category_count = sy_categories;
            if (!sy_grid.empty()) {
                if (std::sscanf(sy_grid.c_str(), "%dx%d", &spec.grid_height, &spec.grid_width) !=
                    2) {
                    throw avis::Error("cannot parse grid '" + sy_grid + "' (want HxW)");
                }
            }
            if (!sy_interval.empty()) {
                if (std::sscanf(sy_interval.c_str(), "%d:%d", &spec.interval_min,
                                &spec.interval_max) != 2) {
                    throw avis::Error("cannot parse interval '" + sy_interval + "' (want min:max)");
                }
            } else {
                // Keep the default interval range inside an overridden video length.
                spec.interval_max = std::min(spec.interval_max, spec.frames_per_video);
                spec.interval_min = std::min(spec.interval_min, spec.interval_max);
            }
            if (!sy_shapes.empty()) {
                const auto family = avis::synth::shape_family_from_string(sy_shapes);
                if (!family) throw avis::Error("unknown shape family '" + sy_shapes + "'");
                spec.shapes = *family;
            }
            return cmd_synth(spec, sy_perturb, sy_perturb_seed, sy_out);
        }
    } catch (const avis::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const avis::LookupError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const avis::GenerationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const avis::OracleScaleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const avis::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    return kInternalError;
}
