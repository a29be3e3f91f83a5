// drivegaze: command-line front end to the ground-truth, labeling and evaluation pipeline.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drivegaze/config.hpp"
#include "drivegaze/error.hpp"
#include "drivegaze/io_util.hpp"
#include "drivegaze/pipeline.hpp"

namespace fs = std::filesystem;
using namespace drivegaze;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Globals {
    std::string config;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    bool legacy = false;
};

PipelineConfig resolve(const Globals& g)
{
    PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
    if (g.seed) {
        cfg.ransac.seed = *g.seed;
    }
    if (g.legacy) {
        cfg.legacy = true;
        cfg.metrics.kld_mode = metrics::KldMode::legacy_dreyeve;
    }
    validate(cfg);
    return cfg;
}

fs::path or_default(const std::string& given, const fs::path& fallback)
{
    return given.empty() ? fallback : fs::path(given);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Driver-gaze ground truth, task labels and saliency benchmark"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "Pipeline configuration (JSON)");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1, 1024));
    app.add_option("--seed", g.seed, "RANSAC base seed (overrides the config)");
    app.add_flag("--legacy", g.legacy, "Homography-aggregated ground truth and the legacy KLD variant");

    std::string video, out, homographies, gt_dir, pred_dir, fix_dir, timeline, exclusions, format = "markdown";
    std::int64_t key = 0;
    std::optional<std::int64_t> first, last;
    std::vector<std::string> videos, runs;

    auto* align_cmd = app.add_subcommand("align", "Estimate ETG->GAR homographies from correspondences");
    align_cmd->add_option("video", video, "Video directory")->required();
    align_cmd->add_option("--out", out, "Output directory (default <video>/homographies)");

    auto* gaze_cmd = app.add_subcommand("gaze-map", "Map retained fixations into the scene view");
    gaze_cmd->add_option("video", video, "Video directory")->required();
    gaze_cmd->add_option("--homographies", homographies, "Homography directory (default <video>/homographies)");
    gaze_cmd->add_option("--out", out, "Output CSV (default <video>/gaze_points.csv)");

    auto* prop_cmd = app.add_subcommand("propagate", "Trace one key frame's window of fixations through flow");
    prop_cmd->add_option("video", video, "Video directory")->required();
    prop_cmd->add_option("--key", key, "Key GAR frame")->required();
    prop_cmd->add_option("--homographies", homographies, "Homography directory (default <video>/homographies)");
    prop_cmd->add_option("--out", out, "Output CSV (default <video>/propagated_<key>.csv)");

    auto* gt_cmd = app.add_subcommand("gt", "Build ground-truth heatmaps for every key frame");
    gt_cmd->add_option("video", video, "Video directory")->required();
    gt_cmd->add_option("--homographies", homographies, "Homography directory (default <video>/homographies)");
    gt_cmd->add_option("--out", out, "Output directory (default <video>/gt)");
    gt_cmd->add_option("--first", first, "First key frame (default 0)");
    gt_cmd->add_option("--last", last, "Last key frame, inclusive (default n_gar-1)");

    auto* label_cmd = app.add_subcommand("label-actions", "Per-frame longitudinal and lateral labels");
    label_cmd->add_option("video", video, "Video directory")->required();
    label_cmd->add_option("--out", out, "Output CSV (default <video>/timeline.csv)");

    auto* ctx_cmd = app.add_subcommand("context", "Task and context records per 16-frame sample");
    ctx_cmd->add_option("video", video, "Video directory")->required();
    ctx_cmd->add_option("--out", out, "Output JSON lines (default <video>/context.jsonl)");

    auto* weights_cmd = app.add_subcommand("weights", "Per-sample weights against the video mean map");
    weights_cmd->add_option("video", video, "Video directory")->required();
    weights_cmd->add_option("--gt", gt_dir, "Ground-truth directory (default <video>/gt)");
    weights_cmd->add_option("--out", out, "Output CSV (default <video>/weights.csv)");

    auto* stats_cmd = app.add_subcommand("stats", "Action and intersection statistics over videos");
    stats_cmd->add_option("videos", videos, "Video directories")->required();
    stats_cmd->add_option("--out", out, "Output CSV")->required();

    auto* eval_cmd = app.add_subcommand("eval", "Score a prediction directory against ground truth");
    eval_cmd->add_option("video", video, "Video directory")->required();
    eval_cmd->add_option("--pred", pred_dir, "Prediction directory (%06d.pfm)")->required();
    eval_cmd->add_option("--gt", gt_dir, "Ground-truth directory (default <video>/gt)");
    eval_cmd->add_option("--fix", fix_dir, "Fixation-map directory (default: the ground-truth directory)");
    eval_cmd->add_option("--timeline", timeline, "Timeline CSV (default: recomputed)");
    eval_cmd->add_option("--out", out, "Run file (default <video>/eval_run.json)");
    eval_cmd->add_option("--exclusions", exclusions, "Exclusion CSV (default <video>/eval_exclusions.csv)");

    auto* report_cmd = app.add_subcommand("report", "Aggregate run files into a report");
    report_cmd->add_option("runs", runs, "Run files written by eval")->required();
    report_cmd->add_option("--format", format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
    report_cmd->add_option("--out", out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        const PipelineConfig cfg = resolve(g);
        const fs::path vdir = video;
        const auto hdir = or_default(homographies, vdir / "homographies");

        if (align_cmd->parsed()) {
            const auto s = pipeline::run_align(vdir, or_default(out, vdir / "homographies"), cfg, g.jobs);
            std::cout << "aligned " << s.frames - s.failed.size() << "/" << s.frames << " ETG frames\n";
            for (const auto f : s.failed) {
                std::cerr << "warning: no homography for ETG frame " << f << "\n";
            }
        } else if (gaze_cmd->parsed()) {
            const auto n = pipeline::run_gaze_map(vdir, hdir, or_default(out, vdir / "gaze_points.csv"), cfg);
            std::cout << n << " fixations mapped\n";
        } else if (prop_cmd->parsed()) {
            const auto pts = pipeline::run_propagate(
                vdir, hdir, key, or_default(out, vdir / ingest::frame_name(key, "propagated_", ".csv")), cfg);
            std::cout << pts.size() << " points traced to frame " << key << "\n";
        } else if (gt_cmd->parsed()) {
            std::optional<heatmap::KeyRange> range;
            if (first || last) {
                const auto n_gar = ingest::parse_annotations(ingest::VideoLayout{vdir}.annotations()).n_gar;
                range = heatmap::KeyRange{first.value_or(0), last.value_or(n_gar - 1)};
            }
            const auto s = pipeline::run_gt(vdir, hdir, or_default(out, vdir / "gt"), cfg, g.jobs, range);
            std::cout << s.key_frames << " key frames (" << s.blank << " blank), " << s.excluded_events
                      << " events excluded, " << s.fallback_steps << " fallback flow steps\n";
        } else if (label_cmd->parsed()) {
            pipeline::run_label_actions(vdir, or_default(out, vdir / "timeline.csv"), cfg);
        } else if (ctx_cmd->parsed()) {
            const auto n = pipeline::run_context(vdir, or_default(out, vdir / "context.jsonl"), cfg);
            std::cout << n << " context records\n";
        } else if (weights_cmd->parsed()) {
            const auto w = pipeline::run_weights(vdir, or_default(gt_dir, vdir / "gt"),
                                                 or_default(out, vdir / "weights.csv"), cfg, g.jobs);
            std::cout << w.size() << " sample weights\n";
        } else if (stats_cmd->parsed()) {
            std::vector<fs::path> paths(videos.begin(), videos.end());
            pipeline::run_stats(paths, out, cfg);
        } else if (eval_cmd->parsed()) {
            pipeline::EvalPaths paths{pred_dir, or_default(gt_dir, vdir / "gt"), fix_dir, timeline};
            const auto run = pipeline::run_eval(vdir, paths, cfg, g.jobs);
            io::write_file(or_default(out, vdir / "eval_run.json"), bench::eval_run_json(run));
            std::ostringstream excl;
            bench::write_eval_exclusions(excl, run.exclusions);
            io::write_file(or_default(exclusions, vdir / "eval_exclusions.csv"), excl.str());
            std::cout << run.scores.size() << " frames scored, " << run.exclusions.size() << " excluded\n";
        } else if (report_cmd->parsed()) {
            std::vector<fs::path> paths(runs.begin(), runs.end());
            const auto text = pipeline::run_report(paths, bench::parse_report_format(format));
            if (out.empty()) {
                std::cout << text;
            } else {
                io::write_file(out, text);
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_io_error(e.code()) ? kExitIo : kExitValidation;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
