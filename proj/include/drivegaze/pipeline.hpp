#pragma once

// File-level drivers behind the CLI subcommands. Each reads a video directory laid
// out as described by ingest::VideoLayout and writes its products to disk.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drivegaze/bench.hpp"
#include "drivegaze/config.hpp"
#include "drivegaze/heatmap.hpp"

namespace drivegaze::pipeline {

namespace fs = std::filesystem;

/// Seed for one frame's RANSAC run, independent of scheduling.
std::uint64_t frame_seed(std::uint64_t base, std::int64_t frame) noexcept;

struct AlignSummary {
    std::size_t frames = 0;
    std::vector<std::int64_t> failed;  // ETG frames without a model
};

/// Estimates an ETG→GAR homography for every correspondence file and writes
/// out_dir/h_%06d.txt.
AlignSummary run_align(const fs::path& video, const fs::path& out_dir, const PipelineConfig& cfg, int jobs);

/// Reads every h_%06d.txt in dir.
heatmap::HomographyMap load_homographies(const fs::path& dir);

/// GAR k→k+1 homographies for k in [0, n_gar−1): gh_%06d.txt when present, else
/// fitted to the forward flow; frames with neither are left out.
heatmap::GarChain load_gar_chain(const fs::path& video, std::int64_t n_gar, const PipelineConfig& cfg);

/// Writes etg_frame,timestamp_us,gar_frame,x,y,provenance,clamped for every retained
/// fixation (before tracing). Returns the number of rows.
std::size_t run_gaze_map(const fs::path& video, const fs::path& homography_dir, const fs::path& out_csv,
                         const PipelineConfig& cfg);

/// Points of one key frame after tracing: etg_frame,timestamp_us,source_gar_frame,x,y,provenance,clamped.
std::vector<heatmap::GazePoint> run_propagate(const fs::path& video, const fs::path& homography_dir,
                                              std::int64_t key, const fs::path& out_csv, const PipelineConfig& cfg);

struct GtSummary {
    std::size_t key_frames = 0;
    std::size_t blank = 0;
    std::size_t excluded_events = 0;
    int fallback_steps = 0;
};

/// Writes out_dir/%06d.{pfm,pbm,pgm} per key frame and, in the flow-traced mode,
/// out_dir/exclusions.csv.
GtSummary run_gt(const fs::path& video, const fs::path& homography_dir, const fs::path& out_dir,
                 const PipelineConfig& cfg, int jobs, std::optional<heatmap::KeyRange> keys = std::nullopt);

tasklab::VideoActions video_actions(const fs::path& video, const PipelineConfig& cfg);

void run_label_actions(const fs::path& video, const fs::path& out_csv, const PipelineConfig& cfg);
std::size_t run_context(const fs::path& video, const fs::path& out_jsonl, const PipelineConfig& cfg);
std::vector<tasklab::SampleWeight> run_weights(const fs::path& video, const fs::path& gt_dir,
                                               const fs::path& out_csv, const PipelineConfig& cfg, int jobs);
std::vector<tasklab::StatsRow> run_stats(std::span<const fs::path> videos, const fs::path& out_csv,
                                         const PipelineConfig& cfg);

struct EvalPaths {
    fs::path pred_dir;
    fs::path gt_dir;
    fs::path fix_dir;
    /// Recomputed from telemetry and annotations when empty.
    fs::path timeline_csv;
};

bench::EvalRun run_eval(const fs::path& video, const EvalPaths& paths, const PipelineConfig& cfg, int jobs);

/// Merges run files and renders the report.
std::string run_report(std::span<const fs::path> runs, bench::ReportFormat format);

}  // namespace drivegaze::pipeline
