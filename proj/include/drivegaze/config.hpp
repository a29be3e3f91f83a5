#pragma once

#include <filesystem>
#include <string_view>

#include "drivegaze/geometry.hpp"
#include "drivegaze/heatmap.hpp"
#include "drivegaze/metrics.hpp"
#include "drivegaze/tasklab.hpp"

namespace drivegaze {

/// Settings shared by the CLI subcommands. JSON layout:
///   { "video": {"width", "height"},
///     "ransac": {"inlier_threshold_px", "confidence", "max_iters", "seed"},
///     "heatmap": {"sigma_px", "truncate_radius", "window_half"},
///     "actions": {"stop_speed_kmh", "accel_threshold_ms2", "fps", "median_window",
///                 "mean_window", "min_segment_frames"},
///     "metrics": {"kld_mode", "epsilon"} }
/// Every key is optional; unknown keys are rejected.
struct PipelineConfig {
    int width = 1920;
    int height = 1080;
    geometry::RansacConfig ransac;
    heatmap::HeatmapConfig heatmap;
    tasklab::ActionConfig actions;
    metrics::MetricConfig metrics;
    /// Homography-aggregated ground truth and the unstable KLD variant.
    bool legacy = false;
};

/// Throws InvalidConfig.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);
void validate(const PipelineConfig& cfg);

}  // namespace drivegaze
