#pragma once

// Per-key-frame ground truth: gather the fixation window, drop non-fixations and
// irrelevant in-vehicle gaze, map to the scene view, trace to the key frame through
// optical flow, rasterize and blur. The legacy (homography-aggregated, max-of-
// Gaussians) construction is kept alongside for comparisons.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drivegaze/align.hpp"
#include "drivegaze/flowprop.hpp"
#include "drivegaze/geometry.hpp"
#include "drivegaze/ingest.hpp"
#include "drivegaze/raster.hpp"

namespace drivegaze::heatmap {

using geometry::PixelPoint;

struct HeatmapConfig {
    double sigma_px = 40.0;
    /// Kernel half-width in pixels; ⌈3σ⌉ when unset.
    std::optional<int> truncate_radius;
    int window_half = 12;

    int radius() const;
};

void validate(const HeatmapConfig& cfg);

/// ETG frame → homography mapping ETG pixels into the aligned GAR frame.
using HomographyMap = std::map<std::int64_t, geometry::Homography>;

/// GAR frame k → homography mapping frame k onto frame k+1 (legacy aggregation only).
using GarChain = std::map<std::int64_t, geometry::Homography>;

enum class Provenance { scene, out_of_view, traced_exit };
std::string_view to_string(Provenance p) noexcept;

enum class ExclusionReason {
    saccade,
    blink,
    tracker_error,
    in_vehicle_speedometer,
    in_vehicle_other,
    oob_error,
    unmappable,
    out_of_range,
    outside_key_range,
};
std::string_view to_string(ExclusionReason r) noexcept;
ExclusionReason parse_exclusion_reason(std::string_view token);

struct Exclusion {
    std::int64_t etg_frame = 0;
    std::int64_t timestamp_us = 0;
    ExclusionReason reason = ExclusionReason::saccade;

    friend bool operator==(const Exclusion&, const Exclusion&) = default;
};

/// Reason an event never contributes to new-mode ground truth, decided from its
/// class and label alone; nullopt for fixations that are kept.
std::optional<ExclusionReason> filter_reason(const ingest::FixationEvent& ev) noexcept;

/// A retained fixation mapped into its own GAR frame, before flow tracing.
struct MappedFixation {
    std::int64_t etg_frame = 0;
    std::int64_t timestamp_us = 0;
    std::int64_t gar_frame = 0;
    PixelPoint point;
    Provenance provenance = Provenance::scene;
    bool clamped = false;
};

struct MappingOutcome {
    std::optional<MappedFixation> mapped;
    std::optional<ExclusionReason> excluded;
};

/// Steps 1–3 for a single event: filter, align, project through the ETG→GAR
/// homography and push off-frame gaze onto the border. Throws MissingHomography when
/// a retained fixation's ETG frame has none.
MappingOutcome map_event(const ingest::FixationEvent& ev, const align::AlignmentSpec& alignment,
                         const HomographyMap& homographies, int width, int height);

struct GazePoint {
    PixelPoint point;
    Provenance provenance = Provenance::scene;
    std::int64_t etg_frame = 0;
    std::int64_t timestamp_us = 0;
    std::int64_t source_gar_frame = 0;
    /// Clamped onto the border at any stage.
    bool clamped = false;
};

/// Traces the mapped fixations whose GAR frame lies in the key frame's window to the key.
std::vector<GazePoint> trace_window(std::int64_t key_gar_frame, std::span<const MappedFixation> mapped,
                                    const align::AlignmentSpec& alignment, const flowprop::FlowProvider& flows,
                                    const HeatmapConfig& cfg, int width, int height);

/// map_event + trace_window for one key frame.
std::vector<GazePoint> collect_window(std::int64_t key_gar_frame, std::span<const ingest::FixationEvent> events,
                                      const align::AlignmentSpec& alignment, const HomographyMap& homographies,
                                      const flowprop::FlowProvider& flows, const HeatmapConfig& cfg, int width,
                                      int height);

/// Marks the pixel nearest each point; repeated pixels count once. Throws OutOfRaster
/// for points outside the raster.
FixationMap rasterize(std::span<const PixelPoint> points, int width, int height);

/// Separable truncated Gaussian with zero padding, divided by its maximum. An empty
/// fixation map stays all-zero.
SaliencyMap gaussian_blur(const FixationMap& fixations, const HeatmapConfig& cfg);

struct LegacyPoint {
    PixelPoint point;  // GAR pixels in its own frame
    std::int64_t gar_frame = 0;
};

/// Every event with finite coordinates (saccades and blinks included) projected
/// through its ETG→GAR homography; unprojectable events are dropped.
std::vector<LegacyPoint> legacy_points(std::span<const ingest::FixationEvent> events,
                                       const align::AlignmentSpec& alignment, const HomographyMap& homographies);

/// Window points motion-compensated into the key frame (possibly off-raster);
/// unprojectable points are dropped. Throws MissingHomography when the chain has a gap.
std::vector<PixelPoint> legacy_window_points(std::int64_t key_gar_frame, std::span<const LegacyPoint> points,
                                             const GarChain& chain, const align::AlignmentSpec& alignment,
                                             const HeatmapConfig& cfg);

/// Old-style map: window points motion-compensated through the frame-to-frame
/// homography chain, each drawn as a unit-peak Gaussian, combined by pixelwise max.
/// Throws MissingHomography when the chain has a gap.
SaliencyMap legacy_aggregate(std::int64_t key_gar_frame, std::span<const LegacyPoint> points, const GarChain& chain,
                             const align::AlignmentSpec& alignment, const HeatmapConfig& cfg, int width, int height);

struct KeyFrameTruth {
    std::int64_t key_frame = 0;
    std::vector<GazePoint> points;
    FixationMap fixations;
    SaliencyMap saliency;

    bool blank() const noexcept { return points.empty(); }
};

struct GroundTruth {
    std::vector<KeyFrameTruth> frames;
    std::vector<Exclusion> exclusions;
    int fallback_steps = 0;
};

struct KeyRange {
    std::int64_t first = 0;
    std::int64_t last = 0;  // inclusive
};

/// New-mode ground truth for a range of key frames, computed in parallel. Every
/// input event is either traced into some key frame or listed once in `exclusions`.
GroundTruth build_ground_truth(std::span<const ingest::FixationEvent> events, const align::AlignmentSpec& alignment,
                               const HomographyMap& homographies, const flowprop::FlowProvider& flows,
                               const HeatmapConfig& cfg, int width, int height, KeyRange keys, int jobs);

void write_exclusions(std::ostream& out, std::span<const Exclusion> exclusions);
std::vector<Exclusion> parse_exclusions(std::string_view text);

}  // namespace drivegaze::heatmap
