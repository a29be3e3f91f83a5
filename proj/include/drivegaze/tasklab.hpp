#pragma once

// Driver task and context labels: longitudinal actions from telemetry, lateral
// actions from annotations, intersection windows, per-sample context records and
// weights, and dataset statistics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drivegaze/ingest.hpp"
#include "drivegaze/metrics.hpp"
#include "drivegaze/raster.hpp"

namespace drivegaze::tasklab {

using ingest::IntersectionType;
using ingest::LateralLabel;
using ingest::Priority;

enum class Longitudinal { maintain, accelerate, decelerate, stopped };
std::string_view to_string(Longitudinal v) noexcept;
Longitudinal parse_longitudinal(std::string_view token);

struct ActionConfig {
    double stop_speed_kmh = 1.0;
    double accel_threshold_ms2 = 0.4;
    double fps = 25.0;
    int median_window = 5;
    int mean_window = 25;
    int min_segment_frames = 12;
};

void validate(const ActionConfig& cfg);

/// Per-frame speed (km/h) for frames [0, n_frames): linear interpolation between
/// samples (constant beyond the first/last), then a median filter and a moving
/// average, both edge-replicated. Throws InsufficientSamples for < 2 samples.
std::vector<double> smooth_speed(std::span<const ingest::TelemetrySample> samples, const ActionConfig& cfg,
                                 std::int64_t n_frames);

/// Running median / mean over an odd window with replicated edges.
std::vector<double> median_filter(std::span<const double> x, int window);
std::vector<double> moving_average(std::span<const double> x, int window);

/// m/s² from km/h by central differences; one-sided at the ends. Throws InsufficientSamples for < 3 frames.
std::vector<double> compute_acceleration(std::span<const double> speed_kmh, double fps);

/// Threshold labels before segment merging.
std::vector<Longitudinal> raw_longitudinal(std::span<const double> speed_kmh, std::span<const double> accel_ms2,
                                           const ActionConfig& cfg);

/// Repeatedly absorbs the shortest run below `min_len` (leftmost on ties) into its
/// longer neighbour (the earlier one on ties) until every run is long enough or a
/// single run remains.
template <typename T>
void merge_short_runs(std::vector<T>& labels, int min_len);

std::vector<Longitudinal> label_longitudinal(std::span<const double> speed_kmh, std::span<const double> accel_ms2,
                                             const ActionConfig& cfg);

/// Frames not covered by any segment are straight.
std::vector<LateralLabel> lateral_labels(const ingest::AnnotationSet& ann, std::int64_t n_frames);

struct ActionTimeline {
    std::vector<Longitudinal> longitudinal;
    std::vector<LateralLabel> lateral;

    std::int64_t size() const noexcept { return static_cast<std::int64_t>(lateral.size()); }
    friend bool operator==(const ActionTimeline&, const ActionTimeline&) = default;
};

/// Smoothed speed, acceleration and both label axes for one video.
struct VideoActions {
    std::vector<double> speed_kmh;
    std::vector<double> accel_ms2;
    ActionTimeline timeline;
};

VideoActions label_video(std::span<const ingest::TelemetrySample> telemetry, const ingest::AnnotationSet& ann,
                         const ActionConfig& cfg);

void write_timeline(std::ostream& out, const ActionTimeline& timeline);
ActionTimeline parse_timeline(std::string_view text);

inline constexpr std::int64_t kRightOfWayLeadFrames = 25;

struct IntersectionWindow {
    std::int64_t start = 0;
    std::int64_t end = 0;  // inclusive
    IntersectionType type = IntersectionType::unsignalized;
    Priority priority = Priority::right_of_way;

    bool contains(std::int64_t f) const noexcept { return f >= start && f <= end; }
    friend bool operator==(const IntersectionWindow&, const IntersectionWindow&) = default;
};

std::vector<IntersectionWindow> intersection_windows(const ingest::AnnotationSet& ann);

inline constexpr double kUnannounced = std::numeric_limits<double>::infinity();

/// Max lead distance speed·2.22 + 37.144 m.
double max_lead_distance(double speed_kmh) noexcept;

/// distance if within the max lead distance, else kUnannounced. Throws NegativeDistance.
double lead_distance_gate(double speed_kmh, double distance_m);

/// Great-circle distance (m) on a sphere of radius 6371 km.
double haversine_m(ingest::GeoPoint a, ingest::GeoPoint b) noexcept;

/// Ego position for frames [0, n_frames), interpolated like the speed.
std::vector<ingest::GeoPoint> interpolate_positions(std::span<const ingest::TelemetrySample> samples,
                                                    std::int64_t n_frames);

enum class NextAction { turn_right, turn_left, drive_straight };
std::string_view to_string(NextAction v) noexcept;

inline constexpr int kSampleFrames = 16;
inline constexpr int kSampleStride = 8;

struct ContextRecord {
    std::string video_id;
    std::int64_t start_frame = 0;
    ingest::GlobalContext global;
    double distance_to_intersection_m = kUnannounced;
    std::optional<Priority> priority;
    NextAction next_action = NextAction::drive_straight;
    std::array<double, kSampleFrames> speed_kmh{};
    std::array<double, kSampleFrames> accel_ms2{};
    LateralLabel lateral_action = LateralLabel::straight;
};

/// Most frequent label; ties go to the label whose last occurrence is latest.
LateralLabel modal_label(std::span<const LateralLabel> labels);

/// Record for the 16 frames starting at `start_frame`. The upcoming intersection is
/// the first one (by entry) whose exit is at or after the sample's last frame.
/// Throws WindowOutOfRange.
ContextRecord build_context_record(std::int64_t start_frame, const VideoActions& actions,
                                   std::span<const ingest::GeoPoint> positions, const ingest::AnnotationSet& ann,
                                   std::string video_id = {});

/// Sample start frames 0, 8, 16, … whose 16-frame window fits in n_frames.
std::vector<std::int64_t> sample_starts(std::int64_t n_frames);

std::string context_record_json(const ContextRecord& rec);

/// Pixelwise mean of the non-blank maps; all-zero if none. Throws InvalidValue
/// for an empty list and DimensionMismatch.
SaliencyMap video_mean_map(std::span<const SaliencyMap> maps);

bool is_blank(const SaliencyMap& map) noexcept;

/// Mean stable-mode KLD of the sample's non-blank maps against the video mean; 0 if all blank.
double sample_weight(std::span<const SaliencyMap> sample, const SaliencyMap& video_mean,
                     const metrics::MetricConfig& cfg = {});

struct SampleWeight {
    std::string video_id;
    std::int64_t start_frame = 0;
    double weight = 0.0;
};

void write_weights(std::ostream& out, std::span<const SampleWeight> weights);

enum class StatsGroup { lateral, longitudinal, intersection };
std::string_view to_string(StatsGroup g) noexcept;

struct StatsRow {
    StatsGroup group = StatsGroup::lateral;
    std::string label;
    std::int64_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population
    double pct_frames = 0.0;
};

struct VideoLabels {
    ActionTimeline timeline;
    ingest::AnnotationSet annotations;
};

/// Segment counts, duration mean/std (frames) and share of frames, per lateral label,
/// longitudinal label and intersection type. Runs never span two videos.
std::vector<StatsRow> dataset_stats(std::span<const VideoLabels> videos);

void write_stats(std::ostream& out, std::span<const StatsRow> rows);

template <typename T>
void merge_short_runs(std::vector<T>& labels, int min_len)
{
    struct Run {
        T label;
        std::int64_t length;
    };
    std::vector<Run> runs;
    for (const T& v : labels) {
        if (!runs.empty() && runs.back().label == v) {
            ++runs.back().length;
        } else {
            runs.push_back({v, 1});
        }
    }
    while (runs.size() > 1) {
        std::size_t shortest = runs.size();
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (runs[i].length < min_len && (shortest == runs.size() || runs[i].length < runs[shortest].length)) {
                shortest = i;
            }
        }
        if (shortest == runs.size()) {
            break;
        }
        std::size_t target;
        if (shortest == 0) {
            target = 1;
        } else if (shortest + 1 == runs.size()) {
            target = shortest - 1;
        } else {
            target = runs[shortest - 1].length >= runs[shortest + 1].length ? shortest - 1 : shortest + 1;
        }
        runs[target].length += runs[shortest].length;
        runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(shortest));
        // The runs either side of the removed one may now carry the same label.
        if (shortest > 0 && shortest < runs.size() && runs[shortest - 1].label == runs[shortest].label) {
            runs[shortest - 1].length += runs[shortest].length;
            runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(shortest));
        }
    }
    std::size_t pos = 0;
    for (const Run& r : runs) {
        for (std::int64_t k = 0; k < r.length; ++k) {
            labels[pos++] = r.label;
        }
    }
}

}  // namespace drivegaze::tasklab
