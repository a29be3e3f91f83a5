#pragma once

// Canonical on-disk formats for eye-tracker events, vehicle telemetry and the
// manual annotation document, plus the per-video directory layout.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drivegaze::ingest {

enum class EventClass { fixation, saccade, blink, error };

enum class GazeLabel { scene, in_vehicle_speedometer, in_vehicle_mirror, in_vehicle_other, out_of_view, oob_error };

enum class LateralLabel { straight, turn_left, turn_right, lane_change_left, lane_change_right, u_turn };

enum class IntersectionType { unsignalized, signalized, roundabout, merge };

enum class Priority { right_of_way, yield };

enum class Weather { sunny, cloudy, rainy };
enum class TimeOfDay { morning, evening, night };
enum class Location { highway, urban, suburban };

std::string_view to_string(EventClass v) noexcept;
std::string_view to_string(GazeLabel v) noexcept;
std::string_view to_string(LateralLabel v) noexcept;
std::string_view to_string(IntersectionType v) noexcept;
std::string_view to_string(Priority v) noexcept;
std::string_view to_string(Weather v) noexcept;
std::string_view to_string(TimeOfDay v) noexcept;
std::string_view to_string(Location v) noexcept;

// Each throws Error(UnknownEnum) for an unrecognised token.
EventClass parse_event_class(std::string_view token);
GazeLabel parse_gaze_label(std::string_view token);
LateralLabel parse_lateral_label(std::string_view token);
IntersectionType parse_intersection_type(std::string_view token);
Priority parse_priority(std::string_view token);
Weather parse_weather(std::string_view token);
TimeOfDay parse_time_of_day(std::string_view token);
Location parse_location(std::string_view token);

/// One eye-tracker sample. Coordinates are ETG image pixels and may be NaN only
/// for event_class == error.
struct FixationEvent {
    std::int64_t etg_frame = 0;
    std::int64_t timestamp_us = 0;
    EventClass event_class = EventClass::fixation;
    double x = 0.0;
    double y = 0.0;
    GazeLabel gaze_label = GazeLabel::scene;
};

bool operator==(const FixationEvent& a, const FixationEvent& b) noexcept;

struct TelemetrySample {
    std::int64_t gar_frame = 0;
    double speed_kmh = 0.0;
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const TelemetrySample&, const TelemetrySample&) = default;
};

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Frames are GAR indices; both ends inclusive.
struct LateralSegment {
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
    LateralLabel label = LateralLabel::straight;

    std::int64_t length() const noexcept { return end_frame - start_frame + 1; }
    friend bool operator==(const LateralSegment&, const LateralSegment&) = default;
};

struct Intersection {
    std::int64_t entry_frame = 0;
    std::int64_t exit_frame = 0;
    IntersectionType type = IntersectionType::unsignalized;
    Priority priority = Priority::right_of_way;
    /// Present iff priority == yield; may precede entry_frame.
    std::optional<std::int64_t> first_fixation_frame;
    /// Where the intersection is; when absent the ego position at entry_frame is used.
    std::optional<GeoPoint> location;

    friend bool operator==(const Intersection&, const Intersection&) = default;
};

struct GlobalContext {
    Weather weather = Weather::sunny;
    TimeOfDay time_of_day = TimeOfDay::morning;
    Location location = Location::urban;

    friend bool operator==(const GlobalContext&, const GlobalContext&) = default;
};

struct AnnotationSet {
    std::vector<LateralSegment> lateral_segments;
    std::vector<Intersection> intersections;
    GlobalContext global_context;
    std::int64_t offset_frames = 0;
    std::int64_t n_etg = 9000;
    std::int64_t n_gar = 7500;

    friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

// Fixation CSV: etg_frame,timestamp_us,event_class,x,y,gaze_label (gaze_label column optional).
std::vector<FixationEvent> parse_fixation_log(std::istream& in);
std::vector<FixationEvent> parse_fixation_log(const std::filesystem::path& path);
void write_fixation_log(std::ostream& out, const std::vector<FixationEvent>& events);

// Telemetry CSV: gar_frame,speed_kmh,lat,lon
std::vector<TelemetrySample> parse_telemetry(std::istream& in);
std::vector<TelemetrySample> parse_telemetry(const std::filesystem::path& path);
void write_telemetry(std::ostream& out, const std::vector<TelemetrySample>& samples);

AnnotationSet parse_annotations(std::string_view json_text);
AnnotationSet parse_annotations(const std::filesystem::path& path);
std::string serialize_annotations(const AnnotationSet& set);

/// Checks the AnnotationSet invariants; throws on the first violation.
void validate(const AnnotationSet& set);

/// Shortest round-trip decimal form ("nan"/"inf" for non-finite values).
std::string format_double(double v);

/// File names inside one video directory.
struct VideoLayout {
    std::filesystem::path root;

    std::filesystem::path annotations() const { return root / "annotations.json"; }
    std::filesystem::path fixations() const { return root / "fixations.csv"; }
    std::filesystem::path telemetry() const { return root / "telemetry.csv"; }
    std::filesystem::path correspondence_dir() const { return root / "correspondences"; }
    std::filesystem::path correspondences(std::int64_t etg_frame) const;
    std::filesystem::path flow_dir() const { return root / "flows"; }
    std::filesystem::path frame_dir() const { return root / "frames"; }
    std::filesystem::path frame(std::int64_t gar_frame) const;
    std::filesystem::path gar_homography_dir() const { return root / "gar_homographies"; }
    std::filesystem::path gar_homography(std::int64_t gar_frame) const;
    std::filesystem::path predictions_dir() const { return root / "predictions"; }
    std::string video_id() const;
};

std::string frame_name(std::int64_t frame, std::string_view prefix, std::string_view extension);

struct VideoData {
    VideoLayout layout;
    AnnotationSet annotations;
    std::vector<FixationEvent> events;
    std::vector<TelemetrySample> telemetry;
};

/// Loads annotations, fixations and telemetry from a video directory.
VideoData load_video(const std::filesystem::path& root);

}  // namespace drivegaze::ingest
