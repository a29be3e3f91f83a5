#include "drivegaze/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <iterator>
#include <ostream>
#include <utility>

#include <nlohmann/json.hpp>

#include "drivegaze/error.hpp"
#include "drivegaze/io_util.hpp"

namespace drivegaze::ingest {
namespace {

using nlohmann::json;

template <typename E, std::size_t N>
using EnumTable = std::array<std::pair<E, std::string_view>, N>;

constexpr EnumTable<EventClass, 4> kEventClasses{{
    {EventClass::fixation, "fixation"},
    {EventClass::saccade, "saccade"},
    {EventClass::blink, "blink"},
    {EventClass::error, "error"},
}};

constexpr EnumTable<GazeLabel, 6> kGazeLabels{{
    {GazeLabel::scene, "scene"},
    {GazeLabel::in_vehicle_speedometer, "in_vehicle_speedometer"},
    {GazeLabel::in_vehicle_mirror, "in_vehicle_mirror"},
    {GazeLabel::in_vehicle_other, "in_vehicle_other"},
    {GazeLabel::out_of_view, "out_of_view"},
    {GazeLabel::oob_error, "oob_error"},
}};

constexpr EnumTable<LateralLabel, 6> kLateralLabels{{
    {LateralLabel::straight, "straight"},
    {LateralLabel::turn_left, "turn_left"},
    {LateralLabel::turn_right, "turn_right"},
    {LateralLabel::lane_change_left, "lane_change_left"},
    {LateralLabel::lane_change_right, "lane_change_right"},
    {LateralLabel::u_turn, "u_turn"},
}};

constexpr EnumTable<IntersectionType, 4> kIntersectionTypes{{
    {IntersectionType::unsignalized, "unsignalized"},
    {IntersectionType::signalized, "signalized"},
    {IntersectionType::roundabout, "roundabout"},
    {IntersectionType::merge, "merge"},
}};

constexpr EnumTable<Priority, 2> kPriorities{{
    {Priority::right_of_way, "right_of_way"},
    {Priority::yield, "yield"},
}};

constexpr EnumTable<Weather, 3> kWeather{{
    {Weather::sunny, "sunny"},
    {Weather::cloudy, "cloudy"},
    {Weather::rainy, "rainy"},
}};

constexpr EnumTable<TimeOfDay, 3> kTimeOfDay{{
    {TimeOfDay::morning, "morning"},
    {TimeOfDay::evening, "evening"},
    {TimeOfDay::night, "night"},
}};

constexpr EnumTable<Location, 3> kLocations{{
    {Location::highway, "highway"},
    {Location::urban, "urban"},
    {Location::suburban, "suburban"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const EnumTable<E, N>& table, E value) noexcept
{
    for (const auto& [v, name] : table) {
        if (v == value) {
            return name;
        }
    }
    return "?";
}

template <typename E, std::size_t N>
E value_of(const EnumTable<E, N>& table, std::string_view token)
{
    for (const auto& [v, name] : table) {
        if (name == token) {
            return v;
        }
    }
    throw Error(Errc::UnknownEnum, "'" + std::string(token) + "'");
}

std::string slurp(std::istream& in)
{
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

constexpr std::string_view kFixationHeader = "etg_frame,timestamp_us,event_class,x,y,gaze_label";
constexpr std::string_view kFixationHeaderNoLabel = "etg_frame,timestamp_us,event_class,x,y";
constexpr std::string_view kTelemetryHeader = "gar_frame,speed_kmh,lat,lon";

[[noreturn]] void malformed(std::int64_t line_no, const std::string& what)
{
    throw Error(Errc::MalformedRow, what, line_no);
}

std::int64_t int_field(std::string_view field, std::int64_t line_no, const char* name)
{
    const auto v = io::to_int(field);
    if (!v) {
        malformed(line_no, std::string(name) + " is not an integer: '" + std::string(field) + "'");
    }
    return *v;
}

double double_field(std::string_view field, std::int64_t line_no, const char* name)
{
    const auto v = io::to_double(field);
    if (!v) {
        malformed(line_no, std::string(name) + " is not a number: '" + std::string(field) + "'");
    }
    return *v;
}

template <typename F>
auto with_line(std::int64_t line_no, F&& parse) -> decltype(parse())
{
    try {
        return parse();
    } catch (const Error& e) {
        if (e.code() == Errc::UnknownEnum && !e.position()) {
            throw Error(Errc::UnknownEnum, e.what(), line_no);
        }
        throw;
    }
}

std::vector<FixationEvent> parse_fixation_text(std::string_view text)
{
    io::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line)) {
        throw Error(Errc::BadHeader, "missing header", 1);
    }
    bool has_label = false;
    if (line == kFixationHeader) {
        has_label = true;
    } else if (line != kFixationHeaderNoLabel) {
        throw Error(Errc::BadHeader, "expected '" + std::string(kFixationHeader) + "'", 1);
    }
    const std::size_t arity = has_label ? 6 : 5;

    std::vector<FixationEvent> events;
    while (reader.next(line)) {
        const std::int64_t line_no = reader.line_number();
        if (line.empty()) {
            continue;
        }
        const auto fields = io::split_fields(line);
        if (fields.size() != arity) {
            malformed(line_no, "expected " + std::to_string(arity) + " fields, got " + std::to_string(fields.size()));
        }
        FixationEvent ev;
        ev.etg_frame = int_field(fields[0], line_no, "etg_frame");
        ev.timestamp_us = int_field(fields[1], line_no, "timestamp_us");
        ev.event_class = with_line(line_no, [&] { return parse_event_class(fields[2]); });
        if (ev.event_class == EventClass::error && (fields[3].empty() || fields[4].empty())) {
            ev.x = fields[3].empty() ? std::nan("") : double_field(fields[3], line_no, "x");
            ev.y = fields[4].empty() ? std::nan("") : double_field(fields[4], line_no, "y");
        } else {
            ev.x = double_field(fields[3], line_no, "x");
            ev.y = double_field(fields[4], line_no, "y");
        }
        if (has_label) {
            ev.gaze_label = with_line(line_no, [&] { return parse_gaze_label(fields[5]); });
        }
        if (ev.etg_frame < 0) {
            malformed(line_no, "negative etg_frame");
        }
        if (ev.event_class != EventClass::error && !(std::isfinite(ev.x) && std::isfinite(ev.y))) {
            malformed(line_no, "non-finite coordinates on a non-error event");
        }
        events.push_back(ev);
    }
    std::stable_sort(events.begin(), events.end(), [](const FixationEvent& a, const FixationEvent& b) {
        return std::pair(a.etg_frame, a.timestamp_us) < std::pair(b.etg_frame, b.timestamp_us);
    });
    return events;
}

std::vector<TelemetrySample> parse_telemetry_text(std::string_view text)
{
    io::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != kTelemetryHeader) {
        throw Error(Errc::BadHeader, "expected '" + std::string(kTelemetryHeader) + "'", 1);
    }
    std::vector<TelemetrySample> samples;
    while (reader.next(line)) {
        const std::int64_t line_no = reader.line_number();
        if (line.empty()) {
            continue;
        }
        const auto fields = io::split_fields(line);
        if (fields.size() != 4) {
            malformed(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        }
        TelemetrySample s;
        s.gar_frame = int_field(fields[0], line_no, "gar_frame");
        s.speed_kmh = double_field(fields[1], line_no, "speed_kmh");
        s.lat = double_field(fields[2], line_no, "lat");
        s.lon = double_field(fields[3], line_no, "lon");
        if (!std::isfinite(s.speed_kmh)) {
            malformed(line_no, "non-finite speed");
        }
        if (s.speed_kmh < 0.0) {
            throw Error(Errc::NegativeSpeed, "line " + std::to_string(line_no), s.gar_frame);
        }
        if (!(std::abs(s.lat) <= 90.0) || !(std::abs(s.lon) <= 180.0)) {
            throw Error(Errc::InvalidValue, "line " + std::to_string(line_no) + ": GPS coordinate out of range", s.gar_frame);
        }
        samples.push_back(s);
    }
    std::stable_sort(samples.begin(), samples.end(),
                     [](const TelemetrySample& a, const TelemetrySample& b) { return a.gar_frame < b.gar_frame; });
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].gar_frame == samples[i - 1].gar_frame) {
            throw Error(Errc::DuplicateFrame, "", samples[i].gar_frame);
        }
    }
    return samples;
}

std::int64_t json_int(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key) || !j.at(key).is_number_integer()) {
        throw Error(Errc::InvalidValue, where + ": '" + key + "' must be an integer");
    }
    return j.at(key).get<std::int64_t>();
}

std::string json_string(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key) || !j.at(key).is_string()) {
        throw Error(Errc::InvalidValue, where + ": '" + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
}

AnnotationSet from_json(const json& doc)
{
    if (!doc.is_object()) {
        throw Error(Errc::InvalidValue, "annotation document must be a JSON object");
    }
    AnnotationSet set;
    if (doc.contains("lateral_segments")) {
        const json& segs = doc.at("lateral_segments");
        if (!segs.is_array()) {
            throw Error(Errc::InvalidValue, "lateral_segments must be an array");
        }
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const json& s = segs[i];
            if (!s.is_array() || s.size() != 3 || !s[0].is_number_integer() || !s[1].is_number_integer() ||
                !s[2].is_string()) {
                throw Error(Errc::InvalidValue, "lateral_segments[" + std::to_string(i) + "] must be [start,end,label]");
            }
            set.lateral_segments.push_back(
                {s[0].get<std::int64_t>(), s[1].get<std::int64_t>(), parse_lateral_label(s[2].get<std::string>())});
        }
    }
    if (doc.contains("intersections")) {
        const json& xs = doc.at("intersections");
        if (!xs.is_array()) {
            throw Error(Errc::InvalidValue, "intersections must be an array");
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const json& x = xs[i];
            const std::string where = "intersections[" + std::to_string(i) + "]";
            if (!x.is_object()) {
                throw Error(Errc::InvalidValue, where + " must be an object");
            }
            Intersection in;
            in.entry_frame = json_int(x, "entry_frame", where);
            in.exit_frame = json_int(x, "exit_frame", where);
            in.type = parse_intersection_type(json_string(x, "type", where));
            in.priority = parse_priority(json_string(x, "priority", where));
            if (x.contains("first_fixation_frame") && !x.at("first_fixation_frame").is_null()) {
                in.first_fixation_frame = json_int(x, "first_fixation_frame", where);
            }
            if (x.contains("lat") || x.contains("lon")) {
                if (!x.contains("lat") || !x.contains("lon") || !x.at("lat").is_number() || !x.at("lon").is_number()) {
                    throw Error(Errc::InvalidValue, where + ": lat and lon must both be numbers");
                }
                in.location = GeoPoint{x.at("lat").get<double>(), x.at("lon").get<double>()};
            }
            set.intersections.push_back(in);
        }
    }
    if (doc.contains("global_context")) {
        const json& g = doc.at("global_context");
        if (!g.is_object()) {
            throw Error(Errc::InvalidValue, "global_context must be an object");
        }
        set.global_context.weather = parse_weather(json_string(g, "weather", "global_context"));
        set.global_context.time_of_day = parse_time_of_day(json_string(g, "time_of_day", "global_context"));
        set.global_context.location = parse_location(json_string(g, "location", "global_context"));
    }
    if (doc.contains("offset_frames")) {
        set.offset_frames = json_int(doc, "offset_frames", "document");
    }
    if (doc.contains("n_etg")) {
        set.n_etg = json_int(doc, "n_etg", "document");
    }
    if (doc.contains("n_gar")) {
        set.n_gar = json_int(doc, "n_gar", "document");
    }

    std::stable_sort(set.lateral_segments.begin(), set.lateral_segments.end(),
                     [](const LateralSegment& a, const LateralSegment& b) { return a.start_frame < b.start_frame; });
    std::stable_sort(set.intersections.begin(), set.intersections.end(),
                     [](const Intersection& a, const Intersection& b) { return a.entry_frame < b.entry_frame; });
    validate(set);
    return set;
}

}  // namespace

std::string_view to_string(EventClass v) noexcept { return name_of(kEventClasses, v); }
std::string_view to_string(GazeLabel v) noexcept { return name_of(kGazeLabels, v); }
std::string_view to_string(LateralLabel v) noexcept { return name_of(kLateralLabels, v); }
std::string_view to_string(IntersectionType v) noexcept { return name_of(kIntersectionTypes, v); }
std::string_view to_string(Priority v) noexcept { return name_of(kPriorities, v); }
std::string_view to_string(Weather v) noexcept { return name_of(kWeather, v); }
std::string_view to_string(TimeOfDay v) noexcept { return name_of(kTimeOfDay, v); }
std::string_view to_string(Location v) noexcept { return name_of(kLocations, v); }

EventClass parse_event_class(std::string_view token) { return value_of(kEventClasses, token); }
GazeLabel parse_gaze_label(std::string_view token) { return value_of(kGazeLabels, token); }
LateralLabel parse_lateral_label(std::string_view token) { return value_of(kLateralLabels, token); }
IntersectionType parse_intersection_type(std::string_view token) { return value_of(kIntersectionTypes, token); }
Priority parse_priority(std::string_view token) { return value_of(kPriorities, token); }
Weather parse_weather(std::string_view token) { return value_of(kWeather, token); }
TimeOfDay parse_time_of_day(std::string_view token) { return value_of(kTimeOfDay, token); }
Location parse_location(std::string_view token) { return value_of(kLocations, token); }

bool operator==(const FixationEvent& a, const FixationEvent& b) noexcept
{
    const auto same = [](double p, double q) { return p == q || (std::isnan(p) && std::isnan(q)); };
    return a.etg_frame == b.etg_frame && a.timestamp_us == b.timestamp_us && a.event_class == b.event_class &&
           same(a.x, b.x) && same(a.y, b.y) && a.gaze_label == b.gaze_label;
}

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::vector<FixationEvent> parse_fixation_log(std::istream& in) { return parse_fixation_text(slurp(in)); }

std::vector<FixationEvent> parse_fixation_log(const std::filesystem::path& path)
{
    return parse_fixation_text(io::read_file(path));
}

void write_fixation_log(std::ostream& out, const std::vector<FixationEvent>& events)
{
    out << kFixationHeader << '\n';
    for (const FixationEvent& e : events) {
        out << e.etg_frame << ',' << e.timestamp_us << ',' << to_string(e.event_class) << ',' << format_double(e.x)
            << ',' << format_double(e.y) << ',' << to_string(e.gaze_label) << '\n';
    }
}

std::vector<TelemetrySample> parse_telemetry(std::istream& in) { return parse_telemetry_text(slurp(in)); }

std::vector<TelemetrySample> parse_telemetry(const std::filesystem::path& path)
{
    return parse_telemetry_text(io::read_file(path));
}

void write_telemetry(std::ostream& out, const std::vector<TelemetrySample>& samples)
{
    out << kTelemetryHeader << '\n';
    for (const TelemetrySample& s : samples) {
        out << s.gar_frame << ',' << format_double(s.speed_kmh) << ',' << format_double(s.lat) << ','
            << format_double(s.lon) << '\n';
    }
}

void validate(const AnnotationSet& set)
{
    if (set.n_etg <= 0 || set.n_gar <= 0) {
        throw Error(Errc::InvalidValue, "n_etg and n_gar must be positive");
    }
    for (std::size_t i = 0; i < set.lateral_segments.size(); ++i) {
        const LateralSegment& s = set.lateral_segments[i];
        if (s.start_frame < 0 || s.end_frame < s.start_frame) {
            throw Error(Errc::InvalidValue, "lateral segment with invalid range", s.start_frame);
        }
        if (i > 0) {
            const LateralSegment& prev = set.lateral_segments[i - 1];
            if (s.start_frame <= prev.end_frame) {
                throw Error(Errc::OverlappingSegments, "lateral segments [" + std::to_string(prev.start_frame) + "," +
                                                           std::to_string(prev.end_frame) + "] and [" +
                                                           std::to_string(s.start_frame) + "," +
                                                           std::to_string(s.end_frame) + "]");
            }
        }
    }
    for (std::size_t i = 0; i < set.intersections.size(); ++i) {
        const Intersection& x = set.intersections[i];
        if (x.entry_frame < 0 || x.exit_frame < x.entry_frame) {
            throw Error(Errc::InvalidValue, "intersection with invalid range", x.entry_frame);
        }
        if (x.priority == Priority::yield && !x.first_fixation_frame) {
            throw Error(Errc::MissingFirstFixation, "yield intersection entered at frame " +
                                                        std::to_string(x.entry_frame));
        }
        if (x.priority == Priority::right_of_way && x.first_fixation_frame) {
            throw Error(Errc::InvalidValue, "first_fixation_frame given for a right_of_way intersection",
                        x.entry_frame);
        }
        if (x.first_fixation_frame && (*x.first_fixation_frame < 0 || *x.first_fixation_frame > x.exit_frame)) {
            throw Error(Errc::InvalidValue, "first_fixation_frame outside [0, exit_frame]", x.entry_frame);
        }
        if (i > 0) {
            const Intersection& prev = set.intersections[i - 1];
            if (x.entry_frame <= prev.exit_frame) {
                throw Error(Errc::OverlappingSegments, "intersections entered at " + std::to_string(prev.entry_frame) +
                                                           " and " + std::to_string(x.entry_frame));
            }
        }
    }
}

AnnotationSet parse_annotations(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::MalformedRow, e.what(), static_cast<std::int64_t>(e.byte));
    }
    return from_json(doc);
}

AnnotationSet parse_annotations(const std::filesystem::path& path) { const std::string text = io::read_file(path);
    return parse_annotations(std::string_view(text)); }

std::string serialize_annotations(const AnnotationSet& set)
{
    json doc = json::object();
    json segs = json::array();
    for (const LateralSegment& s : set.lateral_segments) {
        segs.push_back(json::array({s.start_frame, s.end_frame, to_string(s.label)}));
    }
    json xs = json::array();
    for (const Intersection& x : set.intersections) {
        json obj = {{"entry_frame", x.entry_frame},
                    {"exit_frame", x.exit_frame},
                    {"type", to_string(x.type)},
                    {"priority", to_string(x.priority)}};
        if (x.first_fixation_frame) {
            obj["first_fixation_frame"] = *x.first_fixation_frame;
        }
        if (x.location) {
            obj["lat"] = x.location->lat;
            obj["lon"] = x.location->lon;
        }
        xs.push_back(std::move(obj));
    }
    doc["lateral_segments"] = std::move(segs);
    doc["intersections"] = std::move(xs);
    doc["global_context"] = {{"weather", to_string(set.global_context.weather)},
                             {"time_of_day", to_string(set.global_context.time_of_day)},
                             {"location", to_string(set.global_context.location)}};
    doc["offset_frames"] = set.offset_frames;
    doc["n_etg"] = set.n_etg;
    doc["n_gar"] = set.n_gar;
    return doc.dump(2) + "\n";
}

std::string frame_name(std::int64_t frame, std::string_view prefix, std::string_view extension)
{
    std::array<char, 32> digits{};
    std::snprintf(digits.data(), digits.size(), "%06lld", static_cast<long long>(frame));
    std::string out(prefix);
    out += digits.data();
    out += extension;
    return out;
}

std::filesystem::path VideoLayout::correspondences(std::int64_t etg_frame) const
{
    return correspondence_dir() / frame_name(etg_frame, "corr_", ".csv");
}

std::filesystem::path VideoLayout::frame(std::int64_t gar_frame) const
{
    return frame_dir() / frame_name(gar_frame, "", ".pgm");
}

std::filesystem::path VideoLayout::gar_homography(std::int64_t gar_frame) const
{
    return gar_homography_dir() / frame_name(gar_frame, "gh_", ".txt");
}

std::string VideoLayout::video_id() const
{
    const auto normalized = root.lexically_normal();
    std::string name = normalized.filename().string();
    if (name.empty()) {
        name = normalized.parent_path().filename().string();
    }
    return name;
}

VideoData load_video(const std::filesystem::path& root)
{
    VideoData data;
    data.layout.root = root;
    data.annotations = parse_annotations(data.layout.annotations());
    data.events = parse_fixation_log(data.layout.fixations());
    if (std::filesystem::exists(data.layout.telemetry())) {
        data.telemetry = parse_telemetry(data.layout.telemetry());
    }
    return data;
}

}  // namespace drivegaze::ingest
