#include "drivegaze/tasklab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <nlohmann/json.hpp>

#include "drivegaze/error.hpp"
#include "drivegaze/io_util.hpp"

namespace drivegaze::tasklab {

using ingest::GeoPoint;
using ingest::TelemetrySample;

namespace {

constexpr Longitudinal kLongitudinal[] = {Longitudinal::maintain, Longitudinal::accelerate, Longitudinal::decelerate,
                                          Longitudinal::stopped};

std::string fixed4(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string_view to_string(Longitudinal v) noexcept
{
    switch (v) {
    case Longitudinal::maintain: return "maintain";
    case Longitudinal::accelerate: return "accelerate";
    case Longitudinal::decelerate: return "decelerate";
    case Longitudinal::stopped: return "stopped";
    }
    return "?";
}

Longitudinal parse_longitudinal(std::string_view token)
{
    for (const auto v : kLongitudinal) {
        if (to_string(v) == token) {
            return v;
        }
    }
    throw Error(Errc::UnknownEnum, "unknown longitudinal label '" + std::string(token) + "'");
}

void validate(const ActionConfig& cfg)
{
    if (!(cfg.stop_speed_kmh > 0.0) || !(cfg.accel_threshold_ms2 > 0.0) || !(cfg.fps > 0.0)) {
        throw Error(Errc::InvalidConfig, "action thresholds and fps must be positive");
    }
    if (cfg.median_window < 1 || cfg.median_window % 2 == 0 || cfg.mean_window < 1 || cfg.mean_window % 2 == 0) {
        throw Error(Errc::InvalidConfig, "filter windows must be odd and positive");
    }
    if (cfg.min_segment_frames < 1) {
        throw Error(Errc::InvalidConfig, "min_segment_frames must be at least 1");
    }
}

namespace {

template <typename Get>
std::vector<double> interpolate(std::span<const TelemetrySample> s, std::int64_t n_frames, Get get)
{
    std::vector<double> out(static_cast<std::size_t>(std::max<std::int64_t>(n_frames, 0)));
    std::size_t seg = 0;
    for (std::int64_t f = 0; f < n_frames; ++f) {
        double v;
        if (f <= s.front().gar_frame) {
            v = get(s.front());
        } else if (f >= s.back().gar_frame) {
            v = get(s.back());
        } else {
            while (s[seg + 1].gar_frame < f) {
                ++seg;
            }
            const auto& a = s[seg];
            const auto& b = s[seg + 1];
            const double t = static_cast<double>(f - a.gar_frame) / static_cast<double>(b.gar_frame - a.gar_frame);
            v = get(a) + t * (get(b) - get(a));
        }
        out[static_cast<std::size_t>(f)] = v;
    }
    return out;
}

void require_samples(std::span<const TelemetrySample> samples)
{
    if (samples.size() < 2) {
        throw Error(Errc::InsufficientSamples, "need at least 2 telemetry samples, got " +
                                                   std::to_string(samples.size()));
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].gar_frame <= samples[i - 1].gar_frame) {
            throw Error(Errc::InvalidValue, "telemetry frames must be strictly increasing", samples[i].gar_frame);
        }
    }
}

void check_window(int window)
{
    if (window < 1 || window % 2 == 0) {
        throw Error(Errc::InvalidConfig, "filter window must be odd and positive");
    }
}

}  // namespace

std::vector<double> median_filter(std::span<const double> x, int window)
{
    check_window(window);
    const auto n = static_cast<std::int64_t>(x.size());
    const int half = window / 2;
    std::vector<double> out(x.size());
    std::vector<double> buf(static_cast<std::size_t>(window));
    for (std::int64_t t = 0; t < n; ++t) {
        for (int k = -half; k <= half; ++k) {
            buf[static_cast<std::size_t>(k + half)] = x[static_cast<std::size_t>(std::clamp<std::int64_t>(t + k, 0, n - 1))];
        }
        std::nth_element(buf.begin(), buf.begin() + half, buf.end());
        out[static_cast<std::size_t>(t)] = buf[static_cast<std::size_t>(half)];
    }
    return out;
}

std::vector<double> moving_average(std::span<const double> x, int window)
{
    check_window(window);
    const auto n = static_cast<std::int64_t>(x.size());
    const int half = window / 2;
    std::vector<double> out(x.size());
    for (std::int64_t t = 0; t < n; ++t) {
        double sum = 0.0;
        for (int k = -half; k <= half; ++k) {
            sum += x[static_cast<std::size_t>(std::clamp<std::int64_t>(t + k, 0, n - 1))];
        }
        out[static_cast<std::size_t>(t)] = sum / window;
    }
    return out;
}

std::vector<double> smooth_speed(std::span<const TelemetrySample> samples, const ActionConfig& cfg,
                                 std::int64_t n_frames)
{
    validate(cfg);
    require_samples(samples);
    const auto raw = interpolate(samples, n_frames, [](const TelemetrySample& s) { return s.speed_kmh; });
    return moving_average(median_filter(raw, cfg.median_window), cfg.mean_window);
}

std::vector<double> compute_acceleration(std::span<const double> v, double fps)
{
    if (v.size() < 3) {
        throw Error(Errc::InsufficientSamples, "acceleration needs at least 3 frames");
    }
    if (!(fps > 0.0)) {
        throw Error(Errc::InvalidConfig, "fps must be positive");
    }
    const std::size_t n = v.size();
    std::vector<double> a(n);
    const double k = fps / 3.6;
    a[0] = (v[1] - v[0]) * k;
    a[n - 1] = (v[n - 1] - v[n - 2]) * k;
    for (std::size_t t = 1; t + 1 < n; ++t) {
        a[t] = (v[t + 1] - v[t - 1]) * k / 2.0;
    }
    return a;
}

std::vector<Longitudinal> raw_longitudinal(std::span<const double> speed, std::span<const double> accel,
                                           const ActionConfig& cfg)
{
    validate(cfg);
    if (speed.size() != accel.size()) {
        throw Error(Errc::LengthMismatch, "speed has " + std::to_string(speed.size()) + " frames, acceleration " +
                                              std::to_string(accel.size()));
    }
    std::vector<Longitudinal> out(speed.size());
    for (std::size_t t = 0; t < speed.size(); ++t) {
        if (speed[t] <= cfg.stop_speed_kmh) {
            out[t] = Longitudinal::stopped;
        } else if (accel[t] >= cfg.accel_threshold_ms2) {
            out[t] = Longitudinal::accelerate;
        } else if (accel[t] <= -cfg.accel_threshold_ms2) {
            out[t] = Longitudinal::decelerate;
        } else {
            out[t] = Longitudinal::maintain;
        }
    }
    return out;
}

std::vector<Longitudinal> label_longitudinal(std::span<const double> speed, std::span<const double> accel,
                                             const ActionConfig& cfg)
{
    auto labels = raw_longitudinal(speed, accel, cfg);
    merge_short_runs(labels, cfg.min_segment_frames);
    return labels;
}

std::vector<LateralLabel> lateral_labels(const ingest::AnnotationSet& ann, std::int64_t n_frames)
{
    std::vector<LateralLabel> out(static_cast<std::size_t>(std::max<std::int64_t>(n_frames, 0)),
                                  LateralLabel::straight);
    for (const auto& seg : ann.lateral_segments) {
        const auto lo = std::max<std::int64_t>(seg.start_frame, 0);
        const auto hi = std::min<std::int64_t>(seg.end_frame, n_frames - 1);
        for (auto f = lo; f <= hi; ++f) {
            out[static_cast<std::size_t>(f)] = seg.label;
        }
    }
    return out;
}

VideoActions label_video(std::span<const TelemetrySample> telemetry, const ingest::AnnotationSet& ann,
                         const ActionConfig& cfg)
{
    VideoActions va;
    va.speed_kmh = smooth_speed(telemetry, cfg, ann.n_gar);
    va.accel_ms2 = compute_acceleration(va.speed_kmh, cfg.fps);
    va.timeline.longitudinal = label_longitudinal(va.speed_kmh, va.accel_ms2, cfg);
    va.timeline.lateral = lateral_labels(ann, ann.n_gar);
    return va;
}

void write_timeline(std::ostream& out, const ActionTimeline& timeline)
{
    out << "frame,longitudinal,lateral\n";
    for (std::int64_t f = 0; f < timeline.size(); ++f) {
        const auto i = static_cast<std::size_t>(f);
        out << f << ',' << to_string(timeline.longitudinal[i]) << ',' << ingest::to_string(timeline.lateral[i])
            << '\n';
    }
}

ActionTimeline parse_timeline(std::string_view text)
{
    io::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != "frame,longitudinal,lateral") {
        throw Error(Errc::BadHeader, "expected 'frame,longitudinal,lateral'", 1);
    }
    ActionTimeline tl;
    while (reader.next(line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = io::split_fields(line);
        const auto frame = fields.size() == 3 ? io::to_int(fields[0]) : std::nullopt;
        if (!frame) {
            throw Error(Errc::MalformedRow, "expected frame,longitudinal,lateral", reader.line_number());
        }
        if (*frame != tl.size()) {
            throw Error(Errc::MalformedRow, "timeline frames must be consecutive from 0", reader.line_number());
        }
        tl.longitudinal.push_back(parse_longitudinal(fields[1]));
        tl.lateral.push_back(ingest::parse_lateral_label(fields[2]));
    }
    return tl;
}

std::vector<IntersectionWindow> intersection_windows(const ingest::AnnotationSet& ann)
{
    std::vector<IntersectionWindow> out;
    out.reserve(ann.intersections.size());
    for (const auto& in : ann.intersections) {
        IntersectionWindow w;
        w.type = in.type;
        w.priority = in.priority;
        w.end = in.exit_frame;
        if (in.priority == Priority::yield) {
            w.start = *in.first_fixation_frame;
        } else {
            w.start = std::max<std::int64_t>(0, in.entry_frame - kRightOfWayLeadFrames);
        }
        out.push_back(w);
    }
    return out;
}

double max_lead_distance(double speed_kmh) noexcept { return speed_kmh * 2.22 + 37.144; }

double lead_distance_gate(double speed_kmh, double distance_m)
{
    if (distance_m < 0.0 || std::isnan(distance_m)) {
        throw Error(Errc::NegativeDistance, "distance must be non-negative, got " + ingest::format_double(distance_m));
    }
    return distance_m <= max_lead_distance(speed_kmh) ? distance_m : kUnannounced;
}

double haversine_m(GeoPoint a, GeoPoint b) noexcept
{
    constexpr double kRadius = 6371000.0;
    constexpr double kRad = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * kRad;
    const double dlon = (b.lon - a.lon) * kRad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * s2 * s2;
    return 2.0 * kRadius * std::asin(std::sqrt(std::min(1.0, h)));
}

std::vector<GeoPoint> interpolate_positions(std::span<const TelemetrySample> samples, std::int64_t n_frames)
{
    require_samples(samples);
    const auto lat = interpolate(samples, n_frames, [](const TelemetrySample& s) { return s.lat; });
    const auto lon = interpolate(samples, n_frames, [](const TelemetrySample& s) { return s.lon; });
    std::vector<GeoPoint> out(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        out[i] = {lat[i], lon[i]};
    }
    return out;
}

std::string_view to_string(NextAction v) noexcept
{
    switch (v) {
    case NextAction::turn_right: return "turn_right";
    case NextAction::turn_left: return "turn_left";
    case NextAction::drive_straight: return "drive_straight";
    }
    return "?";
}

LateralLabel modal_label(std::span<const LateralLabel> labels)
{
    constexpr std::size_t kLabels = 6;
    std::array<int, kLabels> count{};
    std::array<std::ptrdiff_t, kLabels> last{};
    last.fill(-1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto k = static_cast<std::size_t>(labels[i]);
        ++count[k];
        last[k] = static_cast<std::ptrdiff_t>(i);
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < kLabels; ++k) {
        if (count[k] > count[best] || (count[k] == count[best] && last[k] > last[best])) {
            best = k;
        }
    }
    return static_cast<LateralLabel>(best);
}

ContextRecord build_context_record(std::int64_t start, const VideoActions& actions,
                                   std::span<const GeoPoint> positions, const ingest::AnnotationSet& ann,
                                   std::string video_id)
{
    const auto& tl = actions.timeline;
    const std::int64_t n = tl.size();
    const std::int64_t last = start + kSampleFrames - 1;
    if (start < 0 || last >= n || static_cast<std::int64_t>(actions.speed_kmh.size()) < n ||
        static_cast<std::int64_t>(actions.accel_ms2.size()) < n || static_cast<std::int64_t>(positions.size()) < n) {
        throw Error(Errc::WindowOutOfRange,
                    "frames [" + std::to_string(start) + ", " + std::to_string(last) + "] not inside the video", start);
    }
    ContextRecord rec;
    rec.video_id = std::move(video_id);
    rec.start_frame = start;
    rec.global = ann.global_context;
    for (int i = 0; i < kSampleFrames; ++i) {
        const auto f = static_cast<std::size_t>(start + i);
        rec.speed_kmh[static_cast<std::size_t>(i)] = actions.speed_kmh[f];
        rec.accel_ms2[static_cast<std::size_t>(i)] = actions.accel_ms2[f];
    }
    rec.lateral_action =
        modal_label(std::span<const LateralLabel>(tl.lateral).subspan(static_cast<std::size_t>(start), kSampleFrames));

    const auto upcoming = std::find_if(ann.intersections.begin(), ann.intersections.end(),
                                       [&](const ingest::Intersection& in) { return in.exit_frame >= last; });
    if (upcoming == ann.intersections.end()) {
        return rec;
    }
    double distance = 0.0;
    if (upcoming->entry_frame > last) {
        const GeoPoint target = upcoming->location
                                    ? *upcoming->location
                                    : positions[static_cast<std::size_t>(std::min(upcoming->entry_frame, n - 1))];
        distance = haversine_m(positions[static_cast<std::size_t>(last)], target);
    }
    rec.distance_to_intersection_m = lead_distance_gate(actions.speed_kmh[static_cast<std::size_t>(last)], distance);
    if (std::isinf(rec.distance_to_intersection_m)) {
        return rec;
    }
    rec.priority = upcoming->priority;
    const auto lo = std::max<std::int64_t>(upcoming->entry_frame, 0);
    const auto hi = std::min(upcoming->exit_frame, n - 1);
    for (auto f = lo; f <= hi; ++f) {
        const auto l = tl.lateral[static_cast<std::size_t>(f)];
        if (l == LateralLabel::turn_left) {
            rec.next_action = NextAction::turn_left;
            break;
        }
        if (l == LateralLabel::turn_right) {
            rec.next_action = NextAction::turn_right;
            break;
        }
    }
    return rec;
}

std::vector<std::int64_t> sample_starts(std::int64_t n_frames)
{
    std::vector<std::int64_t> out;
    for (std::int64_t s = 0; s + kSampleFrames <= n_frames; s += kSampleStride) {
        out.push_back(s);
    }
    return out;
}

std::string context_record_json(const ContextRecord& rec)
{
    nlohmann::ordered_json j;
    j["video_id"] = rec.video_id;
    j["start_frame"] = rec.start_frame;
    j["global_context"] = {{"weather", ingest::to_string(rec.global.weather)},
                           {"time_of_day", ingest::to_string(rec.global.time_of_day)},
                           {"location", ingest::to_string(rec.global.location)}};
    nlohmann::ordered_json local;
    if (std::isinf(rec.distance_to_intersection_m)) {
        local["distance_to_intersection_m"] = "inf";
    } else {
        local["distance_to_intersection_m"] = rec.distance_to_intersection_m;
    }
    local["priority"] = rec.priority ? nlohmann::ordered_json(ingest::to_string(*rec.priority)) : nlohmann::ordered_json(nullptr);
    local["next_action"] = to_string(rec.next_action);
    j["local_context"] = std::move(local);
    j["current_action"] = {{"speed_kmh", rec.speed_kmh},
                           {"accel_ms2", rec.accel_ms2},
                           {"lateral_action", ingest::to_string(rec.lateral_action)}};
    return j.dump();
}

bool is_blank(const SaliencyMap& map) noexcept
{
    const auto v = map.values();
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

SaliencyMap video_mean_map(std::span<const SaliencyMap> maps)
{
    if (maps.empty()) {
        throw Error(Errc::InvalidValue, "no maps to average");
    }
    SaliencyMap mean(maps.front().width(), maps.front().height(), 0.0);
    auto acc = mean.values();
    std::size_t count = 0;
    for (const auto& m : maps) {
        require_same_shape(mean, m, "video_mean_map");
        if (is_blank(m)) {
            continue;
        }
        const auto v = m.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc[i] += v[i];
        }
        ++count;
    }
    if (count > 0) {
        for (auto& x : acc) {
            x /= static_cast<double>(count);
        }
    }
    return mean;
}

double sample_weight(std::span<const SaliencyMap> sample, const SaliencyMap& video_mean,
                     const metrics::MetricConfig& cfg)
{
    metrics::MetricConfig stable = cfg;
    stable.kld_mode = metrics::KldMode::stable;
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& m : sample) {
        require_same_shape(m, video_mean, "sample_weight");
        if (is_blank(m)) {
            continue;
        }
        total += metrics::kld(m, video_mean, stable);
        ++count;
    }
    return count == 0 ? 0.0 : std::max(0.0, total / static_cast<double>(count));
}

void write_weights(std::ostream& out, std::span<const SampleWeight> weights)
{
    out << "video_id,start_frame,weight\n";
    for (const auto& w : weights) {
        out << w.video_id << ',' << w.start_frame << ',' << ingest::format_double(w.weight) << '\n';
    }
}

std::string_view to_string(StatsGroup g) noexcept
{
    switch (g) {
    case StatsGroup::lateral: return "lateral";
    case StatsGroup::longitudinal: return "longitudinal";
    case StatsGroup::intersection: return "intersection";
    }
    return "?";
}

namespace {

template <typename T>
void collect_runs(std::span<const T> labels, std::vector<std::vector<std::int64_t>>& durations)
{
    std::size_t i = 0;
    while (i < labels.size()) {
        std::size_t j = i;
        while (j < labels.size() && labels[j] == labels[i]) {
            ++j;
        }
        durations[static_cast<std::size_t>(labels[i])].push_back(static_cast<std::int64_t>(j - i));
        i = j;
    }
}

StatsRow summarize(StatsGroup group, std::string_view label, const std::vector<std::int64_t>& d, double total_frames)
{
    StatsRow row;
    row.group = group;
    row.label = label;
    row.count = static_cast<std::int64_t>(d.size());
    std::int64_t frames = 0;
    for (const auto x : d) {
        frames += x;
    }
    if (!d.empty()) {
        row.mean = static_cast<double>(frames) / static_cast<double>(d.size());
        double ss = 0.0;
        for (const auto x : d) {
            ss += (static_cast<double>(x) - row.mean) * (static_cast<double>(x) - row.mean);
        }
        row.std = std::sqrt(ss / static_cast<double>(d.size()));
    }
    row.pct_frames = total_frames > 0 ? 100.0 * static_cast<double>(frames) / total_frames : 0.0;
    return row;
}

}  // namespace

std::vector<StatsRow> dataset_stats(std::span<const VideoLabels> videos)
{
    std::vector<std::vector<std::int64_t>> lat(6), lon(4), inter(4);
    double total = 0.0;
    for (const auto& v : videos) {
        total += static_cast<double>(v.timeline.size());
        collect_runs<LateralLabel>(v.timeline.lateral, lat);
        collect_runs<Longitudinal>(v.timeline.longitudinal, lon);
        for (const auto& w : intersection_windows(v.annotations)) {
            inter[static_cast<std::size_t>(w.type)].push_back(w.end - w.start + 1);
        }
    }
    std::vector<StatsRow> rows;
    for (const auto l : {LateralLabel::straight, LateralLabel::turn_right, LateralLabel::lane_change_right,
                         LateralLabel::lane_change_left, LateralLabel::turn_left, LateralLabel::u_turn}) {
        rows.push_back(summarize(StatsGroup::lateral, ingest::to_string(l), lat[static_cast<std::size_t>(l)], total));
    }
    for (const auto l : kLongitudinal) {
        rows.push_back(summarize(StatsGroup::longitudinal, to_string(l), lon[static_cast<std::size_t>(l)], total));
    }
    for (const auto t : {IntersectionType::unsignalized, IntersectionType::merge, IntersectionType::signalized,
                         IntersectionType::roundabout}) {
        rows.push_back(
            summarize(StatsGroup::intersection, ingest::to_string(t), inter[static_cast<std::size_t>(t)], total));
    }
    return rows;
}

void write_stats(std::ostream& out, std::span<const StatsRow> rows)
{
    out << "group,label,count,mean,std,pct_frames\n";
    for (const auto& r : rows) {
        out << to_string(r.group) << ',' << r.label << ',' << r.count << ',';
        if (r.count > 0) {
            out << fixed4(r.mean) << ',' << fixed4(r.std);
        } else {
            out << ',';
        }
        out << ',' << fixed4(r.pct_frames) << '\n';
    }
}

}  // namespace drivegaze::tasklab
