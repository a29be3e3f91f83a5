#include "drivegaze/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "drivegaze/error.hpp"
#include "drivegaze/io_util.hpp"
#include "drivegaze/parallel.hpp"
#include "drivegaze/simd/kernels.hpp"

namespace drivegaze::heatmap {

using ingest::EventClass;
using ingest::FixationEvent;
using ingest::GazeLabel;

int HeatmapConfig::radius() const
{
    return truncate_radius ? *truncate_radius : static_cast<int>(std::ceil(3.0 * sigma_px));
}

void validate(const HeatmapConfig& cfg)
{
    if (!(cfg.sigma_px > 0.0) || !std::isfinite(cfg.sigma_px)) {
        throw Error(Errc::InvalidConfig, "heatmap sigma must be positive and finite");
    }
    if (cfg.truncate_radius && *cfg.truncate_radius < 0) {
        throw Error(Errc::InvalidConfig, "truncate_radius must be non-negative");
    }
    if (cfg.window_half < 0) {
        throw Error(Errc::InvalidConfig, "window_half must be non-negative");
    }
}

std::string_view to_string(Provenance p) noexcept
{
    switch (p) {
    case Provenance::scene: return "scene";
    case Provenance::out_of_view: return "out_of_view";
    case Provenance::traced_exit: return "traced_exit";
    }
    return "?";
}

namespace {

constexpr ExclusionReason kAllReasons[] = {
    ExclusionReason::saccade,         ExclusionReason::blink,     ExclusionReason::tracker_error,
    ExclusionReason::in_vehicle_speedometer, ExclusionReason::in_vehicle_other, ExclusionReason::oob_error,
    ExclusionReason::unmappable,      ExclusionReason::out_of_range, ExclusionReason::outside_key_range,
};

}  // namespace

std::string_view to_string(ExclusionReason r) noexcept
{
    switch (r) {
    case ExclusionReason::saccade: return "saccade";
    case ExclusionReason::blink: return "blink";
    case ExclusionReason::tracker_error: return "tracker_error";
    case ExclusionReason::in_vehicle_speedometer: return "in_vehicle_speedometer";
    case ExclusionReason::in_vehicle_other: return "in_vehicle_other";
    case ExclusionReason::oob_error: return "oob_error";
    case ExclusionReason::unmappable: return "unmappable";
    case ExclusionReason::out_of_range: return "out_of_range";
    case ExclusionReason::outside_key_range: return "outside_key_range";
    }
    return "?";
}

ExclusionReason parse_exclusion_reason(std::string_view token)
{
    for (const auto r : kAllReasons) {
        if (to_string(r) == token) {
            return r;
        }
    }
    throw Error(Errc::UnknownEnum, "unknown exclusion reason '" + std::string(token) + "'");
}

std::optional<ExclusionReason> filter_reason(const FixationEvent& ev) noexcept
{
    switch (ev.event_class) {
    case EventClass::saccade: return ExclusionReason::saccade;
    case EventClass::blink: return ExclusionReason::blink;
    case EventClass::error: return ExclusionReason::tracker_error;
    case EventClass::fixation: break;
    }
    switch (ev.gaze_label) {
    case GazeLabel::in_vehicle_speedometer: return ExclusionReason::in_vehicle_speedometer;
    case GazeLabel::in_vehicle_other: return ExclusionReason::in_vehicle_other;
    case GazeLabel::oob_error: return ExclusionReason::oob_error;
    case GazeLabel::scene:
    case GazeLabel::in_vehicle_mirror:
    case GazeLabel::out_of_view: break;
    }
    return std::nullopt;
}

MappingOutcome map_event(const FixationEvent& ev, const align::AlignmentSpec& alignment,
                         const HomographyMap& homographies, int width, int height)
{
    if (auto reason = filter_reason(ev)) {
        return {std::nullopt, reason};
    }
    if (ev.etg_frame < 0 || ev.etg_frame >= alignment.n_etg) {
        return {std::nullopt, ExclusionReason::out_of_range};
    }
    const auto it = homographies.find(ev.etg_frame);
    if (it == homographies.end()) {
        throw Error(Errc::MissingHomography, "no homography for ETG frame " + std::to_string(ev.etg_frame),
                    ev.etg_frame);
    }
    PixelPoint projected;
    try {
        projected = geometry::project_point(it->second, {ev.x, ev.y});
    } catch (const Error& e) {
        if (e.code() == Errc::PointAtInfinity) {
            return {std::nullopt, ExclusionReason::unmappable};
        }
        throw;
    }
    if (!std::isfinite(projected.x) || !std::isfinite(projected.y)) {
        return {std::nullopt, ExclusionReason::unmappable};
    }
    const auto clamped = geometry::clamp_to_frame(projected, width, height);
    MappedFixation m;
    m.etg_frame = ev.etg_frame;
    m.timestamp_us = ev.timestamp_us;
    m.gar_frame = align::etg_to_gar(alignment, ev.etg_frame);
    m.point = clamped.point;
    m.provenance = ev.gaze_label == GazeLabel::out_of_view ? Provenance::out_of_view : Provenance::scene;
    m.clamped = clamped.was_clamped;
    return {m, std::nullopt};
}

namespace {

struct TracedWindow {
    std::vector<GazePoint> points;
    int fallback_steps = 0;
};

TracedWindow trace_window_impl(std::int64_t key, std::span<const MappedFixation> mapped,
                               const align::AlignmentSpec& alignment, const flowprop::FlowProvider& flows,
                               const HeatmapConfig& cfg, int width, int height)
{
    const auto window = align::gar_window(alignment, key, cfg.window_half);
    TracedWindow out;
    for (const auto& m : mapped) {
        if (!window.contains(m.gar_frame)) {
            continue;
        }
        const auto traced = flowprop::trace_to_key(m.point, m.gar_frame, key, flows, cfg.window_half);
        const auto clamped = geometry::clamp_to_frame(traced.point, width, height);
        GazePoint g;
        g.point = clamped.point;
        g.provenance = traced.exited ? Provenance::traced_exit : m.provenance;
        g.etg_frame = m.etg_frame;
        g.timestamp_us = m.timestamp_us;
        g.source_gar_frame = m.gar_frame;
        g.clamped = m.clamped || traced.exited || clamped.was_clamped;
        out.points.push_back(g);
        out.fallback_steps += traced.fallback_steps;
    }
    return out;
}

std::vector<double> gaussian_taps(double sigma, int radius)
{
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    const double denom = 2.0 * sigma * sigma;
    for (int i = -radius; i <= radius; ++i) {
        taps[static_cast<std::size_t>(i + radius)] = std::exp(-static_cast<double>(i) * i / denom);
    }
    return taps;
}

}  // namespace

std::vector<GazePoint> trace_window(std::int64_t key_gar_frame, std::span<const MappedFixation> mapped,
                                    const align::AlignmentSpec& alignment, const flowprop::FlowProvider& flows,
                                    const HeatmapConfig& cfg, int width, int height)
{
    return trace_window_impl(key_gar_frame, mapped, alignment, flows, cfg, width, height).points;
}

std::vector<GazePoint> collect_window(std::int64_t key_gar_frame, std::span<const FixationEvent> events,
                                      const align::AlignmentSpec& alignment, const HomographyMap& homographies,
                                      const flowprop::FlowProvider& flows, const HeatmapConfig& cfg, int width,
                                      int height)
{
    validate(cfg);
    const auto window = align::gar_window(alignment, key_gar_frame, cfg.window_half);
    std::vector<MappedFixation> mapped;
    for (const auto& ev : events) {
        if (filter_reason(ev) || ev.etg_frame < 0 || ev.etg_frame >= alignment.n_etg) {
            continue;
        }
        // Only events that can land in this window need a homography.
        if (!window.contains(align::etg_to_gar(alignment, ev.etg_frame))) {
            continue;
        }
        auto outcome = map_event(ev, alignment, homographies, width, height);
        if (outcome.mapped) {
            mapped.push_back(*outcome.mapped);
        }
    }
    return trace_window(key_gar_frame, mapped, alignment, flows, cfg, width, height);
}

FixationMap rasterize(std::span<const PixelPoint> points, int width, int height)
{
    FixationMap map(width, height, 0);
    for (const auto& p : points) {
        const double rx = std::round(p.x);
        const double ry = std::round(p.y);
        if (!(rx >= 0.0 && ry >= 0.0 && rx < width && ry < height)) {
            throw Error(Errc::OutOfRaster, "point (" + ingest::format_double(p.x) + ", " +
                                               ingest::format_double(p.y) + ") outside " + std::to_string(width) +
                                               "x" + std::to_string(height));
        }
        map.at(static_cast<int>(rx), static_cast<int>(ry)) = 1;
    }
    return map;
}

SaliencyMap gaussian_blur(const FixationMap& fixations, const HeatmapConfig& cfg)
{
    validate(cfg);
    const int w = fixations.width();
    const int h = fixations.height();
    const int r = cfg.radius();
    const auto taps = gaussian_taps(cfg.sigma_px, r);
    const auto& k = simd::active();
    const auto uw = static_cast<std::size_t>(w);

    // Row pass into tmp; rows without fixations stay zero and are skipped below.
    std::vector<double> tmp(uw * static_cast<std::size_t>(h), 0.0);
    std::vector<char> live(static_cast<std::size_t>(h), 0);
    std::vector<double> padded(uw + 2 * static_cast<std::size_t>(r), 0.0);
    bool any = false;
    for (int y = 0; y < h; ++y) {
        const auto row = fixations.row(y);
        if (std::none_of(row.begin(), row.end(), [](std::uint8_t v) { return v != 0; })) {
            continue;
        }
        any = true;
        live[static_cast<std::size_t>(y)] = 1;
        for (int x = 0; x < w; ++x) {
            padded[static_cast<std::size_t>(x + r)] = row[static_cast<std::size_t>(x)] ? 1.0 : 0.0;
        }
        k.correlate(padded.data(), taps.data(), taps.size(), tmp.data() + static_cast<std::size_t>(y) * uw, uw);
    }

    SaliencyMap out(w, h, 0.0);
    if (!any) {
        return out;
    }
    auto values = out.values();
    for (int y = 0; y < h; ++y) {
        double* dst = values.data() + static_cast<std::size_t>(y) * uw;
        const int lo = std::max(0, y - r);
        const int hi = std::min(h - 1, y + r);
        for (int yy = lo; yy <= hi; ++yy) {
            if (live[static_cast<std::size_t>(yy)]) {
                k.axpy(taps[static_cast<std::size_t>(yy - y + r)], tmp.data() + static_cast<std::size_t>(yy) * uw,
                       dst, uw);
            }
        }
    }
    const double peak = k.max(values.data(), values.size());
    k.divide(values.data(), values.size(), peak);
    return out;
}

std::vector<LegacyPoint> legacy_points(std::span<const FixationEvent> events, const align::AlignmentSpec& alignment,
                                       const HomographyMap& homographies)
{
    std::vector<LegacyPoint> out;
    for (const auto& ev : events) {
        if (!std::isfinite(ev.x) || !std::isfinite(ev.y) || ev.etg_frame < 0 || ev.etg_frame >= alignment.n_etg) {
            continue;
        }
        const auto it = homographies.find(ev.etg_frame);
        if (it == homographies.end()) {
            throw Error(Errc::MissingHomography, "no homography for ETG frame " + std::to_string(ev.etg_frame),
                        ev.etg_frame);
        }
        try {
            out.push_back({geometry::project_point(it->second, {ev.x, ev.y}), align::etg_to_gar(alignment, ev.etg_frame)});
        } catch (const Error& e) {
            if (e.code() != Errc::PointAtInfinity) {
                throw;
            }
        }
    }
    return out;
}

namespace {

const geometry::Homography& chain_step(const GarChain& chain, std::int64_t k)
{
    const auto it = chain.find(k);
    if (it == chain.end()) {
        throw Error(Errc::MissingHomography, "no GAR homography " + std::to_string(k) + "->" + std::to_string(k + 1), k);
    }
    return it->second;
}

}  // namespace

std::vector<PixelPoint> legacy_window_points(std::int64_t key, std::span<const LegacyPoint> points,
                                             const GarChain& chain, const align::AlignmentSpec& alignment,
                                             const HeatmapConfig& cfg)
{
    validate(cfg);
    const auto window = align::gar_window(alignment, key, cfg.window_half);

    // to_key[g − lo] maps frame g onto the key frame.
    std::vector<geometry::Homography> to_key(static_cast<std::size_t>(window.size()));
    const auto slot = [&](std::int64_t g) -> geometry::Homography& {
        return to_key[static_cast<std::size_t>(g - window.lo)];
    };
    slot(key) = geometry::Homography::identity();
    for (std::int64_t g = key - 1; g >= window.lo; --g) {
        slot(g) = slot(g + 1) * chain_step(chain, g);
    }
    for (std::int64_t g = key + 1; g <= window.hi; ++g) {
        slot(g) = slot(g - 1) * chain_step(chain, g - 1).inverse();
    }

    std::vector<PixelPoint> out;
    for (const auto& lp : points) {
        if (!window.contains(lp.gar_frame)) {
            continue;
        }
        try {
            const auto p = geometry::project_point(slot(lp.gar_frame), lp.point);
            if (std::isfinite(p.x) && std::isfinite(p.y)) {
                out.push_back(p);
            }
        } catch (const Error& e) {
            if (e.code() != Errc::PointAtInfinity) {
                throw;
            }
        }
    }
    return out;
}

SaliencyMap legacy_aggregate(std::int64_t key, std::span<const LegacyPoint> points, const GarChain& chain,
                             const align::AlignmentSpec& alignment, const HeatmapConfig& cfg, int width, int height)
{
    const auto compensated = legacy_window_points(key, points, chain, alignment, cfg);
    const int r = cfg.radius();
    const auto taps = gaussian_taps(cfg.sigma_px, r);
    SaliencyMap out(width, height, 0.0);
    for (const auto& p : compensated) {
        // Far off-raster points cannot reach any pixel.
        if (p.x < -r - 1.0 || p.y < -r - 1.0 || p.x > width + r + 1.0 || p.y > height + r + 1.0) {
            continue;
        }
        const auto cx = static_cast<std::int64_t>(std::llround(p.x));
        const auto cy = static_cast<std::int64_t>(std::llround(p.y));
        const auto y0 = std::max<std::int64_t>(0, cy - r);
        const auto y1 = std::min<std::int64_t>(height - 1, cy + r);
        const auto x0 = std::max<std::int64_t>(0, cx - r);
        const auto x1 = std::min<std::int64_t>(width - 1, cx + r);
        for (auto y = y0; y <= y1; ++y) {
            const double ty = taps[static_cast<std::size_t>(y - cy + r)];
            for (auto x = x0; x <= x1; ++x) {
                double& cell = out.at(static_cast<int>(x), static_cast<int>(y));
                cell = std::max(cell, ty * taps[static_cast<std::size_t>(x - cx + r)]);
            }
        }
    }
    return out;
}

GroundTruth build_ground_truth(std::span<const FixationEvent> events, const align::AlignmentSpec& alignment,
                               const HomographyMap& homographies, const flowprop::FlowProvider& flows,
                               const HeatmapConfig& cfg, int width, int height, KeyRange keys, int jobs)
{
    validate(cfg);
    align::validate(alignment);
    if (keys.first > keys.last || keys.first < 0 || keys.last >= alignment.n_gar) {
        throw Error(Errc::OutOfRange, "key range [" + std::to_string(keys.first) + ", " + std::to_string(keys.last) +
                                          "] outside [0, " + std::to_string(alignment.n_gar) + ")");
    }

    GroundTruth gt;
    std::vector<MappedFixation> mapped;
    for (const auto& ev : events) {
        auto outcome = map_event(ev, alignment, homographies, width, height);
        if (outcome.excluded) {
            gt.exclusions.push_back({ev.etg_frame, ev.timestamp_us, *outcome.excluded});
            continue;
        }
        const auto g = outcome.mapped->gar_frame;
        const auto nearest = std::clamp(g, keys.first, keys.last);
        if (!align::gar_window(alignment, nearest, cfg.window_half).contains(g)) {
            gt.exclusions.push_back({ev.etg_frame, ev.timestamp_us, ExclusionReason::outside_key_range});
            continue;
        }
        mapped.push_back(*outcome.mapped);
    }

    const auto n = static_cast<std::size_t>(keys.last - keys.first + 1);
    gt.frames.resize(n);
    std::vector<int> fallbacks(n, 0);
    parallel_for(n, jobs, [&](std::size_t i) {
        const std::int64_t key = keys.first + static_cast<std::int64_t>(i);
        auto traced = trace_window_impl(key, mapped, alignment, flows, cfg, width, height);
        std::vector<PixelPoint> pts;
        pts.reserve(traced.points.size());
        for (const auto& p : traced.points) {
            pts.push_back(p.point);
        }
        KeyFrameTruth& kf = gt.frames[i];
        kf.key_frame = key;
        kf.fixations = rasterize(pts, width, height);
        kf.saliency = gaussian_blur(kf.fixations, cfg);
        kf.points = std::move(traced.points);
        fallbacks[i] = traced.fallback_steps;
    });
    for (const int f : fallbacks) {
        gt.fallback_steps += f;
    }
    return gt;
}

void write_exclusions(std::ostream& out, std::span<const Exclusion> exclusions)
{
    out << "etg_frame,timestamp_us,reason\n";
    for (const auto& e : exclusions) {
        out << e.etg_frame << ',' << e.timestamp_us << ',' << to_string(e.reason) << '\n';
    }
}

std::vector<Exclusion> parse_exclusions(std::string_view text)
{
    io::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != "etg_frame,timestamp_us,reason") {
        throw Error(Errc::BadHeader, "expected 'etg_frame,timestamp_us,reason'", 1);
    }
    std::vector<Exclusion> out;
    while (reader.next(line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = io::split_fields(line);
        const auto frame = fields.size() == 3 ? io::to_int(fields[0]) : std::nullopt;
        const auto ts = fields.size() == 3 ? io::to_int(fields[1]) : std::nullopt;
        if (!frame || !ts) {
            throw Error(Errc::MalformedRow, "expected etg_frame,timestamp_us,reason", reader.line_number());
        }
        out.push_back({*frame, *ts, parse_exclusion_reason(fields[2])});
    }
    return out;
}

}  // namespace drivegaze::heatmap
