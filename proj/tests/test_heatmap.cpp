#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <doctest.h>

#include "drivegaze/heatmap.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drivegaze;
using namespace drivegaze::heatmap;
using ingest::EventClass;
using ingest::FixationEvent;
using ingest::GazeLabel;

namespace {

const align::AlignmentSpec kSameRate{100, 100, 0};

HomographyMap identity_homographies(std::int64_t n)
{
    HomographyMap m;
    for (std::int64_t e = 0; e < n; ++e) {
        m.emplace(e, geometry::Homography::identity());
    }
    return m;
}

flowprop::MemoryFlowProvider zero_flows(int w, int h, std::int64_t n)
{
    flowprop::MemoryFlowProvider f;
    for (std::int64_t k = 0; k < n; ++k) {
        f.set_forward(k, flowprop::FlowField(w, h));
        f.set_backward(k, flowprop::FlowField(w, h));
    }
    return f;
}

HeatmapConfig small_sigma(double sigma)
{
    HeatmapConfig cfg;
    cfg.sigma_px = sigma;
    return cfg;
}

}  // namespace

TEST_CASE("collect_window: only saccades and blinks gives a blank window")
{
    const std::vector<FixationEvent> ev{{48, 1, EventClass::saccade, 10, 10, GazeLabel::scene},
                                        {50, 2, EventClass::blink, 20, 20, GazeLabel::scene},
                                        {52, 3, EventClass::saccade, 30, 30, GazeLabel::scene}};
    const auto flows = zero_flows(64, 48, 100);
    const auto pts = collect_window(50, ev, kSameRate, identity_homographies(100), flows, HeatmapConfig{}, 64, 48);
    CHECK(pts.empty());
}

TEST_CASE("collect_window: single scene fixation at the key frame")
{
    const std::vector<FixationEvent> ev{{50, 7, EventClass::fixation, 12.5, 30.25, GazeLabel::scene}};
    const auto flows = zero_flows(64, 48, 100);
    const auto pts = collect_window(50, ev, kSameRate, identity_homographies(100), flows, HeatmapConfig{}, 64, 48);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].point == PixelPoint{12.5, 30.25});
    CHECK(pts[0].provenance == Provenance::scene);
    CHECK_FALSE(pts[0].clamped);
}

TEST_CASE("collect_window: speedometer fixation is removed, scene survives")
{
    const std::vector<FixationEvent> ev{{49, 1, EventClass::fixation, 40, 44, GazeLabel::in_vehicle_speedometer},
                                        {50, 2, EventClass::fixation, 10, 11, GazeLabel::scene}};
    const auto flows = zero_flows(64, 48, 100);
    const auto pts = collect_window(50, ev, kSameRate, identity_homographies(100), flows, HeatmapConfig{}, 64, 48);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].timestamp_us == 2);
}

TEST_CASE("map_event: filters, out_of_view edge push and missing homography")
{
    const auto hs = identity_homographies(10);
    CHECK(map_event({3, 0, EventClass::error, std::nan(""), std::nan(""), GazeLabel::scene}, kSameRate, hs, 64, 48)
              .excluded == ExclusionReason::tracker_error);
    CHECK(map_event({3, 0, EventClass::fixation, 1, 1, GazeLabel::oob_error}, kSameRate, hs, 64, 48).excluded ==
          ExclusionReason::oob_error);
    CHECK(map_event({3, 0, EventClass::fixation, 1, 1, GazeLabel::in_vehicle_other}, kSameRate, hs, 64, 48).excluded ==
          ExclusionReason::in_vehicle_other);
    CHECK(map_event({300, 0, EventClass::fixation, 1, 1, GazeLabel::scene}, kSameRate, hs, 64, 48).excluded ==
          ExclusionReason::out_of_range);

    const auto out = map_event({3, 0, EventClass::fixation, 100, 20, GazeLabel::out_of_view}, kSameRate, hs, 64, 48);
    REQUIRE(out.mapped);
    CHECK(out.mapped->point == PixelPoint{63, 20});
    CHECK(out.mapped->provenance == Provenance::out_of_view);
    CHECK(out.mapped->clamped);

    const auto mirror = map_event({4, 0, EventClass::fixation, 5, 6, GazeLabel::in_vehicle_mirror}, kSameRate, hs, 64, 48);
    CHECK(mirror.mapped);

    CHECK_ERRC(map_event({20, 0, EventClass::fixation, 1, 1, GazeLabel::scene}, kSameRate, hs, 64, 48),
               Errc::MissingHomography);
    // Non-fixations never need a homography.
    CHECK(map_event({20, 0, EventClass::saccade, 1, 1, GazeLabel::scene}, kSameRate, hs, 64, 48).excluded ==
          ExclusionReason::saccade);
}

TEST_CASE("rasterize: empty, single point and deduplication")
{
    CHECK(rasterize({}, 20, 20) == FixationMap(20, 20, 0));
    const std::vector<PixelPoint> one{{10, 10}};
    auto m = rasterize(one, 20, 20);
    int count = 0;
    for (auto v : m.values()) {
        count += v;
    }
    CHECK(count == 1);
    CHECK(m.at(10, 10) == 1);
    const std::vector<PixelPoint> two{{10.2, 9.9}, {9.8, 10.1}};
    m = rasterize(two, 20, 20);
    count = 0;
    for (auto v : m.values()) {
        count += v;
    }
    CHECK(count == 1);
    const std::vector<PixelPoint> outside{{20.0, 3.0}};
    CHECK_ERRC(rasterize(outside, 20, 20), Errc::OutOfRaster);
}

TEST_CASE("blur: single centered fixation matches the analytic Gaussian")
{
    FixationMap fm(512, 512, 0);
    fm.at(256, 256) = 1;
    const auto s = gaussian_blur(fm, HeatmapConfig{});
    CHECK(s.at(256, 256) == 1.0);
    const double expected = std::exp(-0.5);
    CHECK(std::abs(s.at(296, 256) - expected) / expected < 1e-3);
    CHECK(std::abs(s.at(256, 216) - expected) / expected < 1e-3);
    CHECK(s.at(256 + 121, 256) == 0.0);  // beyond ⌈3σ⌉
}

TEST_CASE("blur: all-zero input stays all-zero")
{
    const auto s = gaussian_blur(FixationMap(64, 48, 0), small_sigma(4));
    for (double v : s.values()) {
        REQUIRE(v == 0.0);
    }
}

TEST_CASE("blur: two fixations 6 sigma apart give two unit maxima")
{
    const double sigma = 5.0;
    FixationMap fm(120, 60, 0);
    fm.at(30, 30) = 1;
    fm.at(90, 30) = 1;
    const auto s = gaussian_blur(fm, small_sigma(sigma));
    CHECK(std::abs(s.at(30, 30) - 1.0) < 1e-6);
    CHECK(std::abs(s.at(90, 30) - 1.0) < 1e-6);
    CHECK(s.at(60, 30) < s.at(30, 30));
}

TEST_CASE("blur: agrees with a brute-force splat and peaks at exactly 1")
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int w = std::uniform_int_distribution<int>(5, 70)(rng);
        const int h = std::uniform_int_distribution<int>(5, 50)(rng);
        const double sigma = std::uniform_real_distribution<double>(0.7, 6.0)(rng);
        FixationMap fm(w, h, 0);
        std::vector<std::array<int, 2>> pts;
        const int n = std::uniform_int_distribution<int>(1, 12)(rng);
        for (int i = 0; i < n; ++i) {
            const int x = std::uniform_int_distribution<int>(0, w - 1)(rng);
            const int y = std::uniform_int_distribution<int>(0, h - 1)(rng);
            if (!fm.at(x, y)) {
                fm.at(x, y) = 1;
                pts.push_back({x, y});
            }
        }
        const auto cfg = small_sigma(sigma);
        const auto got = gaussian_blur(fm, cfg);
        const auto want = oracle::gaussian_splat(w, h, pts, sigma, cfg.radius());
        double peak = 0.0;
        for (std::size_t i = 0; i < want.size(); ++i) {
            REQUIRE(std::abs(got.values()[i] - want[i]) < 1e-12);
            peak = std::max(peak, got.values()[i]);
        }
        CHECK(peak == 1.0);
    }
}

TEST_CASE("blur: commutes with translation for interior fixations")
{
    const HeatmapConfig cfg = small_sigma(3.0);
    const int r = cfg.radius();
    FixationMap a(80, 60, 0);
    FixationMap b(80, 60, 0);
    const std::vector<std::array<int, 2>> pts{{r + 2, r + 3}, {r + 8, r + 1}, {r + 5, r + 9}};
    const int dx = 17;
    const int dy = 11;
    for (const auto& p : pts) {
        a.at(p[0], p[1]) = 1;
        b.at(p[0] + dx, p[1] + dy) = 1;
    }
    const auto sa = gaussian_blur(a, cfg);
    const auto sb = gaussian_blur(b, cfg);
    for (int y = 0; y + dy < 60; ++y) {
        for (int x = 0; x + dx < 80; ++x) {
            REQUIRE(std::abs(sa.at(x, y) - sb.at(x + dx, y + dy)) <= 1e-9);
        }
    }
}

TEST_CASE("legacy: one fixation under identity chain equals the blur")
{
    const HeatmapConfig cfg = small_sigma(4.0);
    GarChain chain;
    for (int k = 0; k < 100; ++k) {
        chain.emplace(k, geometry::Homography::identity());
    }
    const std::vector<LegacyPoint> pts{{{30, 20}, 50}};
    const auto legacy = legacy_aggregate(50, pts, chain, kSameRate, cfg, 64, 48);
    FixationMap fm(64, 48, 0);
    fm.at(30, 20) = 1;
    const auto blurred = gaussian_blur(fm, cfg);
    for (std::size_t i = 0; i < blurred.size(); ++i) {
        REQUIRE(std::abs(legacy.values()[i] - blurred.values()[i]) < 1e-12);
    }
}

TEST_CASE("legacy: overlapping Gaussians combine by max")
{
    const HeatmapConfig cfg = small_sigma(4.0);
    GarChain chain;
    for (int k = 0; k < 100; ++k) {
        chain.emplace(k, geometry::Homography::identity());
    }
    const std::vector<LegacyPoint> pts{{{30, 20}, 50}, {{31, 20}, 51}};
    const auto m = legacy_aggregate(50, pts, chain, kSameRate, cfg, 64, 48);
    double peak = 0.0;
    for (double v : m.values()) {
        peak = std::max(peak, v);
    }
    CHECK(peak == 1.0);
}

TEST_CASE("legacy: chain gap and translation compensation")
{
    const HeatmapConfig cfg = small_sigma(2.0);
    GarChain chain;
    for (int k = 0; k < 100; ++k) {
        chain.emplace(k, geometry::Homography::translation(1, 0));
    }
    // A point seen 3 frames before the key moves 3 px right; 2 frames after moves 2 px left.
    const std::vector<LegacyPoint> pts{{{10, 10}, 47}, {{40, 10}, 52}};
    const auto moved = legacy_window_points(50, pts, chain, kSameRate, cfg);
    REQUIRE(moved.size() == 2);
    CHECK(moved[0].x == doctest::Approx(13));
    CHECK(moved[1].x == doctest::Approx(38));
    chain.erase(48);
    CHECK_ERRC(legacy_window_points(50, pts, chain, kSameRate, cfg), Errc::MissingHomography);
}

TEST_CASE("legacy keeps the saccade trail, new mode drops it")
{
    const int w = 64;
    const int h = 48;
    std::vector<FixationEvent> ev;
    std::vector<PixelPoint> trail;
    for (int i = 0; i < 8; ++i) {
        const double y = 5.0 + 4.0 * i;
        ev.push_back({50, 100 + i, EventClass::saccade, 50.0, y, GazeLabel::scene});
        trail.push_back({50.0, y});
    }
    ev.push_back({50, 200, EventClass::fixation, 10.0, 40.0, GazeLabel::scene});
    const auto hs = identity_homographies(100);
    GarChain chain;
    for (int k = 0; k < 100; ++k) {
        chain.emplace(k, geometry::Homography::identity());
    }
    const HeatmapConfig cfg = small_sigma(2.0);
    const auto legacy = legacy_aggregate(50, legacy_points(ev, kSameRate, hs), chain, kSameRate, cfg, w, h);
    const auto flows = zero_flows(w, h, 100);
    const auto gt = build_ground_truth(ev, kSameRate, hs, flows, cfg, w, h, {50, 50}, 1);
    REQUIRE(gt.frames.size() == 1);
    for (const auto& p : trail) {
        const int x = static_cast<int>(p.x);
        const int y = static_cast<int>(p.y);
        CHECK(legacy.at(x, y) > 0.0);
        CHECK(gt.frames[0].fixations.at(x, y) == 0);
    }
    CHECK(gt.frames[0].points.size() == 1);
}

TEST_CASE("ground truth: conservation and fixation-only provenance")
{
    std::mt19937_64 rng(77);
    const int w = 48;
    const int h = 36;
    const align::AlignmentSpec spec{120, 100, 3};
    std::vector<FixationEvent> ev;
    std::uniform_int_distribution<int> cls(0, 3);
    std::uniform_int_distribution<int> lbl(0, 5);
    std::uniform_real_distribution<double> ux(-20.0, 70.0);
    std::uniform_real_distribution<double> uy(-20.0, 50.0);
    for (int e = 0; e < 130; ++e) {
        for (int j = 0; j < 3; ++j) {
            const auto c = static_cast<EventClass>(cls(rng));
            const double x = c == EventClass::error ? std::nan("") : ux(rng);
            const double y = c == EventClass::error ? std::nan("") : uy(rng);
            ev.push_back({e, e * 1000 + j, c, x, y, static_cast<GazeLabel>(lbl(rng))});
        }
    }
    const auto hs = identity_homographies(120);
    flowprop::MemoryFlowProvider flows;
    for (int k = 0; k < 100; ++k) {
        flows.set_forward(k, flowprop::FlowField(w, h, 0.5f, -0.25f));
        if (k % 7 != 0) {
            flows.set_backward(k, flowprop::FlowField(w, h, -0.5f, 0.25f));
        }
    }
    const HeatmapConfig cfg = small_sigma(2.0);
    const auto gt = build_ground_truth(ev, spec, hs, flows, cfg, w, h, {30, 60}, 4);

    std::map<std::int64_t, int> seen;  // timestamp → traced into some key
    for (const auto& f : gt.frames) {
        for (const auto& p : f.points) {
            seen[p.timestamp_us] = 1;
        }
    }
    std::map<std::int64_t, int> excluded;
    for (const auto& x : gt.exclusions) {
        excluded[x.timestamp_us] += 1;
    }
    for (const auto& e : ev) {
        const bool in_points = seen.count(e.timestamp_us) > 0;
        const int n_excl = excluded.count(e.timestamp_us) ? excluded[e.timestamp_us] : 0;
        REQUIRE_MESSAGE((in_points ? n_excl == 0 : n_excl == 1), "event at " << e.timestamp_us);
        if (in_points) {
            REQUIRE(e.event_class == EventClass::fixation);
        }
    }
    CHECK(gt.fallback_steps > 0);

    const auto serial = build_ground_truth(ev, spec, hs, flows, cfg, w, h, {30, 60}, 1);
    REQUIRE(serial.frames.size() == gt.frames.size());
    for (std::size_t i = 0; i < gt.frames.size(); ++i) {
        REQUIRE(serial.frames[i].saliency == gt.frames[i].saliency);
        REQUIRE(serial.frames[i].fixations == gt.frames[i].fixations);
    }
    CHECK(serial.exclusions == gt.exclusions);
}

TEST_CASE("exclusion log round-trips")
{
    const std::vector<Exclusion> ex{{3, 100, ExclusionReason::blink},
                                    {4, 200, ExclusionReason::in_vehicle_speedometer},
                                    {99, 300, ExclusionReason::outside_key_range}};
    std::ostringstream out;
    write_exclusions(out, ex);
    CHECK(out.str().rfind("etg_frame,timestamp_us,reason\n", 0) == 0);
    CHECK(out.str().find("4,200,in_vehicle_speedometer\n") != std::string::npos);
    CHECK(parse_exclusions(out.str()) == ex);
    CHECK_ERRC(parse_exclusion_reason("sneeze"), Errc::UnknownEnum);
}

TEST_CASE("heatmap config validation")
{
    CHECK_ERRC(validate(small_sigma(0.0)), Errc::InvalidConfig);
    HeatmapConfig c;
    CHECK(c.radius() == 120);
    c.truncate_radius = 7;
    CHECK(c.radius() == 7);
}
