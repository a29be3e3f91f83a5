#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "drivegaze/tasklab.hpp"
#include "label_oracle.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drivegaze;
using namespace drivegaze::tasklab;
using ingest::GeoPoint;
using ingest::TelemetrySample;

namespace {

std::vector<TelemetrySample> constant_telemetry(std::int64_t n, double kmh)
{
    std::vector<TelemetrySample> s;
    for (std::int64_t g = 0; g < n; ++g) {
        s.push_back({g, kmh, 45.0, 7.0});
    }
    return s;
}

std::string to_letters(const std::vector<Longitudinal>& v)
{
    std::string s;
    for (auto l : v) {
        s += "MADS"[static_cast<int>(l)];
    }
    return s;
}

}  // namespace

TEST_CASE("smooth_speed: constants, spikes and ramps")
{
    const ActionConfig cfg;
    for (double v : smooth_speed(constant_telemetry(100, 50.0), cfg, 100)) {
        REQUIRE(v == doctest::Approx(50.0).epsilon(1e-12));
    }

    auto spiky = constant_telemetry(100, 50.0);
    spiky[40].speed_kmh = 200.0;
    const auto s = smooth_speed(spiky, cfg, 100);
    CHECK(*std::max_element(s.begin(), s.end()) < 55.0);

    std::vector<TelemetrySample> ramp;
    for (int g = 0; g < 200; ++g) {
        ramp.push_back({g, 10.0 + 0.25 * g, 0, 0});
    }
    const auto r = smooth_speed(ramp, cfg, 200);
    for (int g = 20; g < 180; ++g) {
        REQUIRE(std::abs(r[static_cast<std::size_t>(g)] - (10.0 + 0.25 * g)) < 1e-9);
    }
    CHECK_ERRC(smooth_speed(constant_telemetry(1, 5.0), cfg, 10), Errc::InsufficientSamples);
}

TEST_CASE("smooth_speed: sparse samples are interpolated before filtering")
{
    ActionConfig cfg;
    cfg.median_window = 1;
    cfg.mean_window = 1;
    const std::vector<TelemetrySample> s{{2, 10, 0, 0}, {6, 30, 0, 0}};
    const auto v = smooth_speed(s, cfg, 9);
    const std::vector<double> want{10, 10, 10, 15, 20, 25, 30, 30, 30};
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(v[i] == doctest::Approx(want[i]));
    }
}

TEST_CASE("median and moving-average filters against direct computation")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 100);
    std::vector<double> x(57);
    for (auto& v : x) {
        v = u(rng);
    }
    const auto med = median_filter(x, 5);
    const auto avg = moving_average(x, 7);
    const auto at = [&](int i) { return x[static_cast<std::size_t>(std::clamp(i, 0, 56))]; };
    for (int i = 0; i < 57; ++i) {
        std::vector<double> w;
        for (int k = -2; k <= 2; ++k) {
            w.push_back(at(i + k));
        }
        std::sort(w.begin(), w.end());
        REQUIRE(med[static_cast<std::size_t>(i)] == w[2]);
        double s = 0;
        for (int k = -3; k <= 3; ++k) {
            s += at(i + k);
        }
        REQUIRE(avg[static_cast<std::size_t>(i)] == doctest::Approx(s / 7).epsilon(1e-12));
    }
}

TEST_CASE("acceleration: constant, 0.144 km/h per frame and symmetry")
{
    const std::vector<double> flat(30, 42.0);
    for (double a : compute_acceleration(flat, 25.0)) {
        REQUIRE(a == 0.0);
    }
    std::vector<double> ramp(30);
    for (int i = 0; i < 30; ++i) {
        ramp[static_cast<std::size_t>(i)] = 0.144 * i;
    }
    const auto a = compute_acceleration(ramp, 25.0);
    for (int i = 1; i < 29; ++i) {
        REQUIRE(a[static_cast<std::size_t>(i)] == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::vector<double> tri(41);
    for (int i = 0; i < 41; ++i) {
        tri[static_cast<std::size_t>(i)] = 20.0 - std::abs(i - 20);
    }
    const auto t = compute_acceleration(tri, 25.0);
    for (int i = 0; i < 41; ++i) {
        REQUIRE(t[static_cast<std::size_t>(i)] == doctest::Approx(-t[static_cast<std::size_t>(40 - i)]));
    }
    CHECK_ERRC(compute_acceleration(std::vector<double>{1, 2}, 25.0), Errc::InsufficientSamples);
}

TEST_CASE("longitudinal labels: stopped, maintain and mismatch")
{
    const ActionConfig cfg;
    const std::vector<double> zero(50, 0.0);
    for (auto l : label_longitudinal(zero, zero, cfg)) {
        REQUIRE(l == Longitudinal::stopped);
    }
    const std::vector<double> cruise(50, 50.0);
    for (auto l : label_longitudinal(cruise, compute_acceleration(cruise, 25.0), cfg)) {
        REQUIRE(l == Longitudinal::maintain);
    }
    CHECK_ERRC(label_longitudinal(zero, std::vector<double>(49, 0.0), cfg), Errc::LengthMismatch);
}

TEST_CASE("longitudinal labels: three-phase profile matches the oracle")
{
    ActionConfig cfg;
    const auto v = oracle::three_phase_profile();
    const auto got = to_letters(label_longitudinal(v, compute_acceleration(v, cfg.fps), cfg));
    const auto want = oracle::label_profile(v, cfg.fps, cfg.stop_speed_kmh, cfg.accel_threshold_ms2,
                                            cfg.min_segment_frames);
    CHECK(got == want);
    CHECK(got.substr(0, 100) == std::string(100, 'S'));
    CHECK(got.substr(300) == std::string(100, 'M'));
    CHECK(got.find('D') == std::string::npos);
}

TEST_CASE("longitudinal labels: stop rule holds before merging and thresholds are monotone")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> jitter(-3, 3);
    std::vector<double> v(300);
    double s = 0;
    for (auto& x : v) {
        s = std::max(0.0, s + jitter(rng));
        x = s;
    }
    const auto a = compute_acceleration(v, 25.0);
    ActionConfig low;
    low.accel_threshold_ms2 = 0.3;
    ActionConfig high;
    high.accel_threshold_ms2 = 0.6;
    const auto rl = raw_longitudinal(v, a, low);
    const auto rh = raw_longitudinal(v, a, high);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] <= 1.0) {
            REQUIRE(rl[i] == Longitudinal::stopped);
        }
        if (rl[i] == Longitudinal::maintain) {
            REQUIRE(rh[i] == Longitudinal::maintain);
        }
    }
}

TEST_CASE("merge_short_runs: shortest first, longer neighbour, earlier on ties")
{
    std::vector<int> x{1, 1, 1, 1, 2, 3, 3, 3, 3, 3};
    merge_short_runs(x, 3);
    CHECK(x == std::vector<int>{1, 1, 1, 1, 3, 3, 3, 3, 3, 3});
    std::vector<int> tie{1, 1, 1, 2, 3, 3, 3};
    merge_short_runs(tie, 2);
    CHECK(tie == std::vector<int>{1, 1, 1, 1, 3, 3, 3});
    std::vector<int> bridge{1, 1, 1, 2, 1, 1, 1};
    merge_short_runs(bridge, 2);
    CHECK(bridge == std::vector<int>(7, 1));
    std::vector<int> all_short{1, 2, 1};
    merge_short_runs(all_short, 5);
    CHECK(all_short == std::vector<int>(3, 2));
}

TEST_CASE("intersection windows")
{
    ingest::AnnotationSet ann;
    ann.intersections = {
        {10, 30, ingest::IntersectionType::merge, ingest::Priority::right_of_way, std::nullopt, std::nullopt},
        {100, 150, ingest::IntersectionType::signalized, ingest::Priority::right_of_way, std::nullopt, std::nullopt},
        {200, 250, ingest::IntersectionType::roundabout, ingest::Priority::yield, 180, std::nullopt},
    };
    const auto w = intersection_windows(ann);
    REQUIRE(w.size() == 3);
    CHECK(w[0].start == 0);
    CHECK(w[0].end == 30);
    CHECK(w[1].start == 75);
    CHECK(w[1].end == 150);
    CHECK(w[2].start == 180);
    CHECK(w[2].end == 250);
    for (const auto& x : w) {
        CHECK(x.start <= x.end);
    }

    ann.intersections = {{100, 150, ingest::IntersectionType::unsignalized, ingest::Priority::yield, 80, std::nullopt}};
    CHECK(intersection_windows(ann)[0].start == 80);
}

TEST_CASE("lead distance gate")
{
    CHECK(lead_distance_gate(0.0, 37.0) == 37.0);
    CHECK(std::isinf(lead_distance_gate(0.0, 38.0)));
    CHECK(lead_distance_gate(50.0, 148.0) == 148.0);
    CHECK(max_lead_distance(50.0) == doctest::Approx(148.144));
    CHECK(lead_distance_gate(0.0, 37.144) == 37.144);
    CHECK_ERRC(lead_distance_gate(10.0, -1.0), Errc::NegativeDistance);
}

TEST_CASE("haversine: zero, equator degree step, symmetry and oracle")
{
    CHECK(haversine_m({44.6, 10.9}, {44.6, 10.9}) == 0.0);
    CHECK(std::abs(haversine_m({0.0, 0.0}, {0.001, 0.0}) - 111.19) <= 0.1);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> lat(-80, 80);
    std::uniform_real_distribution<double> lon(-180, 180);
    for (int i = 0; i < 100; ++i) {
        const GeoPoint a{lat(rng), lon(rng)};
        const GeoPoint b{lat(rng), lon(rng)};
        REQUIRE(std::abs(haversine_m(a, b) - haversine_m(b, a)) <= 1e-9);
        REQUIRE(haversine_m(a, b) == doctest::Approx(oracle::great_circle_m(a.lat, a.lon, b.lat, b.lon)).epsilon(1e-6));
    }
}

TEST_CASE("modal label and tie rule")
{
    using L = ingest::LateralLabel;
    std::vector<L> all(16, L::straight);
    CHECK(modal_label(all) == L::straight);
    std::vector<L> nine_seven(9, L::straight);
    nine_seven.insert(nine_seven.end(), 7, L::turn_left);
    CHECK(modal_label(nine_seven) == L::straight);
    std::vector<L> tie(8, L::straight);
    tie.insert(tie.end(), 8, L::turn_left);
    CHECK(modal_label(tie) == L::turn_left);
    std::vector<L> tie_rev(8, L::turn_left);
    tie_rev.insert(tie_rev.end(), 8, L::straight);
    CHECK(modal_label(tie_rev) == L::straight);
}

TEST_CASE("context records: gating, next action and JSON layout")
{
    ingest::AnnotationSet ann;
    ann.n_gar = 200;
    ann.lateral_segments = {{172, 180, ingest::LateralLabel::turn_right}};
    ann.intersections = {{170, 185, ingest::IntersectionType::signalized, ingest::Priority::right_of_way,
                          std::nullopt, GeoPoint{45.0, 7.0}}};
    std::vector<TelemetrySample> tel;
    for (int g = 0; g < 200; ++g) {
        // Heading east at about 1.1 m per frame.
        tel.push_back({g, 36.0, 45.0, 7.0 - 0.0000142 * (170 - g)});
    }
    ActionConfig cfg;
    const auto actions = label_video(tel, ann, cfg);
    const auto pos = interpolate_positions(tel, 200);

    const auto far = build_context_record(0, actions, pos, ann, "v");
    CHECK(std::isinf(far.distance_to_intersection_m));
    CHECK_FALSE(far.priority);
    CHECK(far.next_action == NextAction::drive_straight);

    const auto near = build_context_record(120, actions, pos, ann, "v");
    CHECK(near.distance_to_intersection_m > 0.0);
    CHECK(near.distance_to_intersection_m <= max_lead_distance(near.speed_kmh.back()));
    CHECK(near.priority == ingest::Priority::right_of_way);
    CHECK(near.next_action == NextAction::turn_right);
    CHECK(near.speed_kmh.size() == 16);

    const auto inside = build_context_record(164, actions, pos, ann, "v");
    CHECK(inside.distance_to_intersection_m == 0.0);

    const auto j = nlohmann::json::parse(context_record_json(far));
    CHECK(j["local_context"]["distance_to_intersection_m"] == "inf");
    CHECK(j["local_context"]["priority"].is_null());
    CHECK(j["current_action"]["speed_kmh"].size() == 16);
    CHECK(j["global_context"]["weather"] == "sunny");

    CHECK_ERRC(build_context_record(190, actions, pos, ann, "v"), Errc::WindowOutOfRange);
    CHECK(sample_starts(40) == std::vector<std::int64_t>{0, 8, 16, 24});
}

TEST_CASE("sample weights")
{
    std::mt19937_64 rng(8);
    const auto m = testing::random_map(rng, 20, 20, 0.1, 1.0);
    const std::vector<SaliencyMap> same(16, m);
    CHECK(std::abs(sample_weight(same, video_mean_map(same))) <= 1e-9);

    const std::vector<SaliencyMap> blank(16, SaliencyMap(20, 20, 0.0));
    CHECK(sample_weight(blank, m) == 0.0);
    CHECK(is_blank(blank[0]));

    const auto spike_at = [](int x, int y) {
        SaliencyMap s(21, 21, 0.0);
        for (int j = 0; j < 21; ++j) {
            for (int i = 0; i < 21; ++i) {
                s.at(i, j) = std::exp(-((i - x) * (i - x) + (j - y) * (j - y)) / 8.0);
            }
        }
        return s;
    };
    const auto mean = spike_at(10, 10);
    const std::vector<SaliencyMap> corner(16, spike_at(1, 1));
    const std::vector<SaliencyMap> center(16, spike_at(10, 10));
    CHECK(sample_weight(corner, mean) > sample_weight(center, mean));
    CHECK(sample_weight(corner, mean) >= 0.0);
    CHECK_ERRC(sample_weight(corner, SaliencyMap(5, 5, 1.0)), Errc::DimensionMismatch);
}

TEST_CASE("timeline CSV round-trips")
{
    ActionTimeline tl;
    tl.longitudinal = {Longitudinal::stopped, Longitudinal::accelerate, Longitudinal::maintain};
    tl.lateral = {ingest::LateralLabel::straight, ingest::LateralLabel::u_turn, ingest::LateralLabel::turn_left};
    std::ostringstream out;
    write_timeline(out, tl);
    CHECK(out.str() == "frame,longitudinal,lateral\n0,stopped,straight\n1,accelerate,u_turn\n2,maintain,turn_left\n");
    CHECK(parse_timeline(out.str()) == tl);
}

TEST_CASE("dataset stats: single accelerate segment and two turn_right segments")
{
    VideoLabels v;
    v.annotations.n_gar = 1000;
    v.timeline.longitudinal.assign(1000, Longitudinal::maintain);
    v.timeline.lateral.assign(1000, ingest::LateralLabel::straight);
    std::fill(v.timeline.longitudinal.begin() + 500, v.timeline.longitudinal.begin() + 750, Longitudinal::accelerate);
    std::fill(v.timeline.lateral.begin() + 100, v.timeline.lateral.begin() + 160, ingest::LateralLabel::turn_right);
    std::fill(v.timeline.lateral.begin() + 400, v.timeline.lateral.begin() + 480, ingest::LateralLabel::turn_right);
    const std::vector<VideoLabels> vids{v};
    const auto rows = dataset_stats(vids);
    const auto find = [&](StatsGroup g, const std::string& label) {
        for (const auto& r : rows) {
            if (r.group == g && r.label == label) {
                return r;
            }
        }
        FAIL("row not found");
        return StatsRow{};
    };
    const auto acc = find(StatsGroup::longitudinal, "accelerate");
    CHECK(acc.count == 1);
    CHECK(acc.mean == 250.0);
    CHECK(acc.std == 0.0);
    CHECK(acc.pct_frames == doctest::Approx(25.0));
    const auto tr = find(StatsGroup::lateral, "turn_right");
    CHECK(tr.count == 2);
    CHECK(tr.mean == 70.0);
    CHECK(tr.std == 10.0);

    double lat = 0, lon = 0;
    for (const auto& r : rows) {
        if (r.group == StatsGroup::lateral) {
            lat += r.pct_frames;
        } else if (r.group == StatsGroup::longitudinal) {
            lon += r.pct_frames;
        }
    }
    CHECK(std::abs(lat - 100.0) <= 0.1);
    CHECK(std::abs(lon - 100.0) <= 0.1);

    std::ostringstream out;
    write_stats(out, rows);
    CHECK(out.str().rfind("group,label,count,mean,std,pct_frames\n", 0) == 0);
    CHECK(out.str().find("lateral,turn_right,2,70.0000,10.0000,14.0000\n") != std::string::npos);
    CHECK(out.str().find("lateral,u_turn,0,,,0.0000\n") != std::string::npos);
}

TEST_CASE("action config validation")
{
    ActionConfig c;
    c.median_window = 4;
    CHECK_ERRC(validate(c), Errc::InvalidConfig);
    c = ActionConfig{};
    c.accel_threshold_ms2 = 0;
    CHECK_ERRC(validate(c), Errc::InvalidConfig);
}
