// Writes a small synthetic video directory: 96×72 rooftop frames of a texture drifting
// one pixel per frame, block-matched flows, noisy ETG→GAR correspondences with
// outliers, a mixed eye-tracker log, telemetry, annotations and a center-bias
// prediction set. Output depends only on the seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drivegaze/flowprop.hpp"
#include "drivegaze/geometry.hpp"
#include "drivegaze/image_io.hpp"
#include "drivegaze/ingest.hpp"
#include "drivegaze/io_util.hpp"

namespace fs = std::filesystem;
using namespace drivegaze;
using ingest::EventClass;
using ingest::FixationEvent;
using ingest::GazeLabel;

namespace {

constexpr int kWidth = 96;
constexpr int kHeight = 72;
constexpr std::int64_t kGar = 50;
constexpr std::int64_t kEtg = 60;
constexpr std::int64_t kOffset = 2;
constexpr std::int64_t kUsPerEtgFrame = 33333;
constexpr std::int64_t kMissingBackwardFlow = 40;
constexpr std::int64_t kMissingGarHomography = 20;
constexpr std::int64_t kMissingPrediction = 10;

const geometry::Homography& true_h()
{
    static const auto h =
        geometry::Homography::from_matrix({0.9, 0.02, 4.0, -0.01, 0.92, 3.0, 1e-5, 2e-5, 1.0});
    return h;
}

GrayFrame texture(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> noise(-20, 20);
    GrayFrame t(kWidth, kHeight);
    for (int y = 0; y < kHeight; ++y) {
        for (int x = 0; x < kWidth; ++x) {
            const double v = 128.0 + 50.0 * std::sin(0.37 * x) * std::cos(0.23 * y) + 25.0 * std::sin(0.11 * x * y);
            t.at(x, y) = static_cast<std::uint8_t>(std::clamp(v + noise(rng), 0.0, 255.0));
        }
    }
    return t;
}

GrayFrame shifted(const GrayFrame& t, std::int64_t g)
{
    GrayFrame f(kWidth, kHeight);
    for (int y = 0; y < kHeight; ++y) {
        for (int x = 0; x < kWidth; ++x) {
            const auto sx = static_cast<int>(((x - g) % kWidth + kWidth) % kWidth);
            f.at(x, y) = t.at(sx, y);
        }
    }
    return f;
}

std::vector<geometry::Correspondence> correspondences(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> ux(0.0, kWidth - 1.0);
    std::uniform_real_distribution<double> uy(0.0, kHeight - 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<geometry::Correspondence> out;
    for (int i = 0; i < 60; ++i) {
        const geometry::PixelPoint src{ux(rng), uy(rng)};
        geometry::PixelPoint dst;
        if (coin(rng) < 0.2) {
            dst = {ux(rng), uy(rng)};
        } else {
            const auto p = geometry::project_point(true_h(), src);
            dst = {p.x + noise(rng), p.y + noise(rng)};
        }
        out.push_back({src, dst});
    }
    return out;
}

FixationEvent event(std::int64_t e, int slot, EventClass c, double x, double y, GazeLabel label = GazeLabel::scene)
{
    return {e, e * kUsPerEtgFrame + slot * 4000, c, x, y, label};
}

std::vector<FixationEvent> events(std::mt19937_64& rng)
{
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::uniform_real_distribution<double> jitter(-6.0, 6.0);
    std::vector<FixationEvent> ev;
    const auto fixated = [](std::int64_t e) { return e <= 15 || e >= 52; };
    for (std::int64_t e = 0; e < kEtg; ++e) {
        if (!fixated(e)) {
            // Tracker still reports saccades and blinks where no fixation was recorded.
            if (e % 7 == 0) {
                ev.push_back(event(e, 0, EventClass::saccade, 30.0 + e, 30.0));
            }
            if (e % 11 == 0) {
                ev.push_back(event(e, 1, EventClass::blink, 40.0, 20.0));
            }
            continue;
        }
        ev.push_back(event(e, 0, EventClass::fixation, 48.0 + jitter(rng), 34.0 + jitter(rng)));
        ev.push_back(event(e, 1, EventClass::fixation, 30.0 + jitter(rng), 28.0 + jitter(rng)));
    }
    // Glance down to the speedometer and back: a vertical saccade trail around a
    // speedometer fixation.
    for (int i = 0; i < 5; ++i) {
        ev.push_back(event(5, 2 + i, EventClass::saccade, 70.0, 24.0 + 8.0 * i));
    }
    ev.push_back(event(6, 2, EventClass::fixation, 70.0, 66.0, GazeLabel::in_vehicle_speedometer));
    for (int i = 0; i < 5; ++i) {
        ev.push_back(event(6, 3 + i, EventClass::saccade, 72.0, 60.0 - 8.0 * i));
    }
    ev.push_back(event(3, 2, EventClass::blink, 50.0, 10.0));
    ev.push_back(event(7, 2, EventClass::error, nan, nan));
    ev.push_back(event(54, 2, EventClass::error, nan, nan));
    ev.push_back(event(8, 2, EventClass::fixation, 5.0, 8.0, GazeLabel::in_vehicle_mirror));
    ev.push_back(event(9, 2, EventClass::fixation, -40.0, 30.0, GazeLabel::out_of_view));
    ev.push_back(event(55, 2, EventClass::fixation, 94.0, -25.0, GazeLabel::out_of_view));
    ev.push_back(event(10, 2, EventClass::fixation, 400.0, 400.0, GazeLabel::oob_error));
    ev.push_back(event(11, 2, EventClass::fixation, 20.0, 60.0, GazeLabel::in_vehicle_other));
    // Beyond the ETG stream length.
    ev.push_back(event(kEtg + 1, 0, EventClass::fixation, 40.0, 40.0));
    return ev;
}

ingest::AnnotationSet annotations()
{
    using ingest::Intersection;
    using ingest::IntersectionType;
    using ingest::LateralLabel;
    using ingest::Priority;
    ingest::AnnotationSet a;
    a.n_etg = kEtg;
    a.n_gar = kGar;
    a.offset_frames = kOffset;
    a.lateral_segments = {{5, 12, LateralLabel::turn_left}, {20, 24, LateralLabel::u_turn},
                          {40, 46, LateralLabel::turn_right}};
    Intersection roundabout;
    roundabout.entry_frame = 8;
    roundabout.exit_frame = 14;
    roundabout.type = IntersectionType::roundabout;
    roundabout.priority = Priority::yield;
    roundabout.first_fixation_frame = 4;
    roundabout.location = ingest::GeoPoint{45.0, 7.0004};
    Intersection signal;
    signal.entry_frame = 42;
    signal.exit_frame = 47;
    signal.type = IntersectionType::signalized;
    signal.priority = Priority::right_of_way;
    a.intersections = {roundabout, signal};
    a.global_context = {ingest::Weather::cloudy, ingest::TimeOfDay::morning, ingest::Location::urban};
    return a;
}

std::vector<ingest::TelemetrySample> telemetry()
{
    std::vector<ingest::TelemetrySample> t;
    double lon = 7.0;
    for (std::int64_t g = 0; g < kGar; ++g) {
        double v;
        // stopped, then +1 m/s² (0.144 km/h per frame), then cruising
        if (g < 14) {
            v = 0.0;
        } else if (g < 34) {
            v = 0.144 * static_cast<double>(g - 13) + 1.0;
        } else {
            v = 0.144 * 20.0 + 1.0;
        }
        // metres per frame at 25 fps, converted to degrees of longitude at 45°N
        lon += v / 3.6 / 25.0 / (111320.0 * std::cos(45.0 * 3.141592653589793 / 180.0));
        t.push_back({g, v, 45.0, lon});
    }
    return t;
}

SaliencyMap center_prediction(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> noise(0.0, 0.05);
    SaliencyMap m(kWidth, kHeight);
    for (int y = 0; y < kHeight; ++y) {
        for (int x = 0; x < kWidth; ++x) {
            const double dx = x - kWidth / 2.0;
            const double dy = y - kHeight / 2.0;
            m.at(x, y) = std::exp(-(dx * dx + dy * dy) / (2.0 * 20.0 * 20.0)) + noise(rng);
        }
    }
    return m;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Generate the synthetic test video directory"};
    std::string out;
    std::uint64_t seed = 20240611;
    app.add_option("out", out, "Output video directory")->required();
    app.add_option("--seed", seed, "Generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const ingest::VideoLayout layout{out};
        std::mt19937_64 rng(seed);

        const auto tex = texture(rng);
        std::vector<GrayFrame> frames;
        for (std::int64_t g = 0; g < kGar; ++g) {
            frames.push_back(shifted(tex, g));
            image_io::write_pgm(layout.frame(g), frames.back());
        }
        for (std::int64_t k = 0; k + 1 < kGar; ++k) {
            flowprop::write_flo(layout.flow_dir() / flowprop::DirectoryFlowProvider::forward_name(k),
                                flowprop::block_match_flow(frames[static_cast<std::size_t>(k)],
                                                           frames[static_cast<std::size_t>(k + 1)]));
            if (k + 1 != kMissingBackwardFlow) {
                flowprop::write_flo(layout.flow_dir() / flowprop::DirectoryFlowProvider::backward_name(k + 1),
                                    flowprop::block_match_flow(frames[static_cast<std::size_t>(k + 1)],
                                                               frames[static_cast<std::size_t>(k)]));
            }
            if (k != kMissingGarHomography) {
                io::write_file(layout.gar_homography(k),
                               geometry::format_homography(geometry::Homography::translation(1.0, 0.0)));
            }
        }
        for (std::int64_t e = 0; e < kEtg; ++e) {
            io::write_file(layout.correspondences(e), geometry::format_correspondences(correspondences(rng)));
        }

        std::ostringstream fix;
        ingest::write_fixation_log(fix, events(rng));
        io::write_file(layout.fixations(), fix.str());
        std::ostringstream tel;
        ingest::write_telemetry(tel, telemetry());
        io::write_file(layout.telemetry(), tel.str());
        io::write_file(layout.annotations(), ingest::serialize_annotations(annotations()));

        for (std::int64_t g = 0; g < kGar; ++g) {
            if (g != kMissingPrediction) {
                image_io::write_pfm(layout.predictions_dir() / "center" / ingest::frame_name(g, "", ".pfm"),
                                    center_prediction(rng));
            }
        }
        io::write_file(layout.root / "config.json",
                       "{\n  \"video\": {\"width\": 96, \"height\": 72},\n  \"heatmap\": {\"sigma_px\": 3.0},\n"
                       "  \"ransac\": {\"seed\": 7},\n  \"actions\": {\"mean_window\": 5, \"min_segment_frames\": 6}\n}\n");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
