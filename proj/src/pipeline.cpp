#include "drivegaze/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drivegaze/align.hpp"
#include "drivegaze/error.hpp"
#include "drivegaze/flowprop.hpp"
#include "drivegaze/image_io.hpp"
#include "drivegaze/ingest.hpp"
#include "drivegaze/io_util.hpp"
#include "drivegaze/parallel.hpp"

namespace drivegaze::pipeline {

namespace {

/// Frames of files named <prefix>%06d<ext> in dir, ascending; empty if dir is missing.
std::vector<std::int64_t> numbered_files(const fs::path& dir, std::string_view prefix, std::string_view ext)
{
    std::vector<std::int64_t> frames;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        return frames;
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() <= prefix.size() + ext.size() || !name.starts_with(prefix) || !name.ends_with(ext)) {
            continue;
        }
        const auto digits = std::string_view(name).substr(prefix.size(), name.size() - prefix.size() - ext.size());
        if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            continue;
        }
        if (const auto f = io::to_int(digits)) {
            frames.push_back(*f);
        }
    }
    std::sort(frames.begin(), frames.end());
    return frames;
}

std::string point_row(std::int64_t etg, std::int64_t ts, std::int64_t gar, heatmap::PixelPoint p,
                      heatmap::Provenance prov, bool clamped)
{
    std::string row = std::to_string(etg) + ',' + std::to_string(ts) + ',' + std::to_string(gar) + ',' +
                      ingest::format_double(p.x) + ',' + ingest::format_double(p.y) + ',' +
                      std::string(heatmap::to_string(prov)) + ',' + (clamped ? "1" : "0") + '\n';
    return row;
}

}  // namespace

std::uint64_t frame_seed(std::uint64_t base, std::int64_t frame) noexcept
{
    // splitmix64 finalizer over (base, frame)
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(frame) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

AlignSummary run_align(const fs::path& video, const fs::path& out_dir, const PipelineConfig& cfg, int jobs)
{
    const ingest::VideoLayout layout{video};
    const auto frames = numbered_files(layout.correspondence_dir(), "corr_", ".csv");
    if (frames.empty()) {
        throw Error(Errc::IoFailure, "no correspondence files in " + layout.correspondence_dir().string());
    }
    std::vector<char> ok(frames.size(), 0);
    parallel_for(frames.size(), jobs, [&](std::size_t i) {
        const auto corrs = geometry::read_correspondences(layout.correspondences(frames[i]));
        geometry::RansacConfig rc = cfg.ransac;
        rc.seed = frame_seed(cfg.ransac.seed, frames[i]);
        try {
            const auto result = geometry::estimate_homography_ransac(corrs, rc);
            io::write_file(out_dir / ingest::frame_name(frames[i], "h_", ".txt"),
                           geometry::format_homography(result.homography));
            ok[i] = 1;
        } catch (const Error& e) {
            if (e.code() != Errc::NoModelFound && e.code() != Errc::InsufficientPoints &&
                e.code() != Errc::DegenerateConfiguration) {
                throw;
            }
        }
    });
    AlignSummary s;
    s.frames = frames.size();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!ok[i]) {
            s.failed.push_back(frames[i]);
        }
    }
    return s;
}

heatmap::HomographyMap load_homographies(const fs::path& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw Error(Errc::IoFailure, "homography directory missing: " + dir.string());
    }
    heatmap::HomographyMap out;
    for (const auto f : numbered_files(dir, "h_", ".txt")) {
        out.emplace(f, geometry::read_homography(dir / ingest::frame_name(f, "h_", ".txt")));
    }
    return out;
}

heatmap::GarChain load_gar_chain(const fs::path& video, std::int64_t n_gar, const PipelineConfig& cfg)
{
    const ingest::VideoLayout layout{video};
    const flowprop::DirectoryFlowProvider flows(layout.flow_dir());
    heatmap::GarChain chain;
    for (std::int64_t k = 0; k + 1 < n_gar; ++k) {
        const auto gh = layout.gar_homography(k);
        std::error_code ec;
        if (fs::is_regular_file(gh, ec)) {
            chain.emplace(k, geometry::read_homography(gh));
            continue;
        }
        if (const auto flow = flows.forward(k)) {
            geometry::RansacConfig rc = cfg.ransac;
            rc.seed = frame_seed(cfg.ransac.seed, k);
            try {
                chain.emplace(k, flowprop::homography_from_flow(*flow, 8, rc));
            } catch (const Error& e) {
                if (e.code() != Errc::NoModelFound && e.code() != Errc::DegenerateConfiguration &&
                    e.code() != Errc::InsufficientPoints) {
                    throw;
                }
            }
        }
    }
    return chain;
}

std::size_t run_gaze_map(const fs::path& video, const fs::path& homography_dir, const fs::path& out_csv,
                         const PipelineConfig& cfg)
{
    const auto data = ingest::load_video(video);
    const auto alignment = align::spec_from(data.annotations);
    const auto homographies = load_homographies(homography_dir);
    std::string out = "etg_frame,timestamp_us,gar_frame,x,y,provenance,clamped\n";
    std::size_t rows = 0;
    for (const auto& ev : data.events) {
        const auto outcome = heatmap::map_event(ev, alignment, homographies, cfg.width, cfg.height);
        if (outcome.mapped) {
            const auto& m = *outcome.mapped;
            out += point_row(m.etg_frame, m.timestamp_us, m.gar_frame, m.point, m.provenance, m.clamped);
            ++rows;
        }
    }
    io::write_file(out_csv, out);
    return rows;
}

std::vector<heatmap::GazePoint> run_propagate(const fs::path& video, const fs::path& homography_dir,
                                              std::int64_t key, const fs::path& out_csv, const PipelineConfig& cfg)
{
    const auto data = ingest::load_video(video);
    const auto alignment = align::spec_from(data.annotations);
    const auto homographies = load_homographies(homography_dir);
    const flowprop::DirectoryFlowProvider flows(ingest::VideoLayout{video}.flow_dir());
    auto points = heatmap::collect_window(key, data.events, alignment, homographies, flows, cfg.heatmap, cfg.width,
                                          cfg.height);
    std::string out = "etg_frame,timestamp_us,source_gar_frame,x,y,provenance,clamped\n";
    for (const auto& p : points) {
        out += point_row(p.etg_frame, p.timestamp_us, p.source_gar_frame, p.point, p.provenance, p.clamped);
    }
    io::write_file(out_csv, out);
    return points;
}

namespace {

void write_key_frame(const fs::path& out_dir, std::int64_t key, const SaliencyMap& saliency,
                     const FixationMap& fixations)
{
    image_io::write_pfm(out_dir / ingest::frame_name(key, "", ".pfm"), saliency);
    image_io::write_pbm(out_dir / ingest::frame_name(key, "", ".pbm"), fixations);
    image_io::write_pgm(out_dir / ingest::frame_name(key, "", ".pgm"), image_io::to_gray(saliency));
}

}  // namespace

GtSummary run_gt(const fs::path& video, const fs::path& homography_dir, const fs::path& out_dir,
                 const PipelineConfig& cfg, int jobs, std::optional<heatmap::KeyRange> keys)
{
    validate(cfg);
    const auto data = ingest::load_video(video);
    const auto alignment = align::spec_from(data.annotations);
    const auto homographies = load_homographies(homography_dir);
    const heatmap::KeyRange range = keys.value_or(heatmap::KeyRange{0, alignment.n_gar - 1});
    GtSummary s;

    if (cfg.legacy) {
        if (range.first > range.last || range.first < 0 || range.last >= alignment.n_gar) {
            throw Error(Errc::OutOfRange, "key range outside the video");
        }
        const auto chain = load_gar_chain(video, alignment.n_gar, cfg);
        const auto points = heatmap::legacy_points(data.events, alignment, homographies);
        const auto n = static_cast<std::size_t>(range.last - range.first + 1);
        std::vector<char> blank(n, 0);
        parallel_for(n, jobs, [&](std::size_t i) {
            const std::int64_t key = range.first + static_cast<std::int64_t>(i);
            const auto saliency =
                heatmap::legacy_aggregate(key, points, chain, alignment, cfg.heatmap, cfg.width, cfg.height);
            std::vector<heatmap::PixelPoint> inside;
            for (const auto& p : heatmap::legacy_window_points(key, points, chain, alignment, cfg.heatmap)) {
                const double rx = std::round(p.x);
                const double ry = std::round(p.y);
                if (rx >= 0 && ry >= 0 && rx < cfg.width && ry < cfg.height) {
                    inside.push_back(p);
                }
            }
            const auto fixations = heatmap::rasterize(inside, cfg.width, cfg.height);
            blank[i] = tasklab::is_blank(saliency) ? 1 : 0;
            write_key_frame(out_dir, key, saliency, fixations);
        });
        s.key_frames = n;
        s.blank = static_cast<std::size_t>(std::count(blank.begin(), blank.end(), 1));
        return s;
    }

    const flowprop::DirectoryFlowProvider flows(ingest::VideoLayout{video}.flow_dir());
    const auto gt = heatmap::build_ground_truth(data.events, alignment, homographies, flows, cfg.heatmap, cfg.width,
                                                cfg.height, range, jobs);
    parallel_for(gt.frames.size(), jobs, [&](std::size_t i) {
        const auto& kf = gt.frames[i];
        write_key_frame(out_dir, kf.key_frame, kf.saliency, kf.fixations);
    });
    std::ostringstream excl;
    heatmap::write_exclusions(excl, gt.exclusions);
    io::write_file(out_dir / "exclusions.csv", excl.str());
    s.key_frames = gt.frames.size();
    s.blank = static_cast<std::size_t>(
        std::count_if(gt.frames.begin(), gt.frames.end(), [](const auto& f) { return f.blank(); }));
    s.excluded_events = gt.exclusions.size();
    s.fallback_steps = gt.fallback_steps;
    return s;
}

tasklab::VideoActions video_actions(const fs::path& video, const PipelineConfig& cfg)
{
    const auto data = ingest::load_video(video);
    return tasklab::label_video(data.telemetry, data.annotations, cfg.actions);
}

void run_label_actions(const fs::path& video, const fs::path& out_csv, const PipelineConfig& cfg)
{
    std::ostringstream out;
    tasklab::write_timeline(out, video_actions(video, cfg).timeline);
    io::write_file(out_csv, out.str());
}

std::size_t run_context(const fs::path& video, const fs::path& out_jsonl, const PipelineConfig& cfg)
{
    const auto data = ingest::load_video(video);
    const auto actions = tasklab::label_video(data.telemetry, data.annotations, cfg.actions);
    const auto positions = tasklab::interpolate_positions(data.telemetry, data.annotations.n_gar);
    std::string out;
    const auto starts = tasklab::sample_starts(actions.timeline.size());
    for (const auto s : starts) {
        out += tasklab::context_record_json(
            tasklab::build_context_record(s, actions, positions, data.annotations, data.layout.video_id()));
        out += '\n';
    }
    io::write_file(out_jsonl, out);
    return starts.size();
}

std::vector<tasklab::SampleWeight> run_weights(const fs::path& video, const fs::path& gt_dir,
                                               const fs::path& out_csv, const PipelineConfig& cfg, int jobs)
{
    const auto data = ingest::load_video(video);
    const std::int64_t n = data.annotations.n_gar;
    const auto path_of = [&](std::int64_t f) { return gt_dir / ingest::frame_name(f, "", ".pfm"); };

    // Streaming form of tasklab::video_mean_map: same summation order, one map in memory.
    SaliencyMap mean;
    std::size_t count = 0;
    for (std::int64_t f = 0; f < n; ++f) {
        const auto map = image_io::read_pfm(path_of(f));
        if (f == 0) {
            mean = SaliencyMap(map.width(), map.height(), 0.0);
        }
        require_same_shape(mean, map, "weights");
        if (tasklab::is_blank(map)) {
            continue;
        }
        auto acc = mean.values();
        const auto v = map.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc[i] += v[i];
        }
        ++count;
    }
    if (count > 0) {
        for (auto& x : mean.values()) {
            x /= static_cast<double>(count);
        }
    }

    const auto starts = tasklab::sample_starts(n);
    std::vector<tasklab::SampleWeight> weights(starts.size());
    parallel_for(starts.size(), jobs, [&](std::size_t i) {
        std::vector<SaliencyMap> sample;
        for (int k = 0; k < tasklab::kSampleFrames; ++k) {
            sample.push_back(image_io::read_pfm(path_of(starts[i] + k)));
        }
        weights[i] = {data.layout.video_id(), starts[i], tasklab::sample_weight(sample, mean, cfg.metrics)};
    });
    std::ostringstream out;
    tasklab::write_weights(out, weights);
    io::write_file(out_csv, out.str());
    return weights;
}

std::vector<tasklab::StatsRow> run_stats(std::span<const fs::path> videos, const fs::path& out_csv,
                                         const PipelineConfig& cfg)
{
    std::vector<tasklab::VideoLabels> labels;
    for (const auto& v : videos) {
        const auto data = ingest::load_video(v);
        labels.push_back({tasklab::label_video(data.telemetry, data.annotations, cfg.actions).timeline,
                          data.annotations});
    }
    auto rows = tasklab::dataset_stats(labels);
    std::ostringstream out;
    tasklab::write_stats(out, rows);
    io::write_file(out_csv, out.str());
    return rows;
}

bench::EvalRun run_eval(const fs::path& video, const EvalPaths& paths, const PipelineConfig& cfg, int jobs)
{
    const auto data = ingest::load_video(video);
    bench::EvalInputs in;
    in.video_id = data.layout.video_id();
    in.pred_dir = paths.pred_dir;
    in.gt_dir = paths.gt_dir;
    in.fix_dir = paths.fix_dir.empty() ? paths.gt_dir : paths.fix_dir;
    in.timeline = paths.timeline_csv.empty()
                      ? tasklab::label_video(data.telemetry, data.annotations, cfg.actions).timeline
                      : tasklab::parse_timeline(io::read_file(paths.timeline_csv));
    in.windows = tasklab::intersection_windows(data.annotations);
    return bench::evaluate(in, cfg.metrics, jobs);
}

std::string run_report(std::span<const fs::path> runs, bench::ReportFormat format)
{
    bench::EvalRun merged;
    for (const auto& r : runs) {
        merged.merge(bench::parse_eval_run(io::read_file(r)));
    }
    return bench::emit_report(bench::aggregate(merged), format);
}

}  // namespace drivegaze::pipeline
