#pragma once

// Evaluation harness: per-frame scoring of a prediction directory against ground
// truth, subset tagging by action and intersection context, deterministic
// aggregation and CSV / markdown reports.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drivegaze/metrics.hpp"
#include "drivegaze/tasklab.hpp"

namespace drivegaze::bench {

enum class ActionTag { none, acc, dec, lat, lat_lon, stop };
/// Report names: None, Acc, Dec, Lat, Lat+Lon, Stop.
std::string_view to_string(ActionTag t) noexcept;
ActionTag parse_action_tag(std::string_view token);

struct ContextTag {
    ingest::IntersectionType type = ingest::IntersectionType::unsignalized;
    ingest::Priority priority = ingest::Priority::right_of_way;

    friend bool operator==(const ContextTag&, const ContextTag&) = default;
};
/// "<type>/RoW" or "<type>/Yield".
std::string context_name(const ContextTag& t);

struct SubsetTags {
    ActionTag action = ActionTag::none;
    /// One entry per distinct (type, priority) window containing the frame.
    std::vector<ContextTag> contexts;

    friend bool operator==(const SubsetTags&, const SubsetTags&) = default;
};

/// Action precedence Stop ≻ Lat+Lon ≻ Lat ≻ Acc/Dec ≻ None. Throws UnlabeledFrame.
SubsetTags assign_subsets(std::int64_t frame, const tasklab::ActionTimeline& timeline,
                          std::span<const tasklab::IntersectionWindow> windows);

inline constexpr std::array<std::string_view, 4> kMetricNames = {"KLD", "CC", "NSS", "SIM"};

struct FrameScore {
    std::string video_id;
    std::int64_t frame = 0;
    std::array<double, 4> values{};  // KLD, CC, NSS, SIM
    SubsetTags tags;
};

enum class ExclusionReason { u_turn, blank_gt, missing_prediction };
std::string_view to_string(ExclusionReason r) noexcept;
ExclusionReason parse_exclusion_reason(std::string_view token);

struct FrameExclusion {
    std::string video_id;
    std::int64_t frame = 0;
    ExclusionReason reason = ExclusionReason::blank_gt;

    friend bool operator==(const FrameExclusion&, const FrameExclusion&) = default;
};

struct EvalRun {
    std::vector<FrameScore> scores;
    std::vector<FrameExclusion> exclusions;

    /// Appends another run and restores (video_id, frame) order.
    void merge(EvalRun other);
};

struct EvalInputs {
    std::string video_id;
    std::filesystem::path pred_dir;  // %06d.pfm
    std::filesystem::path gt_dir;    // %06d.pfm
    std::filesystem::path fix_dir;   // %06d.pbm
    tasklab::ActionTimeline timeline;
    std::vector<tasklab::IntersectionWindow> windows;
};

/// Scores every ground-truth frame in gt_dir or excludes it (u_turn, then blank_gt,
/// then missing_prediction). Throws DimensionMismatch when a prediction's size differs.
EvalRun evaluate(const EvalInputs& in, const metrics::MetricConfig& cfg, int jobs = 1);

/// Fixed-shape pairwise summation, so the result depends only on the order of `x`.
double pairwise_sum(std::span<const double> x) noexcept;

struct Cell {
    std::string table;   // overall | action | context
    std::string subset;
    std::int64_t count = 0;
    std::optional<std::array<double, 4>> means;  // absent when count == 0
};

struct Report {
    std::vector<Cell> cells;
};

/// Means per metric overall, per action tag and per (type, priority) context. Frames
/// are reduced in (video_id, frame) order whatever their order in `run`.
Report aggregate(const EvalRun& run);

enum class ReportFormat { csv, markdown };
ReportFormat parse_report_format(std::string_view token);

std::string emit_report(const Report& report, ReportFormat format);

std::string eval_run_json(const EvalRun& run);
EvalRun parse_eval_run(std::string_view json_text);

void write_eval_exclusions(std::ostream& out, std::span<const FrameExclusion> exclusions);

}  // namespace drivegaze::bench
