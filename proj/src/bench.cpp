#include "drivegaze/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <variant>

#include <nlohmann/json.hpp>

#include "drivegaze/error.hpp"
#include "drivegaze/image_io.hpp"
#include "drivegaze/io_util.hpp"
#include "drivegaze/parallel.hpp"

namespace drivegaze::bench {

namespace fs = std::filesystem;
using ingest::IntersectionType;
using ingest::LateralLabel;
using ingest::Priority;
using tasklab::Longitudinal;

namespace {

constexpr ActionTag kActionOrder[] = {ActionTag::none, ActionTag::acc, ActionTag::dec,
                                      ActionTag::lat,  ActionTag::lat_lon, ActionTag::stop};
constexpr IntersectionType kContextTypeOrder[] = {IntersectionType::roundabout, IntersectionType::merge,
                                                  IntersectionType::signalized, IntersectionType::unsignalized};
constexpr ExclusionReason kReasons[] = {ExclusionReason::u_turn, ExclusionReason::blank_gt,
                                        ExclusionReason::missing_prediction};

std::string fixed4(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::string s = buf;
    if (s == "-0.0000") {
        s = "0.0000";
    }
    return s;
}

}  // namespace

std::string_view to_string(ActionTag t) noexcept
{
    switch (t) {
    case ActionTag::none: return "None";
    case ActionTag::acc: return "Acc";
    case ActionTag::dec: return "Dec";
    case ActionTag::lat: return "Lat";
    case ActionTag::lat_lon: return "Lat+Lon";
    case ActionTag::stop: return "Stop";
    }
    return "?";
}

ActionTag parse_action_tag(std::string_view token)
{
    for (const auto t : kActionOrder) {
        if (to_string(t) == token) {
            return t;
        }
    }
    throw Error(Errc::UnknownEnum, "unknown action tag '" + std::string(token) + "'");
}

std::string context_name(const ContextTag& t)
{
    return std::string(ingest::to_string(t.type)) + (t.priority == Priority::yield ? "/Yield" : "/RoW");
}

namespace {

ContextTag parse_context_name(std::string_view name)
{
    const auto slash = name.find('/');
    if (slash == std::string_view::npos) {
        throw Error(Errc::UnknownEnum, "bad context tag '" + std::string(name) + "'");
    }
    const auto prio = name.substr(slash + 1);
    if (prio != "RoW" && prio != "Yield") {
        throw Error(Errc::UnknownEnum, "bad context priority '" + std::string(prio) + "'");
    }
    return {ingest::parse_intersection_type(name.substr(0, slash)),
            prio == "Yield" ? Priority::yield : Priority::right_of_way};
}

}  // namespace

SubsetTags assign_subsets(std::int64_t frame, const tasklab::ActionTimeline& timeline,
                          std::span<const tasklab::IntersectionWindow> windows)
{
    if (frame < 0 || frame >= timeline.size() ||
        static_cast<std::int64_t>(timeline.longitudinal.size()) != timeline.size()) {
        throw Error(Errc::UnlabeledFrame, "frame " + std::to_string(frame) + " has no action labels", frame);
    }
    const auto i = static_cast<std::size_t>(frame);
    const auto lon = timeline.longitudinal[i];
    const bool lat = timeline.lateral[i] != LateralLabel::straight;
    const bool moving_lon = lon == Longitudinal::accelerate || lon == Longitudinal::decelerate;
    SubsetTags tags;
    if (lon == Longitudinal::stopped) {
        tags.action = ActionTag::stop;
    } else if (lat && moving_lon) {
        tags.action = ActionTag::lat_lon;
    } else if (lat) {
        tags.action = ActionTag::lat;
    } else if (lon == Longitudinal::accelerate) {
        tags.action = ActionTag::acc;
    } else if (lon == Longitudinal::decelerate) {
        tags.action = ActionTag::dec;
    }
    for (const auto& w : windows) {
        if (!w.contains(frame)) {
            continue;
        }
        const ContextTag t{w.type, w.priority};
        if (std::find(tags.contexts.begin(), tags.contexts.end(), t) == tags.contexts.end()) {
            tags.contexts.push_back(t);
        }
    }
    return tags;
}

std::string_view to_string(ExclusionReason r) noexcept
{
    switch (r) {
    case ExclusionReason::u_turn: return "u_turn";
    case ExclusionReason::blank_gt: return "blank_gt";
    case ExclusionReason::missing_prediction: return "missing_prediction";
    }
    return "?";
}

ExclusionReason parse_exclusion_reason(std::string_view token)
{
    for (const auto r : kReasons) {
        if (to_string(r) == token) {
            return r;
        }
    }
    throw Error(Errc::UnknownEnum, "unknown exclusion reason '" + std::string(token) + "'");
}

namespace {

bool before(const std::string& va, std::int64_t fa, const std::string& vb, std::int64_t fb)
{
    return va != vb ? va < vb : fa < fb;
}

/// Frame indices of %06d.pfm files in dir, ascending.
std::vector<std::int64_t> list_frames(const fs::path& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw Error(Errc::IoFailure, "not a directory: " + dir.string());
    }
    std::vector<std::int64_t> frames;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".pfm") {
            continue;
        }
        const auto stem = entry.path().stem().string();
        const bool digits = !stem.empty() && std::all_of(stem.begin(), stem.end(), [](char c) {
            return c >= '0' && c <= '9';
        });
        if (!digits) {
            continue;
        }
        if (const auto f = io::to_int(stem)) {
            frames.push_back(*f);
        }
    }
    std::sort(frames.begin(), frames.end());
    return frames;
}

}  // namespace

void EvalRun::merge(EvalRun other)
{
    for (auto& s : other.scores) {
        scores.push_back(std::move(s));
    }
    for (auto& e : other.exclusions) {
        exclusions.push_back(std::move(e));
    }
    std::stable_sort(scores.begin(), scores.end(), [](const FrameScore& a, const FrameScore& b) {
        return before(a.video_id, a.frame, b.video_id, b.frame);
    });
    std::stable_sort(exclusions.begin(), exclusions.end(), [](const FrameExclusion& a, const FrameExclusion& b) {
        return before(a.video_id, a.frame, b.video_id, b.frame);
    });
}

EvalRun evaluate(const EvalInputs& in, const metrics::MetricConfig& cfg, int jobs)
{
    metrics::validate(cfg);
    const auto frames = list_frames(in.gt_dir);
    using Outcome = std::variant<FrameScore, FrameExclusion>;
    std::vector<Outcome> outcomes(frames.size());

    parallel_for(frames.size(), jobs, [&](std::size_t i) {
        const std::int64_t frame = frames[i];
        auto tags = assign_subsets(frame, in.timeline, in.windows);
        if (in.timeline.lateral[static_cast<std::size_t>(frame)] == LateralLabel::u_turn) {
            outcomes[i] = FrameExclusion{in.video_id, frame, ExclusionReason::u_turn};
            return;
        }
        const auto gt = image_io::read_pfm(in.gt_dir / ingest::frame_name(frame, "", ".pfm"));
        if (tasklab::is_blank(gt)) {
            outcomes[i] = FrameExclusion{in.video_id, frame, ExclusionReason::blank_gt};
            return;
        }
        const auto pred_path = in.pred_dir / ingest::frame_name(frame, "", ".pfm");
        std::error_code ec;
        if (!fs::is_regular_file(pred_path, ec)) {
            outcomes[i] = FrameExclusion{in.video_id, frame, ExclusionReason::missing_prediction};
            return;
        }
        const auto pred = image_io::read_pfm(pred_path);
        const auto fix = image_io::read_pbm(in.fix_dir / ingest::frame_name(frame, "", ".pbm"));
        if (!gt.same_shape(pred) || !gt.same_shape(fix)) {
            throw Error(Errc::DimensionMismatch,
                        "frame " + std::to_string(frame) + ": prediction " + std::to_string(pred.width()) + "x" +
                            std::to_string(pred.height()) + ", ground truth " + std::to_string(gt.width()) + "x" +
                            std::to_string(gt.height()),
                        frame);
        }
        FrameScore s;
        s.video_id = in.video_id;
        s.frame = frame;
        s.values = {metrics::kld(gt, pred, cfg), metrics::cc(gt, pred), metrics::nss(fix, pred),
                    metrics::sim(gt, pred)};
        s.tags = std::move(tags);
        outcomes[i] = std::move(s);
    });

    EvalRun run;
    for (auto& o : outcomes) {
        if (auto* s = std::get_if<FrameScore>(&o)) {
            run.scores.push_back(std::move(*s));
        } else {
            run.exclusions.push_back(std::move(std::get<FrameExclusion>(o)));
        }
    }
    return run;
}

double pairwise_sum(std::span<const double> x) noexcept
{
    if (x.size() <= 8) {
        double s = 0.0;
        for (const double v : x) {
            s += v;
        }
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

namespace {

Cell make_cell(std::string table, std::string subset, std::span<const FrameScore* const> frames)
{
    Cell c{std::move(table), std::move(subset), static_cast<std::int64_t>(frames.size()), std::nullopt};
    if (frames.empty()) {
        return c;
    }
    std::array<double, 4> means{};
    std::vector<double> column(frames.size());
    for (std::size_t m = 0; m < 4; ++m) {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            column[i] = frames[i]->values[m];
        }
        means[m] = pairwise_sum(column) / static_cast<double>(frames.size());
    }
    c.means = means;
    return c;
}

}  // namespace

Report aggregate(const EvalRun& run)
{
    std::vector<const FrameScore*> ordered;
    ordered.reserve(run.scores.size());
    for (const auto& s : run.scores) {
        ordered.push_back(&s);
    }
    std::sort(ordered.begin(), ordered.end(), [](const FrameScore* a, const FrameScore* b) {
        return before(a->video_id, a->frame, b->video_id, b->frame);
    });

    Report r;
    r.cells.push_back(make_cell("overall", "all", ordered));
    for (const auto tag : kActionOrder) {
        std::vector<const FrameScore*> subset;
        for (const auto* s : ordered) {
            if (s->tags.action == tag) {
                subset.push_back(s);
            }
        }
        r.cells.push_back(make_cell("action", std::string(to_string(tag)), subset));
    }
    for (const auto type : kContextTypeOrder) {
        for (const auto prio : {Priority::right_of_way, Priority::yield}) {
            const ContextTag tag{type, prio};
            std::vector<const FrameScore*> subset;
            for (const auto* s : ordered) {
                if (std::find(s->tags.contexts.begin(), s->tags.contexts.end(), tag) != s->tags.contexts.end()) {
                    subset.push_back(s);
                }
            }
            r.cells.push_back(make_cell("context", context_name(tag), subset));
        }
    }
    return r;
}

ReportFormat parse_report_format(std::string_view token)
{
    if (token == "csv") {
        return ReportFormat::csv;
    }
    if (token == "markdown" || token == "md") {
        return ReportFormat::markdown;
    }
    throw Error(Errc::UnknownEnum, "unknown report format '" + std::string(token) + "'");
}

std::string emit_report(const Report& report, ReportFormat format)
{
    std::ostringstream out;
    if (format == ReportFormat::csv) {
        out << "table,subset,metric,count,value\n";
        for (const auto& c : report.cells) {
            if (!c.means) {
                continue;
            }
            for (std::size_t m = 0; m < 4; ++m) {
                out << c.table << ',' << c.subset << ',' << kMetricNames[m] << ',' << c.count << ','
                    << fixed4((*c.means)[m]) << '\n';
            }
        }
        return out.str();
    }
    const std::pair<std::string_view, std::string_view> sections[] = {
        {"overall", "Overall"}, {"action", "Actions"}, {"context", "Context"}};
    bool first = true;
    for (const auto& [table, title] : sections) {
        if (!first) {
            out << '\n';
        }
        first = false;
        out << "## " << title << "\n\n| Subset | Frames | KLD | CC | NSS | SIM |\n|---|---:|---:|---:|---:|---:|\n";
        for (const auto& c : report.cells) {
            if (c.table != table) {
                continue;
            }
            out << "| " << c.subset << " | " << c.count << " |";
            for (std::size_t m = 0; m < 4; ++m) {
                out << ' ' << (c.means ? fixed4((*c.means)[m]) : std::string("-")) << " |";
            }
            out << '\n';
        }
    }
    return out.str();
}

std::string eval_run_json(const EvalRun& run)
{
    nlohmann::ordered_json j;
    j["scores"] = nlohmann::ordered_json::array();
    for (const auto& s : run.scores) {
        nlohmann::ordered_json e;
        e["video_id"] = s.video_id;
        e["frame"] = s.frame;
        for (std::size_t m = 0; m < 4; ++m) {
            e[std::string(kMetricNames[m])] = s.values[m];
        }
        e["action"] = to_string(s.tags.action);
        auto contexts = nlohmann::ordered_json::array();
        for (const auto& c : s.tags.contexts) {
            contexts.push_back(context_name(c));
        }
        e["contexts"] = std::move(contexts);
        j["scores"].push_back(std::move(e));
    }
    j["exclusions"] = nlohmann::ordered_json::array();
    for (const auto& x : run.exclusions) {
        j["exclusions"].push_back({{"video_id", x.video_id}, {"frame", x.frame}, {"reason", to_string(x.reason)}});
    }
    return j.dump(1) + "\n";
}

EvalRun parse_eval_run(std::string_view json_text)
{
    EvalRun run;
    try {
        const auto j = nlohmann::json::parse(json_text);
        for (const auto& e : j.at("scores")) {
            FrameScore s;
            s.video_id = e.at("video_id").get<std::string>();
            s.frame = e.at("frame").get<std::int64_t>();
            for (std::size_t m = 0; m < 4; ++m) {
                s.values[m] = e.at(std::string(kMetricNames[m])).get<double>();
            }
            s.tags.action = parse_action_tag(e.at("action").get<std::string>());
            for (const auto& c : e.at("contexts")) {
                s.tags.contexts.push_back(parse_context_name(c.get<std::string>()));
            }
            run.scores.push_back(std::move(s));
        }
        for (const auto& e : j.at("exclusions")) {
            run.exclusions.push_back({e.at("video_id").get<std::string>(), e.at("frame").get<std::int64_t>(),
                                      parse_exclusion_reason(e.at("reason").get<std::string>())});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::MalformedRow, std::string("eval run JSON: ") + e.what());
    }
    return run;
}

void write_eval_exclusions(std::ostream& out, std::span<const FrameExclusion> exclusions)
{
    out << "video_id,frame,reason\n";
    for (const auto& e : exclusions) {
        out << e.video_id << ',' << e.frame << ',' << to_string(e.reason) << '\n';
    }
}

}  // namespace drivegaze::bench
