#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "drivegaze/bench.hpp"
#include "drivegaze/image_io.hpp"
#include "drivegaze/ingest.hpp"
#include "support.hpp"

using namespace drivegaze;
using namespace drivegaze::bench;
using ingest::IntersectionType;
using ingest::LateralLabel;
using ingest::Priority;
using tasklab::Longitudinal;

namespace {

tasklab::ActionTimeline timeline(std::int64_t n, Longitudinal lon = Longitudinal::maintain,
                                 LateralLabel lat = LateralLabel::straight)
{
    tasklab::ActionTimeline t;
    t.longitudinal.assign(static_cast<std::size_t>(n), lon);
    t.lateral.assign(static_cast<std::size_t>(n), lat);
    return t;
}

FrameScore score(std::string video, std::int64_t frame, std::array<double, 4> v, ActionTag tag,
                 std::vector<ContextTag> ctx = {})
{
    return {std::move(video), frame, v, {tag, std::move(ctx)}};
}

const Cell& cell(const Report& r, const std::string& table, const std::string& subset)
{
    for (const auto& c : r.cells) {
        if (c.table == table && c.subset == subset) {
            return c;
        }
    }
    FAIL("missing cell " << table << "/" << subset);
    return r.cells.front();
}

/// Writes gt/pred/fix rasters for frames [0, n) into a scratch tree.
struct EvalTree {
    testing::TempDir dir{"eval"};
    std::filesystem::path gt() const { return dir.path() / "gt"; }
    std::filesystem::path pred() const { return dir.path() / "pred"; }
    std::filesystem::path fix() const { return dir.path() / "fix"; }

    void frame(std::int64_t f, const SaliencyMap& gt_map, const std::optional<SaliencyMap>& pred_map,
               const FixationMap& fix_map) const
    {
        image_io::write_pfm(gt() / ingest::frame_name(f, "", ".pfm"), gt_map);
        image_io::write_pbm(fix() / ingest::frame_name(f, "", ".pbm"), fix_map);
        if (pred_map) {
            image_io::write_pfm(pred() / ingest::frame_name(f, "", ".pfm"), *pred_map);
        }
    }
};

SaliencyMap bump(int w, int h, int cx, int cy)
{
    SaliencyMap m(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            m.at(x, y) = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / 18.0);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("assign_subsets: precedence and context tags")
{
    auto t = timeline(10);
    t.lateral[2] = LateralLabel::turn_left;
    t.longitudinal[2] = Longitudinal::decelerate;
    CHECK(assign_subsets(2, t, {}).action == ActionTag::lat_lon);
    CHECK(assign_subsets(0, t, {}).action == ActionTag::none);
    t.longitudinal[3] = Longitudinal::accelerate;
    CHECK(assign_subsets(3, t, {}).action == ActionTag::acc);
    t.longitudinal[4] = Longitudinal::decelerate;
    CHECK(assign_subsets(4, t, {}).action == ActionTag::dec);
    t.lateral[5] = LateralLabel::lane_change_right;
    CHECK(assign_subsets(5, t, {}).action == ActionTag::lat);

    t.longitudinal[6] = Longitudinal::stopped;
    t.lateral[6] = LateralLabel::turn_right;
    const std::vector<tasklab::IntersectionWindow> w{{4, 8, IntersectionType::roundabout, Priority::yield},
                                                     {6, 9, IntersectionType::roundabout, Priority::yield},
                                                     {0, 6, IntersectionType::merge, Priority::right_of_way}};
    const auto tags = assign_subsets(6, t, w);
    CHECK(tags.action == ActionTag::stop);
    REQUIRE(tags.contexts.size() == 2);
    CHECK(context_name(tags.contexts[0]) == "roundabout/Yield");
    CHECK(context_name(tags.contexts[1]) == "merge/RoW");
    CHECK_ERRC(assign_subsets(10, t, w), Errc::UnlabeledFrame);
}

TEST_CASE("evaluate: identical prediction, blank frames and u-turns")
{
    EvalTree tree;
    const int w = 24;
    const int h = 18;
    for (int f = 0; f < 10; ++f) {
        FixationMap fix(w, h, 0);
        fix.at(5 + f, 9) = 1;
        const bool blank = f == 3 || f == 7;
        const auto g = blank ? SaliencyMap(w, h, 0.0) : bump(w, h, 5 + f, 9);
        tree.frame(f, g, g, fix);
    }
    EvalInputs in;
    in.video_id = "v";
    in.gt_dir = tree.gt();
    in.pred_dir = tree.pred();
    in.fix_dir = tree.fix();
    in.timeline = timeline(10);
    const auto run = evaluate(in, metrics::MetricConfig{}, 3);
    CHECK(run.scores.size() == 8);
    REQUIRE(run.exclusions.size() == 2);
    CHECK(run.exclusions[0] == FrameExclusion{"v", 3, ExclusionReason::blank_gt});
    CHECK(run.exclusions[1] == FrameExclusion{"v", 7, ExclusionReason::blank_gt});
    for (const auto& s : run.scores) {
        CHECK(std::abs(s.values[0]) < 1e-6);
        CHECK(s.values[1] == doctest::Approx(1.0));
        CHECK(s.values[3] == doctest::Approx(1.0));
    }

    in.timeline.lateral[3] = LateralLabel::u_turn;
    in.timeline.lateral[4] = LateralLabel::u_turn;
    std::filesystem::remove(tree.pred() / "000008.pfm");
    const auto run2 = evaluate(in, metrics::MetricConfig{}, 1);
    CHECK(run2.scores.size() + run2.exclusions.size() == 10);
    CHECK(run2.exclusions[0] == FrameExclusion{"v", 3, ExclusionReason::u_turn});
    CHECK(run2.exclusions[1] == FrameExclusion{"v", 4, ExclusionReason::u_turn});
    CHECK(run2.exclusions[2] == FrameExclusion{"v", 7, ExclusionReason::blank_gt});
    CHECK(run2.exclusions[3] == FrameExclusion{"v", 8, ExclusionReason::missing_prediction});
}

TEST_CASE("evaluate: deterministic across worker counts and strict on dimensions")
{
    EvalTree tree;
    std::mt19937_64 rng(4);
    for (int f = 0; f < 12; ++f) {
        FixationMap fix(20, 16, 0);
        fix.at(f, 3) = 1;
        tree.frame(f, bump(20, 16, f, 3), testing::random_map(rng, 20, 16, 0.0, 1.0), fix);
    }
    EvalInputs in{"v", tree.pred(), tree.gt(), tree.fix(), timeline(12), {}};
    const auto a = evaluate(in, {}, 1);
    const auto b = evaluate(in, {}, 6);
    CHECK(eval_run_json(a) == eval_run_json(b));

    image_io::write_pfm(tree.pred() / "000005.pfm", SaliencyMap(21, 16, 1.0));
    CHECK_ERRC(evaluate(in, {}, 2), Errc::DimensionMismatch);
}

TEST_CASE("aggregate: single None frame")
{
    EvalRun run;
    run.scores.push_back(score("v", 0, {0.5, 0.25, 1.5, 0.75}, ActionTag::none));
    const auto r = aggregate(run);
    const auto& overall = cell(r, "overall", "all");
    REQUIRE(overall.means);
    CHECK(*overall.means == std::array<double, 4>{0.5, 0.25, 1.5, 0.75});
    CHECK(cell(r, "action", "None").count == 1);
    for (const auto& c : r.cells) {
        if (c.subset != "all" && c.subset != "None") {
            CHECK_FALSE(c.means);
            CHECK(c.count == 0);
        }
    }
    const auto md = emit_report(r, ReportFormat::markdown);
    CHECK(md.find("| Acc | 0 | - | - | - | - |") != std::string::npos);
    CHECK(md.find("| None | 1 | 0.5000 | 0.2500 | 1.5000 | 0.7500 |") != std::string::npos);
    CHECK(emit_report(r, ReportFormat::csv) ==
          "table,subset,metric,count,value\n"
          "overall,all,KLD,1,0.5000\noverall,all,CC,1,0.2500\noverall,all,NSS,1,1.5000\noverall,all,SIM,1,0.7500\n"
          "action,None,KLD,1,0.5000\naction,None,CC,1,0.2500\naction,None,NSS,1,1.5000\naction,None,SIM,1,0.7500\n");
}

TEST_CASE("aggregate: cell means match a flat oracle and ignore frame order")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2, 2);
    std::uniform_int_distribution<int> tag(0, 5);
    EvalRun run;
    const ContextTag ctx{IntersectionType::signalized, Priority::right_of_way};
    for (int v = 0; v < 3; ++v) {
        for (int f = 0; f < 200; ++f) {
            std::vector<ContextTag> c;
            if (f % 3 == 0) {
                c.push_back(ctx);
            }
            run.scores.push_back(score("vid" + std::to_string(v), f, {u(rng), u(rng), u(rng), u(rng)},
                                       static_cast<ActionTag>(tag(rng)), c));
        }
    }
    const auto r = aggregate(run);
    for (int t = 0; t < 6; ++t) {
        long double acc[4] = {0, 0, 0, 0};
        int n = 0;
        for (const auto& s : run.scores) {
            if (static_cast<int>(s.tags.action) == t) {
                ++n;
                for (int m = 0; m < 4; ++m) {
                    acc[m] += s.values[static_cast<std::size_t>(m)];
                }
            }
        }
        const auto& c = cell(r, "action", std::string(to_string(static_cast<ActionTag>(t))));
        REQUIRE(c.count == n);
        for (int m = 0; m < 4; ++m) {
            REQUIRE(std::abs((*c.means)[static_cast<std::size_t>(m)] - static_cast<double>(acc[m] / n)) <= 1e-12);
        }
    }
    CHECK(cell(r, "context", "signalized/RoW").count == 3 * 67);

    // Overall mean equals the frame-weighted mean of the action partition.
    for (std::size_t m = 0; m < 4; ++m) {
        long double weighted = 0;
        for (int t = 0; t < 6; ++t) {
            const auto& c = cell(r, "action", std::string(to_string(static_cast<ActionTag>(t))));
            if (c.means) {
                weighted += (*c.means)[m] * c.count;
            }
        }
        CHECK(std::abs((*cell(r, "overall", "all").means)[m] - static_cast<double>(weighted / 600)) <= 1e-12);
    }

    auto shuffled = run;
    std::shuffle(shuffled.scores.begin(), shuffled.scores.end(), rng);
    CHECK(emit_report(aggregate(shuffled), ReportFormat::csv) == emit_report(r, ReportFormat::csv));
    const auto rs = aggregate(shuffled);
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        REQUIRE(rs.cells[i].means == r.cells[i].means);
    }

    // Merging partitions reproduces the serial run bit-for-bit.
    EvalRun part_a;
    EvalRun part_b;
    for (std::size_t i = 0; i < shuffled.scores.size(); ++i) {
        (i % 2 ? part_a : part_b).scores.push_back(shuffled.scores[i]);
    }
    part_a.merge(std::move(part_b));
    const auto rm = aggregate(part_a);
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        REQUIRE(rm.cells[i].means == r.cells[i].means);
    }
}

TEST_CASE("pairwise sum is exact on integers and order-defined")
{
    std::vector<double> x(1001);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(i);
    }
    CHECK(pairwise_sum(x) == 500500.0);
    CHECK(pairwise_sum({}) == 0.0);
}

TEST_CASE("csv and markdown carry the same numbers")
{
    EvalRun run;
    run.scores.push_back(score("a", 1, {1.23456, -0.5, 2.0, 0.1}, ActionTag::stop,
                               {{IntersectionType::roundabout, Priority::yield}}));
    run.scores.push_back(score("a", 2, {0.0, 0.5, 1.0, 0.3}, ActionTag::lat_lon));
    const auto r = aggregate(run);
    const auto csv = emit_report(r, ReportFormat::csv);
    const auto md = emit_report(r, ReportFormat::markdown);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        const auto value = line.substr(line.rfind(',') + 1);
        CHECK(md.find(" " + value + " |") != std::string::npos);
    }
    CHECK(md.find("| roundabout/Yield | 1 | 1.2346 |") != std::string::npos);
    CHECK(md.find("| Lat+Lon | 1 |") != std::string::npos);
}

TEST_CASE("eval run JSON round-trips and exclusions CSV")
{
    EvalRun run;
    run.scores.push_back(score("v1", 4, {0.1, 0.2, 0.3, 0.4}, ActionTag::acc,
                               {{IntersectionType::merge, Priority::yield}}));
    run.exclusions.push_back({"v1", 5, ExclusionReason::u_turn});
    const auto back = parse_eval_run(eval_run_json(run));
    REQUIRE(back.scores.size() == 1);
    CHECK(back.scores[0].values == run.scores[0].values);
    CHECK(back.scores[0].tags == run.scores[0].tags);
    CHECK(back.exclusions == run.exclusions);
    std::ostringstream out;
    write_eval_exclusions(out, run.exclusions);
    CHECK(out.str() == "video_id,frame,reason\nv1,5,u_turn\n");
    CHECK_ERRC(parse_report_format("html"), Errc::UnknownEnum);
}
