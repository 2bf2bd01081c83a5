#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pilotmz/scenario.hpp"

using namespace pilotmz;

namespace {

const Element* find_element(const Layout& lay, const std::string& label) {
    for (const auto& e : lay.elements)
        if (e.label == label) return &e;
    return nullptr;
}

ScenarioSpec small_spec(ScenarioName name, int n, std::uint64_t seed) {
    ScenarioSpec spec;
    spec.name = name;
    spec.n = n;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST_CASE("scenario names round trip") {
    for (ScenarioName n : {ScenarioName::wheeler_open, ScenarioName::wheeler_closed,
                           ScenarioName::wheeler_delayed, ScenarioName::essw_spin,
                           ScenarioName::av_pointer}) {
        ScenarioName parsed;
        REQUIRE(parse_scenario_name(scenario_name_string(n), parsed));
        CHECK(parsed == n);
    }
    ScenarioName parsed;
    CHECK_FALSE(parse_scenario_name("wheeler", parsed));
    CHECK_FALSE(parse_scenario_name("", parsed));
}

TEST_CASE("presets wire the square interferometer") {
    const Scenario scen = build_scenario(small_spec(ScenarioName::wheeler_open, 10, 1));
    const Layout& lay = scen.layout;

    CHECK(lay.source.center0.x == 0.0);
    CHECK(lay.source.center0.y == -4.0);
    CHECK(lay.source.wavevector.y == 100.0);
    CHECK(lay.t_end == doctest::Approx(0.45));
    CHECK(lay.overlap_radius == 4.0);
    CHECK(lay.detector_radius == 2.0);

    const Element* bs2 = find_element(lay, "BS2");
    REQUIRE(bs2 != nullptr);
    CHECK(bs2->position.x == 10.0);
    CHECK(bs2->position.y == 10.0);
    CHECK_FALSE(bs2->active_at(0.24));

    const Element* d1 = find_element(lay, "D1");
    const Element* d2 = find_element(lay, "D2");
    REQUIRE(d1 != nullptr);
    REQUIRE(d2 != nullptr);
    CHECK(d1->position.y == 22.0);
    CHECK(d2->position.x == 22.0);
    CHECK(scen.marker.kind == MarkerKind::none);
}

TEST_CASE("presets select schedule and marker") {
    const Scenario closed =
        build_scenario(small_spec(ScenarioName::wheeler_closed, 10, 1));
    CHECK(find_element(closed.layout, "BS2")->active_at(0.24));

    ScenarioSpec del = small_spec(ScenarioName::wheeler_delayed, 10, 1);
    del.t_c = 0.18;
    del.direction = ScheduleDirection::insert;
    const Scenario ins = build_scenario(del);
    CHECK_FALSE(find_element(ins.layout, "BS2")->active_at(0.17));
    CHECK(find_element(ins.layout, "BS2")->active_at(0.24));

    del.direction = ScheduleDirection::remove;
    const Scenario rem = build_scenario(del);
    CHECK(find_element(rem.layout, "BS2")->active_at(0.17));
    CHECK_FALSE(find_element(rem.layout, "BS2")->active_at(0.24));

    ScenarioSpec essw = small_spec(ScenarioName::essw_spin, 10, 1);
    essw.efficiency_sq = 0.36;
    const Scenario marked = build_scenario(essw);
    CHECK(marked.marker.kind == MarkerKind::discrete);
    CHECK(marked.marker.efficiency_sq == 0.36);

    ScenarioSpec av = small_spec(ScenarioName::av_pointer, 10, 1);
    av.ejection_speed = 500.0;
    const Scenario pointer = build_scenario(av);
    CHECK(pointer.marker.kind == MarkerKind::pointer);
    CHECK(pointer.marker.ejection_speed == 500.0);
}

TEST_CASE("switch time on the arrival instant is rejected") {
    ScenarioSpec del = small_spec(ScenarioName::wheeler_delayed, 10, 1);
    del.t_c = 0.24;
    CHECK_THROWS_AS(build_scenario(del), std::invalid_argument);
    del.t_c = 0.24 + 5e-10;
    CHECK_THROWS_AS(build_scenario(del), std::invalid_argument);
    del.t_c = 0.25;
    CHECK_NOTHROW(build_scenario(del));

    ScenarioSpec bad = small_spec(ScenarioName::wheeler_open, 0, 1);
    CHECK_THROWS_AS(build_scenario(bad), std::invalid_argument);
    bad = small_spec(ScenarioName::essw_spin, 10, 1);
    bad.efficiency_sq = 1.5;
    CHECK_THROWS_AS(build_scenario(bad), std::invalid_argument);
}

TEST_CASE("ballistic continuation maps channels to their own detectors") {
    const Scenario scen = build_scenario(small_spec(ScenarioName::wheeler_open, 10, 1));
    const BranchTimeline tl = build_timeline(scen.layout, scen.marker);
    CHECK(ballistic_detector(scen.layout, tl, 1) == "D1");
    CHECK(ballistic_detector(scen.layout, tl, 2) == "D2");

    const Scenario closed =
        build_scenario(small_spec(ScenarioName::wheeler_closed, 10, 1));
    const BranchTimeline tlc = build_timeline(closed.layout, closed.marker);
    CHECK(ballistic_detector(closed.layout, tlc, 1) == "D1");
    CHECK(ballistic_detector(closed.layout, tlc, 2) == "D2");
}

TEST_CASE("open run swaps every trajectory without crossing") {
    const Scenario scen = build_scenario(small_spec(ScenarioName::wheeler_open, 60, 3));
    const RunReport rep = run_scenario(scen);

    CHECK(rep.records.size() == 60);
    CHECK(rep.flagged == 0);
    CHECK(rep.crossing_count == 0);
    const int classified = std::accumulate(rep.port_counts.begin(),
                                           rep.port_counts.end(), 0);
    CHECK(classified == rep.unflagged());
    CHECK(rep.channels[1].total + rep.channels[2].total == rep.unflagged());
    CHECK(rep.channels[1].straight == 0);
    CHECK(rep.channels[2].straight == 0);
    CHECK(rep.channels[1].swapped == rep.channels[1].total);
    CHECK(rep.probability("D1") + rep.probability("D2") == doctest::Approx(1.0));
    CHECK(rep.joints.empty());
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
        CHECK(rep.beables[i] == "-");
        if (rep.records[i].channel == 1)
            CHECK(rep.ports[i] == "D2");
        else
            CHECK(rep.ports[i] == "D1");
    }
    CHECK(rep.flag_budget_ok());
}

TEST_CASE("closed run sends everything to the bright port") {
    const Scenario scen =
        build_scenario(small_spec(ScenarioName::wheeler_closed, 40, 5));
    const RunReport rep = run_scenario(scen);
    CHECK(rep.probability("D1") == doctest::Approx(1.0));
    CHECK(rep.probability("D2") == doctest::Approx(0.0));
}

TEST_CASE("partially marked run routes joints by flip state") {
    ScenarioSpec spec = small_spec(ScenarioName::essw_spin, 120, 11);
    spec.efficiency_sq = 0.36;
    const Scenario scen = build_scenario(spec);
    const RunReport rep = run_scenario(scen);

    REQUIRE(rep.joints.size() == 4);
    int joint_total = 0;
    int d1_down = 0;
    for (const auto& j : rep.joints) {
        joint_total += j.count;
        if (j.detector == "D1" && j.beable == "down") d1_down = j.count;
    }
    CHECK(joint_total == rep.unflagged());
    CHECK(d1_down == 0);

    int down_total = 0;
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
        if (rep.records[i].flag != TrajectoryFlag::clean) continue;
        if (rep.beables[i] == "down") {
            ++down_total;
            CHECK(rep.records[i].channel == 2);
            CHECK(rep.ports[i] == "D2");
            CHECK(rep.crossed[i]);
        } else if (rep.records[i].channel == 2) {
            CHECK(rep.ports[i] == "D1");
        }
    }
    // Flips happen on roughly 36% of channel-2 passages.
    CHECK(down_total > 5);
    CHECK(down_total < 50);
    // Channel 1 splits between the detectors; both must be populated at a^2=0.36.
    CHECK(rep.channels[1].straight > 0);
    CHECK(rep.channels[1].swapped > 0);
}

TEST_CASE("effective port falls back to the ballistic continuation") {
    const Scenario scen = build_scenario(small_spec(ScenarioName::wheeler_open, 1, 1));
    const BranchTimeline tl = build_timeline(scen.layout, scen.marker);

    TrajectoryRecord rec;
    rec.detector = "D2";
    CHECK(effective_port(scen.layout, tl, scen.marker, rec) == "D2");

    rec.detector.clear();
    rec.channel = 1;
    rec.q_final.r = {10.4, 19.0};
    CHECK(effective_port(scen.layout, tl, scen.marker, rec) == "D1");
    rec.channel = 2;
    rec.q_final.r = {19.0, 10.4};
    CHECK(effective_port(scen.layout, tl, scen.marker, rec) == "D2");
}

TEST_CASE("identical runs have zero prefix deviation") {
    ScenarioSpec spec = small_spec(ScenarioName::wheeler_open, 8, 21);
    const Scenario scen = build_scenario(spec);
    RunOptions opt;
    opt.keep_sample_count = 8;
    const RunReport a = run_scenario(scen, opt);
    const RunReport b = run_scenario(scen, opt);
    REQUIRE(a.records[0].samples.size() > 10);
    CHECK(prefix_deviation(a.records, b.records, 0.45) == 0.0);

    spec.seed = 22;
    const RunReport c = run_scenario(build_scenario(spec), opt);
    CHECK(prefix_deviation(a.records, c.records, 0.45) > 0.0);
}

TEST_CASE("overlap entry time sits just after the mirrors") {
    const Scenario scen = build_scenario(small_spec(ScenarioName::wheeler_open, 1, 1));
    const BranchTimeline tl = build_timeline(scen.layout, scen.marker);
    const double t_star = overlap_entry_time(scen.layout, tl);
    CHECK(t_star > 0.148);
    CHECK(t_star < 0.151);
}
