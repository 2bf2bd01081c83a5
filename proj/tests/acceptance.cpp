// Acceptance suite: eight end-to-end criteria, one [PASS]/[FAIL] line each.
// Exits 0 only if every criterion holds.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pilotmz/oracle.hpp"
#include "pilotmz/scenario.hpp"

using namespace pilotmz;

namespace {

struct Criterion {
    bool ok = true;
    std::vector<std::string> notes;

    void check(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes.push_back(what);
        }
    }
};

int g_failures = 0;

void report(int index, const char* title, const Criterion& c) {
    std::printf("[%s] %d. %s\n", c.ok ? "PASS" : "FAIL", index, title);
    std::fflush(stdout);
    if (!c.ok) {
        ++g_failures;
        for (const auto& note : c.notes)
            std::fprintf(stderr, "    %d: %s\n", index, note.c_str());
    }
}

void progress(const char* what) {
    std::fprintf(stderr, "... %s\n", what);
    std::fflush(stderr);
}

RunReport run(const ScenarioSpec& spec, const RunOptions& opt = {}) {
    return run_scenario(build_scenario(spec), opt);
}

long port_count(const RunReport& rep, const std::string& det) {
    for (std::size_t i = 0; i < rep.detector_labels.size(); ++i)
        if (rep.detector_labels[i] == det) return rep.port_counts[i];
    return 0;
}

long joint(const RunReport& rep, const std::string& det, const std::string& beable) {
    for (const auto& j : rep.joints)
        if (j.detector == det && j.beable == beable) return j.count;
    return 0;
}

bool two_proportion_3sigma(double p1, long n1, double p2, long n2) {
    const double pooled = (p1 * n1 + p2 * n2) / static_cast<double>(n1 + n2);
    const double var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
    return std::abs(p1 - p2) <= 3.0 * std::sqrt(var) + 1e-12;
}

bool binomial_3sigma(double p_hat, long n, double p) {
    return std::abs(p_hat - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n) + 1e-12;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool read_all(const std::filesystem::path& p, std::string& out) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

constexpr int kN = 10000;

} // namespace

int main() {
    progress("closed ensemble");
    ScenarioSpec closed_spec;
    closed_spec.name = ScenarioName::wheeler_closed;
    closed_spec.n = kN;
    closed_spec.seed = 101;
    const Scenario closed_scen = build_scenario(closed_spec);
    const RunReport closed = run_scenario(closed_scen);

    progress("open ensemble with checkpoints and kept samples");
    ScenarioSpec open_spec;
    open_spec.n = kN;
    open_spec.seed = 202;
    RunOptions open_opt;
    for (const auto& ax : standard_equivariance_axes())
        open_opt.checkpoint_times.push_back(ax.t);
    open_opt.keep_sample_count = 1000;
    const Scenario open_scen = build_scenario(open_spec);
    const RunReport open = run_scenario(open_scen, open_opt);

    progress("perfect-marker ensemble");
    ScenarioSpec essw1_spec;
    essw1_spec.name = ScenarioName::essw_spin;
    essw1_spec.efficiency_sq = 1.0;
    essw1_spec.n = kN;
    essw1_spec.seed = 404;
    const RunReport essw1 = run(essw1_spec);

    // 1. Closed interferometer: exact bright-port algebra, and the ensemble
    //    reaches D1 except for node-flagged stragglers within the 1% budget.
    {
        Criterion c;
        const BranchTimeline tl =
            build_timeline(closed_scen.layout, closed_scen.marker);
        c.check(std::abs(algebra_probability(tl, "D1") - 1.0) < 1e-12,
                "P(D1) algebra deviates from 1");
        c.check(std::abs(algebra_probability(tl, "D2")) < 1e-12,
                "P(D2) algebra deviates from 0");
        bool found_terminal = false;
        for (const Branch* b : tl.alive(0.30))
            if (b->terminal_detector == "D1") {
                found_terminal = true;
                c.check(std::abs(b->coefficient - Cplx(-1.0, 0.0)) < 1e-12,
                        "merged D1 coefficient is not -1");
            }
        c.check(found_terminal, "no terminal D1 branch after the merge");

        c.check(port_count(closed, "D1") == closed.unflagged(),
                "an unflagged trajectory missed D1");
        c.check(closed.unflagged() >= kN - 10,
                "fewer than 9990 of 10000 reached D1: " +
                    std::to_string(closed.unflagged()));
        c.check(closed.flagged <= kN / 100,
                "node-flag budget exceeded: " + std::to_string(closed.flagged));
        int odd_flags = 0;
        for (const auto& r : closed.records)
            if (r.flag != TrajectoryFlag::clean &&
                r.flag != TrajectoryFlag::node_proximity)
                ++odd_flags;
        c.check(odd_flags == 0, "unexpected flag kind on a record");
        report(1, "closed recombiner routes the whole ensemble to D1", c);
    }

    // 2. Open interferometer: both ports at the Born rate, every unflagged
    //    trajectory swaps ports, and no two paths ever intersect.
    {
        Criterion c;
        c.check(binomial_3sigma(open.probability("D1"), open.unflagged(), 0.5),
                "P(D1) = " + fmt(open.probability("D1")) + " is off 0.5");
        c.check(binomial_3sigma(open.probability("D2"), open.unflagged(), 0.5),
                "P(D2) = " + fmt(open.probability("D2")) + " is off 0.5");
        for (int ch : {1, 2})
            c.check(open.channels[ch].swapped == open.channels[ch].total,
                    "channel " + std::to_string(ch) + " has non-swapped records");
        c.check(open.crossing_count == 0,
                "a trajectory crossed the symmetry axis");
        progress("pairwise separation on the sampled subset");
        const double gap = min_pairwise_separation(open.records);
        c.check(gap > 0.0, "trajectory paths intersect; min gap " + fmt(gap));
        report(2, "open recombiner swaps ports without crossings at Born rates", c);
    }

    // 3. Perfect marker: trajectories go straight through, and detector
    //    clicks pair up exactly with the marker outcome.
    {
        Criterion c;
        for (int ch : {1, 2})
            c.check(essw1.channels[ch].straight == essw1.channels[ch].total,
                    "channel " + std::to_string(ch) + " has non-straight records");
        c.check(joint(essw1, "D2", "down") == essw1.channels[2].total,
                "(D2, down) does not cover channel 2");
        c.check(joint(essw1, "D1", "up") == essw1.channels[1].total,
                "(D1, up) does not cover channel 1");
        c.check(joint(essw1, "D2", "up") == 0, "(D2, up) is populated");
        c.check(joint(essw1, "D1", "down") == 0, "(D1, down) is populated");
        // Straight-through routing crosses the symmetry axis. Trajectories
        // riding a far transverse tail can clip the edge of the overlap disk
        // and evade the in-disk crossing counter, so the bound is statistical.
        c.check(essw1.crossing_count >= essw1.unflagged() * 99 / 100,
                "fewer than 99% of trajectories cross the axis");
        report(3, "perfect marker restores straight-through routing", c);
    }

    // 4. Partial marker: flipped records ride channel 2 to D2, unflipped
    //    channel 2 records bounce to D1, and channel 1 splits at the marked
    //    rate. The endpoints reproduce the open and perfect-marker behavior.
    {
        Criterion c;
        int seed_step = 0;
        for (double a2 : {0.25, 0.5, 0.75}) {
            progress(("partial marker ensemble, a2 = " + fmt(a2)).c_str());
            ScenarioSpec spec;
            spec.name = ScenarioName::essw_spin;
            spec.efficiency_sq = a2;
            spec.n = kN;
            spec.seed = 505 + seed_step++;
            const RunReport rep = run(spec);
            bool down_ok = true, ch2_up_ok = true;
            long ch1_total = 0, ch1_d1 = 0;
            for (std::size_t i = 0; i < rep.records.size(); ++i) {
                if (rep.ports[i].empty()) continue;
                const int ch = rep.records[i].channel;
                if (rep.beables[i] == "down")
                    down_ok = down_ok && ch == 2 && rep.ports[i] == "D2";
                else if (ch == 2)
                    ch2_up_ok = ch2_up_ok && rep.ports[i] == "D1";
                if (ch == 1) {
                    ++ch1_total;
                    if (rep.ports[i] == "D1") ++ch1_d1;
                }
            }
            const std::string tag = "a2 = " + fmt(a2) + ": ";
            c.check(down_ok, tag + "a flipped record left channel 2 or missed D2");
            c.check(ch2_up_ok, tag + "an unflipped channel 2 record missed D1");
            c.check(ch1_total > 0, tag + "channel 1 is empty");
            c.check(binomial_3sigma(static_cast<double>(ch1_d1) / ch1_total,
                                    ch1_total, a2),
                    tag + "channel 1 D1 fraction " +
                        fmt(static_cast<double>(ch1_d1) / ch1_total) +
                        " is off the marked rate");
        }
        progress("marker-off ensemble, a2 = 0");
        ScenarioSpec off_spec;
        off_spec.name = ScenarioName::essw_spin;
        off_spec.efficiency_sq = 0.0;
        off_spec.n = kN;
        off_spec.seed = 508;
        const RunReport off = run(off_spec);
        for (int ch : {1, 2})
            c.check(off.channels[ch].swapped == off.channels[ch].total,
                    "a2 = 0: channel " + std::to_string(ch) + " fails to swap");
        c.check(off.crossing_count == 0, "a2 = 0: a trajectory crossed the axis");
        c.check(binomial_3sigma(off.probability("D1"), off.unflagged(), 0.5),
                "a2 = 0: P(D1) = " + fmt(off.probability("D1")) + " is off 0.5");
        for (int ch : {1, 2})
            c.check(essw1.channels[ch].straight == essw1.channels[ch].total,
                    "a2 = 1: channel " + std::to_string(ch) + " is not straight");
        report(4, "partial marker routes by label and splits channel 1 at the marked rate", c);
    }

    // 5. Delayed choice: all schedules share a bit-identical prefix before
    //    the packets reach the recombination region, and the aggregate
    //    statistics depend only on the configuration in place at arrival.
    {
        Criterion c;
        progress("schedule prefix ensembles");
        std::vector<ScenarioSpec> specs(4);
        specs[0].name = ScenarioName::wheeler_open;
        specs[1].name = ScenarioName::wheeler_closed;
        specs[2].name = ScenarioName::wheeler_delayed;
        specs[2].direction = ScheduleDirection::insert;
        specs[2].t_c = 0.18;
        specs[3] = specs[2];
        specs[3].direction = ScheduleDirection::remove;
        RunOptions popt;
        popt.keep_sample_count = 500;
        popt.sample_dt = 0.01;
        std::vector<RunReport> reps;
        double t_star = 1e300;
        for (auto& s : specs) {
            s.n = 500;
            s.seed = 303;
            const Scenario scen = build_scenario(s);
            t_star = std::min(
                t_star,
                overlap_entry_time(scen.layout,
                                   build_timeline(scen.layout, scen.marker)));
            reps.push_back(run_scenario(scen, popt));
        }
        double max_dev = 0.0;
        for (std::size_t i = 0; i < reps.size(); ++i)
            for (std::size_t j = i + 1; j < reps.size(); ++j)
                max_dev = std::max(
                    max_dev, prefix_deviation(reps[i].records, reps[j].records,
                                              t_star));
        c.check(max_dev < 1e-8,
                "prefix deviation before overlap entry: " + fmt(max_dev));

        progress("delayed insert ensemble");
        ScenarioSpec ins;
        ins.name = ScenarioName::wheeler_delayed;
        ins.direction = ScheduleDirection::insert;
        ins.t_c = 0.18;
        ins.n = kN;
        ins.seed = 606;
        const RunReport rep_ins = run(ins);
        progress("delayed remove ensemble");
        ScenarioSpec rem = ins;
        rem.direction = ScheduleDirection::remove;
        rem.seed = 607;
        const RunReport rep_rem = run(rem);
        c.check(two_proportion_3sigma(rep_ins.probability("D1"),
                                      rep_ins.unflagged(),
                                      closed.probability("D1"),
                                      closed.unflagged()),
                "insert-before-arrival P(D1) = " + fmt(rep_ins.probability("D1")) +
                    " does not match the closed run");
        c.check(two_proportion_3sigma(rep_rem.probability("D1"),
                                      rep_rem.unflagged(),
                                      open.probability("D1"), open.unflagged()),
                "remove-before-arrival P(D1) = " + fmt(rep_rem.probability("D1")) +
                    " does not match the open run");
        report(5, "delayed schedule choice leaves the pre-arrival prefix untouched", c);
    }

    // 6. Pointer marker: once the fired and rest states are separated by ten
    //    widths before the packets transit, the statistics match the perfect
    //    discrete marker across a tenfold ejection-speed range.
    {
        Criterion c;
        for (double ej : {150.0, 500.0, 1500.0}) {
            progress(("pointer ensemble, ejection speed " + fmt(ej)).c_str());
            ScenarioSpec spec;
            spec.name = ScenarioName::av_pointer;
            spec.ejection_speed = ej;
            spec.n = kN;
            spec.seed = 701 + static_cast<std::uint64_t>(ej);
            const Scenario scen = build_scenario(spec);
            const BranchTimeline tl = build_timeline(scen.layout, scen.marker);
            const std::string tag = "ejection speed " + fmt(ej) + ": ";
            c.check(tl.pointer.has_value(), tag + "no pointer pair on the timeline");
            if (tl.pointer) {
                const double t_arr = 24.0 / spec.speed;
                const double width = std::max(tl.pointer->rest.sigma(t_arr),
                                              tl.pointer->fired.sigma(t_arr));
                c.check(tl.pointer->separation(t_arr) >= 10.0 * width,
                        tag + "pointer states not separated by 10 widths at arrival");
            }
            const RunReport rep = run_scenario(scen);
            for (int ch : {1, 2})
                c.check(rep.channels[ch].straight == rep.channels[ch].total,
                        tag + "channel " + std::to_string(ch) + " is not straight");
            bool paired = true;
            for (std::size_t i = 0; i < rep.records.size(); ++i) {
                if (rep.ports[i].empty()) continue;
                const int ch = rep.records[i].channel;
                if (rep.beables[i] == "excited")
                    paired = paired && ch == 2 && rep.ports[i] == "D2";
                else
                    paired = paired && ch == 1 && rep.ports[i] == "D1";
            }
            c.check(paired, tag + "pointer outcome and port do not pair up");
            c.check(rep.crossing_count >= rep.unflagged() * 99 / 100,
                    tag + "fewer than 99% of trajectories cross the axis");
            c.check(two_proportion_3sigma(rep.probability("D1"), rep.unflagged(),
                                          essw1.probability("D1"),
                                          essw1.unflagged()),
                    tag + "P(D1) = " + fmt(rep.probability("D1")) +
                        " does not match the discrete marker");
        }
        report(6, "pointer marker with separated states matches the discrete marker", c);
    }

    // 7. Field consistency: finite-difference spot checks, equivariance at
    //    three stations, and quadrature grid convergence.
    {
        Criterion c;
        progress("finite-difference spot checks");
        const BranchTimeline open_tl =
            build_timeline(open_scen.layout, open_scen.marker);
        const FdErrors fd =
            fd_check(open_scen.layout, open_tl, open_scen.marker, 0.24, 100, 777);
        c.check(fd.gradient < 1e-6, "gradient error " + fmt(fd.gradient));
        c.check(fd.laplacian < 1e-5, "laplacian error " + fmt(fd.laplacian));
        c.check(fd.velocity < 1e-5, "velocity error " + fmt(fd.velocity));
        c.check(fd.qpot < 1e-5, "quantum potential error " + fmt(fd.qpot));
        progress("equivariance at three stations");
        const auto axes = standard_equivariance_axes();
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const EquivResult res =
                equivariance_test(open_tl, open.records, i, axes[i].t,
                                  axes[i].origin, axes[i].axis);
            c.check(res.pass, "station at t = " + fmt(axes[i].t) +
                                  " fails chi-squared: " + fmt(res.chi2));
        }
        progress("quadrature convergence");
        c.check(quadrature_convergence(open_scen, "D1") < 1e-5,
                "open D1 quadrature drifts under grid doubling");
        ScenarioSpec half;
        half.name = ScenarioName::essw_spin;
        half.efficiency_sq = 0.5;
        c.check(quadrature_convergence(build_scenario(half), "D2") < 1e-5,
                "half-marked D2 quadrature drifts under grid doubling");
        report(7, "field derivatives, equivariance, and quadrature hold tolerance", c);
    }

    // 8. Reproducibility: the command-line tool, run twice with the same
    //    configuration and seed, emits byte-identical files.
    {
        Criterion c;
        progress("reproducibility through the command-line tool");
        namespace fs = std::filesystem;
        const fs::path base = fs::temp_directory_path() / "pilotmz_acceptance";
        std::error_code ec;
        fs::remove_all(base, ec);
        fs::create_directories(base);
        const fs::path cfg_path = base / "run.cfg";
        {
            std::ofstream cfg(cfg_path, std::ios::binary);
            cfg << "scenario = essw_spin\n"
                << "marker.efficiency_sq = 0.5\n"
                << "ensemble.n = 400\n"
                << "ensemble.seed = 909\n";
        }
        const std::string cli = PILOTMZ_CLI_PATH;
        bool ran = true;
        for (const char* leaf : {"a", "b"}) {
            const std::string cmd = cli + " run --config " + cfg_path.string() +
                                    " --out " + (base / leaf).string() +
                                    " --emit trajectories,fields,svg" +
                                    " > /dev/null 2>&1";
            ran = ran && std::system(cmd.c_str()) == 0;
        }
        c.check(ran, "a tool invocation failed");
        for (const char* name :
             {"report.txt", "trajectories.csv", "fields.csv", "plot.svg"}) {
            std::string a, b;
            const bool got_a = read_all(base / "a" / name, a);
            const bool got_b = read_all(base / "b" / name, b);
            c.check(got_a && !a.empty(),
                    std::string(name) + " missing from the first run");
            c.check(got_b && a == b, std::string(name) + " differs between runs");
        }
        report(8, "identical configuration and seed reproduce byte-identical outputs", c);
    }

    std::printf("acceptance: %d of 8 criteria passed\n", 8 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
