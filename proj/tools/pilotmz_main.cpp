#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pilotmz/config.hpp"
#include "pilotmz/oracle.hpp"
#include "pilotmz/report.hpp"
#include "pilotmz/svgplot.hpp"

using namespace pilotmz;

namespace {

struct Overrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> n;
    std::optional<std::string> emit;
};

void apply_overrides(RunConfig& cfg, const Overrides& ov) {
    if (ov.out_dir) {
        if (ov.out_dir->empty())
            throw std::invalid_argument("--out: directory must not be empty");
        cfg.out_dir = *ov.out_dir;
    }
    if (ov.seed) cfg.spec.seed = *ov.seed;
    if (ov.n) {
        if (*ov.n < 1) throw std::invalid_argument("--n: must be positive");
        cfg.spec.n = *ov.n;
    }
    if (ov.emit) {
        // Reuse the config grammar so the flag and the file reject the same
        // inputs.
        const RunConfig parsed = parse_config("output.emit = " + *ov.emit + "\n");
        cfg.emit_trajectories = parsed.emit_trajectories;
        cfg.emit_fields = parsed.emit_fields;
        cfg.emit_svg = parsed.emit_svg;
    }
}

RunConfig load_or_config_error(const std::string& path) {
    try {
        return load_config_file(path);
    } catch (const std::runtime_error& e) {
        throw std::invalid_argument(e.what());
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("short write on " + path.string());
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

/// Runs one configured ensemble and writes the selected outputs into dir.
/// Returns the report so sweeps can aggregate.
RunReport run_into(const RunConfig& cfg, const std::filesystem::path& dir,
                   bool echo_stdout) {
    const Scenario scen = build_scenario(cfg.spec);
    RunOptions opt;
    opt.serial = cfg.serial;
    if (cfg.emit_trajectories || cfg.emit_svg)
        opt.keep_sample_count = std::min(cfg.spec.n, 200);
    const RunReport rep = run_scenario(scen, opt);

    std::filesystem::create_directories(dir);
    const std::string report = render_report(cfg, rep);
    write_file(dir / "report.txt", report);
    if (echo_stdout) std::cout << report;
    if (cfg.emit_trajectories)
        write_file(dir / "trajectories.csv",
                   render_trajectories_csv(scen.marker, rep.records));
    if (cfg.emit_fields) {
        const BranchTimeline tl = build_timeline(scen.layout, scen.marker);
        write_file(dir / "fields.csv",
                   render_fields_csv(scen.layout, tl, scen.marker,
                                     cfg.spec.fields_time));
    }
    if (cfg.emit_svg) write_file(dir / "plot.svg", render_svg(scen, rep.records));
    return rep;
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
    RunConfig cfg = load_or_config_error(config_path);
    apply_overrides(cfg, ov);
    const RunReport rep = run_into(cfg, cfg.out_dir, true);
    if (!rep.flag_budget_ok()) {
        std::cerr << "node-flag budget exceeded: " << rep.flagged << " of "
                  << rep.records.size() << " trajectories flagged\n";
        return 2;
    }
    return 0;
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> values;
    std::string item;
    std::stringstream ss(list);
    while (std::getline(ss, item, ',')) {
        const std::size_t a = item.find_first_not_of(" \t");
        if (a == std::string::npos)
            throw std::invalid_argument("--values: empty entry");
        const std::size_t b = item.find_last_not_of(" \t");
        item = item.substr(a, b - a + 1);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end != item.c_str() + item.size() || errno == ERANGE)
            throw std::invalid_argument("--values: not a number: " + item);
        values.push_back(v);
    }
    if (values.empty()) throw std::invalid_argument("--values: empty list");
    return values;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_list, const Overrides& ov) {
    RunConfig base = load_or_config_error(config_path);
    apply_overrides(base, ov);
    const std::vector<double> values = parse_values(values_list);

    std::vector<RunConfig> cfgs;
    for (double v : values) {
        RunConfig cfg = base;
        if (param == "a2") {
            cfg.spec.name = ScenarioName::essw_spin;
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("--values: a2 must lie in [0, 1]");
            cfg.spec.efficiency_sq = v;
        } else {
            cfg.spec.name = ScenarioName::wheeler_delayed;
            cfg.spec.t_c = v;
        }
        build_scenario(cfg.spec); // validate every point before any output
        cfgs.push_back(cfg);
    }

    const std::filesystem::path out_root = base.out_dir;
    std::string csv = "value,p_d1,p_d2,straight_fraction_ch1,straight_fraction_ch2\n";
    bool budget_ok = true;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        const std::string leaf = param + "_" + fmt_short(values[i]);
        const RunReport rep = run_into(cfgs[i], out_root / leaf, false);
        budget_ok = budget_ok && rep.flag_budget_ok();
        const ChannelTally& c1 = rep.channels[1];
        const ChannelTally& c2 = rep.channels[2];
        csv += fmt17(values[i]) + "," + fmt17(rep.probability("D1")) + "," +
               fmt17(rep.probability("D2")) + "," +
               fmt17(c1.total > 0 ? static_cast<double>(c1.straight) / c1.total
                                  : 0.0) +
               "," +
               fmt17(c2.total > 0 ? static_cast<double>(c2.straight) / c2.total
                                  : 0.0) +
               "\n";
        std::cerr << "sweep " << param << " = " << values[i] << " done\n";
    }
    write_file(out_root / "sweep.csv", csv);
    std::cout << csv;
    if (!budget_ok) {
        std::cerr << "node-flag budget exceeded in at least one sweep point\n";
        return 2;
    }
    return 0;
}

struct CheckRow {
    std::string name;
    std::string value;
    std::string limit;
    bool ok;
};

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

int cmd_validate(int equiv_n) {
    std::vector<CheckRow> rows;
    auto add = [&](const std::string& name, double value, double limit) {
        rows.push_back({name, fmt6(value), "< " + fmt6(limit), value < limit});
    };
    auto add_min = [&](const std::string& name, double value, double floor) {
        rows.push_back({name, fmt6(value), "> " + fmt6(floor), value > floor});
    };
    auto add_bool = [&](const std::string& name, bool ok) {
        rows.push_back({name, ok ? "yes" : "no", "yes", ok});
    };

    ScenarioSpec open_spec;
    const Scenario open = build_scenario(open_spec);
    const BranchTimeline open_tl = build_timeline(open.layout, open.marker);

    std::cerr << "validate: finite-difference checks\n";
    const FdErrors fd = fd_check(open.layout, open_tl, open.marker, 0.24, 100, 2026);
    add("fd_gradient", fd.gradient, 1e-6);
    add("fd_laplacian", fd.laplacian, 1e-5);
    add("fd_velocity", fd.velocity, 1e-5);
    add("fd_qpot", fd.qpot, 1e-5);

    std::cerr << "validate: Born route consistency\n";
    std::vector<ScenarioSpec> specs;
    for (double a2 : {1.0, 0.5, 0.25}) {
        ScenarioSpec s;
        s.name = ScenarioName::essw_spin;
        s.efficiency_sq = a2;
        specs.push_back(s);
    }
    {
        ScenarioSpec s;
        specs.push_back(s); // wheeler_open
        s.name = ScenarioName::wheeler_closed;
        specs.push_back(s);
        s.name = ScenarioName::av_pointer;
        specs.push_back(s);
        s.name = ScenarioName::wheeler_delayed;
        s.t_c = 0.18;
        s.direction = ScheduleDirection::insert;
        specs.push_back(s);
        s.direction = ScheduleDirection::remove;
        specs.push_back(s);
    }
    double born_delta = 0.0;
    for (const auto& s : specs) {
        const Scenario scen = build_scenario(s);
        const BranchTimeline tl = build_timeline(scen.layout, scen.marker);
        for (const char* det : {"D1", "D2"}) {
            const double alg = algebra_probability(tl, det);
            const double quad =
                quadrature_probability(scen.layout, tl, det, 30.0 / s.speed);
            born_delta = std::max(born_delta, std::abs(alg - quad));
        }
    }
    add("born_consistency", born_delta, 1e-4);

    std::cerr << "validate: quadrature convergence\n";
    double conv = quadrature_convergence(open, "D1");
    {
        ScenarioSpec s;
        s.name = ScenarioName::essw_spin;
        s.efficiency_sq = 0.5;
        conv = std::max(conv, quadrature_convergence(build_scenario(s), "D2"));
    }
    add("quadrature_convergence", conv, 1e-5);

    std::cerr << "validate: equivariance, n = " << equiv_n << "\n";
    {
        ScenarioSpec s;
        s.n = equiv_n;
        s.seed = 424242;
        const Scenario scen = build_scenario(s);
        const auto axes = standard_equivariance_axes();
        RunOptions opt;
        for (const auto& ax : axes) opt.checkpoint_times.push_back(ax.t);
        const RunReport rep = run_scenario(scen, opt);
        const char* names[] = {"equivariance_source", "equivariance_midarm",
                               "equivariance_recombiner"};
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const EquivResult res = equivariance_test(
                open_tl, rep.records, i, axes[i].t, axes[i].origin, axes[i].axis);
            add(names[i], res.chi2, kChi2Dof19At99);
        }
    }

    std::cerr << "validate: delayed-choice prefix\n";
    {
        ScenarioSpec ins;
        ins.name = ScenarioName::wheeler_delayed;
        ins.direction = ScheduleDirection::insert;
        ins.t_c = 0.18;
        ins.n = 200;
        ins.seed = 17;
        ScenarioSpec rem = ins;
        rem.direction = ScheduleDirection::remove;
        RunOptions opt;
        opt.keep_sample_count = 200;
        opt.sample_dt = 0.01;
        const Scenario si = build_scenario(ins);
        const Scenario sr = build_scenario(rem);
        const RunReport ri = run_scenario(si, opt);
        const RunReport rr = run_scenario(sr, opt);
        const double t_star = std::min(
            overlap_entry_time(si.layout, build_timeline(si.layout, si.marker)),
            overlap_entry_time(sr.layout, build_timeline(sr.layout, sr.marker)));
        add("delayed_prefix", prefix_deviation(ri.records, rr.records, t_star),
            1e-8);
    }

    std::cerr << "validate: non-crossing\n";
    {
        ScenarioSpec s;
        s.n = 400;
        s.seed = 23;
        RunOptions opt;
        opt.keep_sample_count = 400;
        const RunReport rep = run_scenario(build_scenario(s), opt);
        add_min("non_crossing", min_pairwise_separation(rep.records), 0.0);
    }

    std::cerr << "validate: phase convention fault hook\n";
    add_bool("phase_convention_fault", check_phase_convention(Cplx(0, 1)).pass &&
                                           !check_phase_convention(Cplx(0, -1)).pass);

    std::cerr << "validate: tolerance robustness\n";
    add_bool("tolerance_robustness", tolerance_robustness(200, 11));

    bool all_ok = true;
    std::printf("%-26s %13s %13s   %s\n", "check", "value", "limit", "result");
    for (const auto& row : rows) {
        all_ok = all_ok && row.ok;
        std::printf("%-26s %13s %13s   %s\n", row.name.c_str(), row.value.c_str(),
                    row.limit.c_str(), row.ok ? "PASS" : "FAIL");
    }
    std::fflush(stdout);
    return all_ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bohmian trajectory simulator for a Mach-Zehnder"
                 " interferometer with which-way markers"};
    app.require_subcommand(1);

    std::string config_path;
    std::string param;
    std::string values_list;
    std::string out_dir;
    std::string emit_list;
    std::uint64_t seed = 0;
    int n_override = 0;
    int equiv_n = 10000;

    CLI::App* run = app.add_subcommand("run", "run one configured ensemble");
    run->add_option("--config", config_path, "configuration file")->required();
    CLI::Option* run_out = run->add_option("--out", out_dir, "output directory");
    CLI::Option* run_seed = run->add_option("--seed", seed, "seed override");
    CLI::Option* run_n = run->add_option("--n", n_override, "ensemble size override");
    CLI::Option* run_emit =
        run->add_option("--emit", emit_list, "extra outputs: trajectories,fields,svg");

    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("--config", config_path, "configuration file")->required();
    sweep->add_option("--param", param, "swept parameter")
        ->required()
        ->check(CLI::IsMember({"a2", "t_c"}));
    sweep->add_option("--values", values_list, "comma-separated values")->required();
    CLI::Option* sweep_out = sweep->add_option("--out", out_dir, "output directory");
    CLI::Option* sweep_seed = sweep->add_option("--seed", seed, "seed override");
    CLI::Option* sweep_n =
        sweep->add_option("--n", n_override, "ensemble size override");

    CLI::App* validate =
        app.add_subcommand("validate", "run the verification suite");
    validate->add_option("--n", equiv_n, "equivariance ensemble size")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            Overrides ov;
            if (*run_out) ov.out_dir = out_dir;
            if (*run_seed) ov.seed = seed;
            if (*run_n) ov.n = n_override;
            if (*run_emit) ov.emit = emit_list;
            return cmd_run(config_path, ov);
        }
        if (sweep->parsed()) {
            Overrides ov;
            if (*sweep_out) ov.out_dir = out_dir;
            if (*sweep_seed) ov.seed = seed;
            if (*sweep_n) ov.n = n_override;
            return cmd_sweep(config_path, param, values_list, ov);
        }
        return cmd_validate(equiv_n);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
}
