#include <chrono>
#include <cstdio>

#include "pilotmz/ensemble.hpp"
#include "pilotmz/scenario.hpp"

using namespace pilotmz;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

bool identical(const std::vector<TrajectoryRecord>& a,
               const std::vector<TrajectoryRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].q_final.r.x != b[i].q_final.r.x) return false;
        if (a[i].q_final.r.y != b[i].q_final.r.y) return false;
        if (a[i].q_final.pointer_y != b[i].q_final.pointer_y) return false;
        if (a[i].t_hit != b[i].t_hit) return false;
        if (a[i].detector != b[i].detector) return false;
        if (a[i].flag != b[i].flag) return false;
    }
    return true;
}

} // namespace

int main() {
    ScenarioSpec spec;
    spec.n = 2000;
    spec.seed = 7;
    const Scenario scen = build_scenario(spec);
    const BranchTimeline tl = build_timeline(scen.layout, scen.marker);

    EnsembleParams par;
    par.n = spec.n;
    par.seed = spec.seed;

    auto t0 = std::chrono::steady_clock::now();
    const auto serial = run_ensemble_serial(scen.layout, tl, scen.marker, par);
    const double t_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel = run_ensemble(scen.layout, tl, scen.marker, par);
    const double t_parallel = seconds_since(t0);

    std::printf("trajectories        %d\n", par.n);
    std::printf("serial              %.3f s  (%.3f ms each)\n", t_serial,
                1e3 * t_serial / par.n);
    std::printf("parallel            %.3f s  (%.3f ms each)\n", t_parallel,
                1e3 * t_parallel / par.n);
    std::printf("speedup             %.2fx\n", t_serial / t_parallel);
    const bool same = identical(serial, parallel);
    std::printf("bit-identical       %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}
