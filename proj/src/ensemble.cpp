#include "pilotmz/ensemble.hpp"

namespace pilotmz {

namespace {

TrajectoryRecord run_one(int id, const Layout& layout, const BranchTimeline& tl,
                         const MarkerModel& marker, const EnsembleParams& par) {
    RandomStream rng(par.seed, static_cast<std::uint64_t>(id));
    const Configuration q0 = sample_configuration(layout, marker, rng);
    return integrate(layout, tl, marker, q0, id, rng, par.integrator,
                     par.checkpoint_times, id < par.keep_sample_count);
}

} // namespace

std::vector<TrajectoryRecord> run_ensemble_serial(const Layout& layout,
                                                  const BranchTimeline& tl,
                                                  const MarkerModel& marker,
                                                  const EnsembleParams& par) {
    std::vector<TrajectoryRecord> out(static_cast<std::size_t>(par.n));
    for (int i = 0; i < par.n; ++i)
        out[static_cast<std::size_t>(i)] = run_one(i, layout, tl, marker, par);
    return out;
}

std::vector<TrajectoryRecord> run_ensemble(const Layout& layout,
                                           const BranchTimeline& tl,
                                           const MarkerModel& marker,
                                           const EnsembleParams& par) {
    std::vector<TrajectoryRecord> out(static_cast<std::size_t>(par.n));
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < par.n; ++i)
        out[static_cast<std::size_t>(i)] = run_one(i, layout, tl, marker, par);
    return out;
}

} // namespace pilotmz
