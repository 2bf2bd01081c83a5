#pragma once

#include <cstdint>
#include <vector>

#include "pilotmz/pilotwave.hpp"

namespace pilotmz {

struct EnsembleParams {
    int n = 1000;
    std::uint64_t seed = 1;
    IntegratorParams integrator;
    std::vector<double> checkpoint_times;
    int keep_sample_count = 0; // dense samples kept for ids below this
};

/// Runs n independent trajectories, one random stream per trajectory id, so
/// the result is identical whichever order they execute in.
std::vector<TrajectoryRecord> run_ensemble_serial(const Layout& layout,
                                                  const BranchTimeline& tl,
                                                  const MarkerModel& marker,
                                                  const EnsembleParams& par);

/// Same ensemble over all available threads; records land in id order and
/// match the serial runner bit for bit.
std::vector<TrajectoryRecord> run_ensemble(const Layout& layout,
                                           const BranchTimeline& tl,
                                           const MarkerModel& marker,
                                           const EnsembleParams& par);

} // namespace pilotmz
