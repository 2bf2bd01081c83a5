#pragma once

#include <string>
#include <vector>

#include "pilotmz/config.hpp"

namespace pilotmz {

/// Run summary in `key = value` form with a stable key order and 17
/// significant digits, so identical runs render identical bytes.
std::string render_report(const RunConfig& cfg, const RunReport& rep);

/// Dense samples of the low-id trajectories that kept them, capped. Columns:
/// trajectory_id,t,x,y[,pointer_y],flag with the pointer column present only
/// under a pointer marker.
std::string render_trajectories_csv(const MarkerModel& marker,
                                    const std::vector<TrajectoryRecord>& records,
                                    int cap = 200);

/// Quantum potential and probability density on a 161x161 grid spanning the
/// overlap region at time t, conditioned on the marker's pre-interaction
/// beable. Nodes render as nan.
std::string render_fields_csv(const Layout& layout, const BranchTimeline& tl,
                              const MarkerModel& marker, double t);

} // namespace pilotmz
