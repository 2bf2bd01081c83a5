#pragma once

#include <string>
#include <vector>

#include "pilotmz/scenario.hpp"

namespace pilotmz {

/// Self-contained SVG of the interferometer layout with trajectory fans
/// overlaid: splitters and mirrors as diagonal strokes (a splitter that never
/// acts is dashed), detectors as circles, trajectories as polylines colored
/// by channel. Deterministic output for identical inputs.
std::string render_svg(const Scenario& scen,
                       const std::vector<TrajectoryRecord>& records,
                       int cap = 200);

} // namespace pilotmz
