#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pilotmz/ensemble.hpp"
#include "pilotmz/optics.hpp"

namespace pilotmz {

enum class ScenarioName {
    wheeler_open,
    wheeler_closed,
    wheeler_delayed,
    essw_spin,
    av_pointer
};

enum class ScheduleDirection { insert, remove };

/// Resolved run parameters: the scenario selection plus every overridable
/// number, with the documented defaults filled in.
struct ScenarioSpec {
    ScenarioName name = ScenarioName::wheeler_open;
    double efficiency_sq = 1.0;    // essw_spin flip probability a^2
    double ejection_speed = 150.0; // av_pointer kick speed
    ScheduleDirection direction = ScheduleDirection::insert;
    double t_c = 0.18;             // wheeler_delayed switch time
    int n = 1000;
    std::uint64_t seed = 1;
    double sigma0 = 1.0;
    double mass = 1.0;
    double speed = 100.0;          // beam group speed
    double rtol = 1e-8;
    double atol = 1e-10;
    double fields_time = 0.24;     // sampling time of the field grid output

    bool operator==(const ScenarioSpec&) const = default;
};

/// A fully assembled experiment: square interferometer with 10-unit arms,
/// source 4 units below the input splitter, detectors 12 units past the
/// recombination point on each exit beam.
struct Scenario {
    ScenarioSpec spec;
    Layout layout;
    MarkerModel marker;
};

Scenario build_scenario(const ScenarioSpec& spec);

const char* scenario_name_string(ScenarioName name);
bool parse_scenario_name(const std::string& text, ScenarioName& out);

struct ChannelTally {
    int total = 0;
    int straight = 0;
    int swapped = 0;
};

struct JointCount {
    std::string detector;
    std::string beable;
    int count = 0;
};

/// Classified ensemble outcome. Flagged trajectories are excluded from every
/// tally and probability; ports and classes are empty for them.
struct RunReport {
    ScenarioSpec spec;
    std::vector<TrajectoryRecord> records;
    std::vector<std::string> ports;    // effective detector per record
    std::vector<bool> straight;        // port matches the channel's own beam
    std::vector<bool> crossed;         // u changed sign inside the overlap
    std::vector<std::string> beables;  // outcome string per record
    int flagged = 0;
    int absorbed = 0;
    int crossing_count = 0;
    std::vector<std::string> detector_labels;
    std::vector<int> port_counts;              // aligned with detector_labels
    std::array<ChannelTally, 3> channels{};    // indexed by channel 1 and 2
    std::vector<JointCount> joints;            // detector-major fixed order

    int unflagged() const { return static_cast<int>(records.size()) - flagged; }
    double probability(const std::string& detector) const;
    bool flag_budget_ok() const;  // at most 1% node-flagged
};

struct RunOptions {
    std::vector<double> checkpoint_times;
    int keep_sample_count = 0;
    double sample_dt = 0.002;
    bool serial = false;
};

RunReport run_scenario(const Scenario& scen, const RunOptions& opt = {});

/// Detector reached by continuing the given channel's beam ballistically
/// through the recombination point.
std::string ballistic_detector(const Layout& layout, const BranchTimeline& tl,
                               int channel);

/// Effective port of one record: the absorbing detector when there is one,
/// otherwise the detector nearest the ballistic continuation of the final
/// state (far-tail trajectories can clear the overlap offset enough to slip
/// past the detector disk).
std::string effective_port(const Layout& layout, const BranchTimeline& tl,
                           const MarkerModel& marker,
                           const TrajectoryRecord& rec);

/// Largest configuration distance over matched dense samples earlier than
/// t_cut, taken across record pairs matched by id.
double prefix_deviation(const std::vector<TrajectoryRecord>& a,
                        const std::vector<TrajectoryRecord>& b, double t_cut);

/// Earliest time at which any live packet center comes within
/// overlap_radius + 5 sigma(t) of the recombination point.
double overlap_entry_time(const Layout& layout, const BranchTimeline& tl);

} // namespace pilotmz
