#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pilotmz/marker.hpp"
#include "pilotmz/optics.hpp"
#include "pilotmz/rng.hpp"

namespace pilotmz {

/// Full configuration of one realization: particle position plus the pointer
/// coordinate when the marker model carries one.
struct Configuration {
    Vec2 r;
    std::optional<double> pointer_y;
};

/// Dynamical state of one trajectory between events. During a splitter
/// suppression window the particle is guided by its own daughter branch
/// alone; binding expires once the daughter packets have separated.
struct ParticleState {
    Configuration q;
    MarkerBeable beable;
    int bound_branch = -1;
    double bound_until = -1e300;
    int channel = 0; // output port taken at the first splitter
};

/// Conditional wavefunction at the particle configuration: value, spatial
/// derivatives, and pointer derivatives when that coordinate is engaged.
struct CondEval {
    Cplx psi;
    Cplx ddx;
    Cplx ddy;
    Cplx lap;
    Cplx dp;
    Cplx dpp;
    double scale = 0.0; // largest single-branch peak contribution
    bool pointer_mode = false;
};

/// Branches guiding the particle at time t: the bound branch's alive
/// descendants during a suppression window, otherwise every alive branch
/// whose label is compatible with the beable.
std::vector<const Branch*> guiding_branches(const BranchTimeline& tl,
                                            const ParticleState& s, double t);

CondEval conditional_eval(const BranchTimeline& tl, const MarkerModel& marker,
                          const ParticleState& s, double t);

struct VelocityEval {
    Vec2 v;
    double v_pointer = 0.0;
    double abs_psi = 0.0;
    double scale = 0.0;
};

/// Guidance velocity v = Im(grad psi / psi) / mass, one entry per engaged
/// coordinate.
VelocityEval velocity(const BranchTimeline& tl, const MarkerModel& marker,
                      const ParticleState& s, double t);

/// Quantum potential Q = -(1/2m) lap R / R summed over the interferometer
/// coordinates and the pointer coordinate when engaged, R = |psi|.
double quantum_potential(const BranchTimeline& tl, const MarkerModel& marker,
                         const ParticleState& s, double t);

enum class TrajectoryFlag { clean, node_proximity };

struct SamplePoint {
    double t;
    Configuration q;
};

struct TrajectoryRecord {
    int id = 0;
    Configuration q0;
    Configuration q_final;
    MarkerBeable beable;
    int channel = 0;
    std::string detector; // empty if never absorbed
    double t_hit = 0.0;
    Vec2 r_hit;
    TrajectoryFlag flag = TrajectoryFlag::clean;
    double min_u = 1e300;  // extrema of u inside the overlap disk
    double max_u = -1e300;
    double min_psi_rel = 1e300;
    std::vector<Configuration> checkpoints; // one per requested time
    std::vector<SamplePoint> samples;       // kept only when requested
};

struct IntegratorParams {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_init = 1e-4;
    double h_min = 1e-12;
    double h_max = 0.005;
    double sample_dt = 0.002;
    double node_floor_rel = 1e-12;
    int max_rejections = 10;
};

/// Draws one initial configuration from the source packet density (and the
/// resting pointer packet density when engaged) at the source birth time.
Configuration sample_configuration(const Layout& layout,
                                   const MarkerModel& marker, RandomStream& rng);

/// Integrates one trajectory from the source birth time to t_end or detector
/// absorption, applying splitter transit maps, the marker beable update, and
/// suppression releases at their event times. The stream is consumed only by
/// the marker beable draw.
TrajectoryRecord integrate(const Layout& layout, const BranchTimeline& tl,
                           const MarkerModel& marker, const Configuration& q0,
                           int id, RandomStream& rng,
                           const IntegratorParams& par,
                           const std::vector<double>& checkpoint_times,
                           bool keep_samples);

} // namespace pilotmz
