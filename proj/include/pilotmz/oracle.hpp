#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pilotmz/scenario.hpp"

namespace pilotmz {

/// 99th percentile of the chi-square distribution with 19 degrees of freedom.
constexpr double kChi2Dof19At99 = 36.1908691292701;

struct BornCheck {
    double algebra = 0.0;
    double quadrature = 0.0;
};

/// Detector probability from terminal branch coefficients, summing the
/// squared coherent amplitude within each marker sector.
double algebra_probability(const BranchTimeline& tl, const std::string& detector);

/// The same probability by Simpson quadrature of the sector-summed |Psi|^2
/// over the detector's half of the recombination plane at time t. The grid
/// covers every live packet center plus 8 sigma(t) of margin at the given
/// per-sigma resolution.
double quadrature_probability(const Layout& layout, const BranchTimeline& tl,
                              const std::string& detector, double t,
                              int pts_per_sigma = 16);

/// Computes both routes and throws std::runtime_error when they disagree by
/// more than 1e-4 (a verification-machinery defect, not a physics outcome).
BornCheck born_probability_check(const Layout& layout, const BranchTimeline& tl,
                                 const std::string& detector, double t,
                                 int pts_per_sigma = 16);

/// Cross-checked detector probability for a scenario, evaluated once the
/// exit beams are disjoint. Returns the branch-algebra value.
double born_probability(const Scenario& scen, const std::string& detector);

/// Change in the quadrature value when the grid resolution doubles.
double quadrature_convergence(const Scenario& scen, const std::string& detector);

struct FdErrors {
    double gradient = 0.0;
    double laplacian = 0.0;
    double velocity = 0.0;
    double qpot = 0.0;
};

/// Worst relative finite-difference mismatch of the analytic derivatives on
/// n random non-node points inside the overlap disk at time t: 4th-order
/// stencils, h = 1e-4 for first derivatives on psi and the unwrapped phase,
/// h = 1e-3 for second derivatives on psi and |psi|.
FdErrors fd_check(const Layout& layout, const BranchTimeline& tl,
                  const MarkerModel& marker, double t, int n_points,
                  std::uint64_t seed);

struct EquivResult {
    double chi2 = 0.0;
    int bins = 20;
    bool pass = false;
};

/// Chi-square goodness of fit of checkpointed ensemble positions, projected
/// on the given axis, against the quadrature marginal of the sector-summed
/// |Psi(t)|^2. Twenty equal-probability bins, pass at the 99% level.
EquivResult equivariance_test(const BranchTimeline& tl,
                              const std::vector<TrajectoryRecord>& records,
                              std::size_t checkpoint_index, double t_check,
                              const Vec2& origin, const Vec2& axis,
                              int bins = 20);

struct EquivAxis {
    double t;
    Vec2 origin;
    Vec2 axis;
};

/// Standard probe stations: the source at birth, mid-arm with a diagonal
/// cross-beam axis, and the recombination point along the collision axis.
std::vector<EquivAxis> standard_equivariance_axes();

/// Smallest configuration-space distance between any two same-sector
/// trajectories at matched sample times. Requires kept dense samples.
double min_pairwise_separation(const std::vector<TrajectoryRecord>& records);

/// Amplitude audit of the closed interferometer under a candidate splitter
/// reflection phase: the post-mirror leg coefficients, the merged bright-port
/// coefficient, and the dark-port pair that must cancel. pass requires the
/// reference convention (+i) values exactly.
struct PhaseProbe {
    Cplx arm1;
    Cplx arm2;
    Cplx d1_merged;
    Cplx d2_from_arm1;
    Cplx d2_from_arm2;
    bool dark_port_elided = false;
    bool pass = false;
};

PhaseProbe check_phase_convention(Cplx reflection_phase);

/// Runs a small open-interferometer ensemble at the default and at a 100x
/// looser integrator tolerance; true when every unflagged trajectory keeps
/// its port and the full swap survives.
bool tolerance_robustness(int n, std::uint64_t seed);

} // namespace pilotmz
