#pragma once

#include <optional>

#include "pilotmz/rng.hpp"
#include "pilotmz/vec.hpp"
#include "pilotmz/wavepacket.hpp"

namespace pilotmz {

/// Which-way tag carried by a branch of the superposition.
enum class MarkerLabel { neutral, up, down, pointer_unfired, pointer_fired };

enum class MarkerKind { none, discrete, pointer };

/// The which-way subsystem: absent, a two-state flag flipped with
/// probability efficiency_sq, or a continuous 1D pointer kicked to
/// ejection_speed when the marked arm's packet passes the interaction point.
struct MarkerModel {
    MarkerKind kind = MarkerKind::none;
    double efficiency_sq = 1.0; // a^2, discrete model only
    double ejection_speed = 150.0;
    double pointer_sigma = 1.0;
    double pointer_mass = 1.0;
    int placement_channel = 2;
    Vec2 interaction_position{0.0, 2.0};

    double amp_flip() const;    // a
    double amp_keep() const;    // b, a^2 + b^2 = 1
    MarkerLabel initial_label() const;
};

/// Actual configuration of the marker subsystem for one run.
/// Exactly the member matching the model kind is engaged; the discrete value
/// is fixed at interaction completion, the pointer coordinate is dynamical.
struct MarkerBeable {
    std::optional<MarkerLabel> discrete; // up or down
    std::optional<double> pointer_y;
};

/// The two pointer packets created by a pointer-model interaction: the
/// stationary one riding the unmarked branches and the ejected one riding the
/// marked branch. Both exist from the interaction on; the ejected packet is
/// the stationary one multiplied by exp(i k y) at fire time (pure momentum
/// kick, width and spreading clock continuous).
struct PointerPair {
    GaussianPacket1D rest;
    GaussianPacket1D fired;
    double t_fire = 0.0;

    double separation(double t) const;
    /// Envelope overlap of the two packet moduli at time t (1 when the
    /// centers coincide, exp(-25) at 10 widths of separation).
    double overlap_modulus(double t) const;
};

PointerPair make_pointer_pair(const MarkerModel& model, double t_fire);

/// Beable update at interaction completion: flips iff the particle itself is
/// in the marked arm and the efficiency draw succeeds. Degenerate
/// efficiencies 0 and 1 consume no randomness.
MarkerLabel draw_discrete_beable(const MarkerModel& model, int particle_channel,
                                 RandomStream& rng);

/// Weight of a branch label given the actual marker configuration: 1/0
/// selection for the discrete flag, the pointer packet value at the actual
/// pointer position for the pointer model, 1 for neutral labels.
Cplx conditional_factor(const MarkerModel& model, const MarkerBeable& beable,
                        MarkerLabel label, const PointerPair* pointer, double t);

} // namespace pilotmz
