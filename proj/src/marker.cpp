#include "pilotmz/marker.hpp"

#include <cmath>
#include <stdexcept>

namespace pilotmz {

double MarkerModel::amp_flip() const { return std::sqrt(efficiency_sq); }

double MarkerModel::amp_keep() const { return std::sqrt(1.0 - efficiency_sq); }

MarkerLabel MarkerModel::initial_label() const {
    switch (kind) {
        case MarkerKind::none: return MarkerLabel::neutral;
        case MarkerKind::discrete: return MarkerLabel::up;
        case MarkerKind::pointer: return MarkerLabel::pointer_unfired;
    }
    return MarkerLabel::neutral;
}

double PointerPair::separation(double t) const {
    return std::abs(fired.center(t) - rest.center(t));
}

double PointerPair::overlap_modulus(double t) const {
    // Envelope overlap of the two equal-width Gaussian moduli,
    // exp(-sep^2 / (4 w^2)) with w the common amplitude width. The L2 inner
    // product is conserved by free evolution and useless as a separation
    // measure; the envelope overlap is what suppresses the cross term of the
    // conditional field.
    const double w = rest.sigma(t);
    const double sep = separation(t);
    return std::exp(-sep * sep / (4.0 * w * w));
}

PointerPair make_pointer_pair(const MarkerModel& model, double t_fire) {
    if (model.kind != MarkerKind::pointer)
        throw std::logic_error("make_pointer_pair: model has no pointer");
    PointerPair pair;
    pair.t_fire = t_fire;
    pair.rest.center0 = 0.0;
    pair.rest.birth_time = 0.0;
    pair.rest.wavevector = 0.0;
    pair.rest.sigma0 = model.pointer_sigma;
    pair.rest.mass = model.pointer_mass;
    pair.rest.spread_epoch = 0.0;
    pair.rest.phase0 = 0.0;

    pair.fired = pair.rest;
    pair.fired.birth_time = t_fire;
    pair.fired.wavevector = model.pointer_mass * model.ejection_speed;
    // Choose the global phase so that at t_fire the ejected packet equals the
    // stationary one times exp(i k y) pointwise: a pure momentum transfer.
    const double omega = pair.fired.wavevector * pair.fired.wavevector /
                         (2.0 * pair.fired.mass);
    pair.fired.phase0 = -omega * t_fire;
    return pair;
}

MarkerLabel draw_discrete_beable(const MarkerModel& model, int particle_channel,
                                 RandomStream& rng) {
    if (model.kind != MarkerKind::discrete)
        throw std::logic_error("draw_discrete_beable: model is not discrete");
    if (particle_channel != model.placement_channel) return MarkerLabel::up;
    if (model.efficiency_sq >= 1.0) return MarkerLabel::down;
    if (model.efficiency_sq <= 0.0) return MarkerLabel::up;
    return rng.bernoulli(model.efficiency_sq) ? MarkerLabel::down
                                              : MarkerLabel::up;
}

Cplx conditional_factor(const MarkerModel& model, const MarkerBeable& beable,
                        MarkerLabel label, const PointerPair* pointer,
                        double t) {
    if (label == MarkerLabel::neutral) return {1.0, 0.0};
    if (label == MarkerLabel::up || label == MarkerLabel::down) {
        if (model.kind != MarkerKind::discrete || !beable.discrete)
            throw std::logic_error("conditional_factor: no discrete beable");
        return (label == *beable.discrete) ? Cplx{1.0, 0.0} : Cplx{0.0, 0.0};
    }
    if (model.kind != MarkerKind::pointer || !beable.pointer_y || !pointer)
        throw std::logic_error("conditional_factor: no pointer state");
    const GaussianPacket1D& packet =
        (label == MarkerLabel::pointer_fired) ? pointer->fired : pointer->rest;
    if (label == MarkerLabel::pointer_fired && t < pointer->t_fire)
        throw std::logic_error("conditional_factor: pointer not yet fired");
    return packet.evaluate(*beable.pointer_y, t);
}

} // namespace pilotmz
