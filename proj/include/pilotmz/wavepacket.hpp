#pragma once

#include <complex>

#include "pilotmz/vec.hpp"

namespace pilotmz {

using Cplx = std::complex<double>;

/// Value and exact spatial derivatives of a packet at one point.
struct PacketEval {
    Cplx psi;
    Cplx ddx;
    Cplx ddy;
    Cplx lap; // ddx2 + ddy2
};

/// Free dispersive 2D Gaussian wave packet (hbar = 1).
///
/// psi(r,t) = 1/(sqrt(pi) sigma0 lambda) * exp( -|d|^2/(2 sigma0^2 lambda)
///            + i k.d + i omega tau + i phase0 )
/// with d = r - center(t), tau = t - spread_epoch,
/// lambda = 1 + i tau / (m sigma0^2), omega = |k|^2 / (2m).
///
/// The packet is L2-normalized at all times; amplitude width is
/// sigma(t) = sigma0 |lambda|. `spread_epoch` is the time at which the packet
/// was (or would have been) at its minimum width; optical elements re-aim the
/// carrier but keep the spreading clock and accumulated phase, so it can lie
/// before birth_time for re-launched legs.
struct GaussianPacket2D {
    Vec2 center0;       // center position at birth_time
    double birth_time = 0.0;
    Vec2 wavevector;    // k; group velocity is k/mass
    double sigma0 = 1.0;
    double mass = 1.0;
    double spread_epoch = 0.0;
    double phase0 = 0.0;

    Vec2 group_velocity() const { return wavevector / mass; }
    Vec2 center(double t) const {
        return center0 + group_velocity() * (t - birth_time);
    }
    Cplx lambda(double t) const {
        return {1.0, (t - spread_epoch) / (mass * sigma0 * sigma0)};
    }
    double sigma(double t) const { return sigma0 * std::abs(lambda(t)); }
    /// Modulus at the packet center.
    double peak_modulus(double t) const;

    Cplx evaluate(const Vec2& r, double t) const;
    PacketEval eval_all(const Vec2& r, double t) const;
};

/// 1D analogue used for the pointer degree of freedom.
///
/// phi(y,t) = 1/(pi^{1/4} sqrt(sigma0 lambda)) * exp( -d^2/(2 sigma0^2 lambda)
///            + i k d + i omega tau + i phase0 ), omega = k^2/(2m).
struct GaussianPacket1D {
    double center0 = 0.0;
    double birth_time = 0.0;
    double wavevector = 0.0;
    double sigma0 = 1.0;
    double mass = 1.0;
    double spread_epoch = 0.0;
    double phase0 = 0.0;

    double group_velocity() const { return wavevector / mass; }
    double center(double t) const {
        return center0 + group_velocity() * (t - birth_time);
    }
    Cplx lambda(double t) const {
        return {1.0, (t - spread_epoch) / (mass * sigma0 * sigma0)};
    }
    double sigma(double t) const { return sigma0 * std::abs(lambda(t)); }
    double peak_modulus(double t) const;

    /// Value plus first and second derivative in y.
    struct Eval {
        Cplx phi;
        Cplx dd;
        Cplx lap;
    };
    Cplx evaluate(double y, double t) const;
    Eval eval_all(double y, double t) const;
};

} // namespace pilotmz
