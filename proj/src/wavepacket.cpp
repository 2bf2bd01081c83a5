#include "pilotmz/wavepacket.hpp"

#include <cmath>
#include <stdexcept>

namespace pilotmz {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kQuartRootPi = 1.3313353638003897128;

// |psi| below exp(kLogFloor) is clamped to exact zero so that far-tail
// evaluations cannot produce denormals or spurious phase noise.
constexpr double kLogFloor = -690.7755278982137; // log(1e-300)

// Allows a hair of slack: legs relaunched at an element can carry birth times
// that differ from the segment boundary by rounding noise.
void require_alive(double t, double birth_time, const char* what) {
    if (t < birth_time - 1e-9)
        throw std::invalid_argument(std::string(what) +
                                    ": evaluation before packet birth time");
}

} // namespace

double GaussianPacket2D::peak_modulus(double t) const {
    return 1.0 / (kSqrtPi * sigma0 * std::abs(lambda(t)));
}

Cplx GaussianPacket2D::evaluate(const Vec2& r, double t) const {
    return eval_all(r, t).psi;
}

PacketEval GaussianPacket2D::eval_all(const Vec2& r, double t) const {
    require_alive(t, birth_time, "GaussianPacket2D");
    const Cplx lam = lambda(t);
    const Cplx inv_lam = 1.0 / lam;
    const double s2 = sigma0 * sigma0;
    const Vec2 d = r - center(t);
    const double tau = t - spread_epoch;
    const double omega = wavevector.norm2() / (2.0 * mass);

    const Cplx expo = -(d.norm2() * inv_lam) / (2.0 * s2) +
                      Cplx(0.0, wavevector.dot(d) + omega * tau + phase0);
    const Cplx pref = 1.0 / (kSqrtPi * sigma0 * lam);

    if (expo.real() + std::log(std::abs(pref)) <= kLogFloor)
        return {Cplx(0.0), Cplx(0.0), Cplx(0.0), Cplx(0.0)};

    const Cplx psi = pref * std::exp(expo);
    const Cplx gx = -d.x * inv_lam / s2 + Cplx(0.0, wavevector.x);
    const Cplx gy = -d.y * inv_lam / s2 + Cplx(0.0, wavevector.y);
    const Cplx lap_ratio = gx * gx + gy * gy - 2.0 * inv_lam / s2;
    return {psi, gx * psi, gy * psi, lap_ratio * psi};
}

double GaussianPacket1D::peak_modulus(double t) const {
    return 1.0 / (kQuartRootPi * std::sqrt(sigma0 * std::abs(lambda(t))));
}

Cplx GaussianPacket1D::evaluate(double y, double t) const {
    return eval_all(y, t).phi;
}

GaussianPacket1D::Eval GaussianPacket1D::eval_all(double y, double t) const {
    require_alive(t, birth_time, "GaussianPacket1D");
    const Cplx lam = lambda(t);
    const Cplx inv_lam = 1.0 / lam;
    const double s2 = sigma0 * sigma0;
    const double d = y - center(t);
    const double tau = t - spread_epoch;
    const double omega = wavevector * wavevector / (2.0 * mass);

    const Cplx expo = -(d * d * inv_lam) / (2.0 * s2) +
                      Cplx(0.0, wavevector * d + omega * tau + phase0);
    const Cplx pref = 1.0 / (kQuartRootPi * std::sqrt(sigma0 * lam));

    if (expo.real() + std::log(std::abs(pref)) <= kLogFloor)
        return {Cplx(0.0), Cplx(0.0), Cplx(0.0)};

    const Cplx phi = pref * std::exp(expo);
    const Cplx g = -d * inv_lam / s2 + Cplx(0.0, wavevector);
    const Cplx lap_ratio = g * g - inv_lam / s2;
    return {phi, g * phi, lap_ratio * phi};
}

} // namespace pilotmz
