#include "pilotmz/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pilotmz::stats {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

namespace {

/// Acklam's rational approximation, |rel err| < 1.15e-9 before polishing.
double inverse_normal_cdf_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("inverse_normal_cdf: p must lie in (0,1)");
    double x = inverse_normal_cdf_approx(p);
    // Two Halley steps against erfc push the result to full double precision.
    for (int i = 0; i < 2; ++i) {
        const double e = normal_cdf(x) - p;
        const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
        if (pdf == 0.0) break;
        const double u = e / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

namespace {

double gamma_q_series(double a, double x) {
    // Q = 1 - P with P from the power series; use when x < a + 1.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    const double lg = std::lgamma(a);
    return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
}

double gamma_q_contfrac(double a, double x) {
    // Lentz's method for the continued fraction; use when x >= a + 1.
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    const double lg = std::lgamma(a);
    return std::exp(-x + a * std::log(x) - lg) * h;
}

} // namespace

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0)
        throw std::domain_error("gamma_q: requires x >= 0 and a > 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return gamma_q_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi2_pvalue(double statistic, int dof) {
    if (dof <= 0) throw std::domain_error("chi2_pvalue: dof must be positive");
    if (statistic <= 0.0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * statistic);
}

double chi2_statistic(const std::vector<double>& observed,
                      const std::vector<double>& expected) {
    if (observed.size() != expected.size())
        throw std::invalid_argument("chi2_statistic: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0)
            throw std::invalid_argument("chi2_statistic: nonpositive expected count");
        const double d = observed[i] - expected[i];
        s += d * d / expected[i];
    }
    return s;
}

TabulatedCdf::TabulatedCdf(double x0, double dx, std::vector<double> density)
    : x0_(x0), dx_(dx) {
    if (density.size() < 2 || dx <= 0.0)
        throw std::invalid_argument("TabulatedCdf: need >= 2 samples, dx > 0");
    cum_.resize(density.size());
    cum_[0] = 0.0;
    for (std::size_t i = 1; i < density.size(); ++i) {
        const double f0 = std::max(density[i - 1], 0.0);
        const double f1 = std::max(density[i], 0.0);
        cum_[i] = cum_[i - 1] + 0.5 * (f0 + f1) * dx;
    }
    const double total = cum_.back();
    if (total <= 0.0)
        throw std::invalid_argument("TabulatedCdf: zero total mass");
    for (double& c : cum_) c /= total;
}

double TabulatedCdf::cdf(double x) const {
    if (x <= x0_) return 0.0;
    const double s = (x - x0_) / dx_;
    const auto i = static_cast<std::size_t>(s);
    if (i + 1 >= cum_.size()) return 1.0;
    const double frac = s - static_cast<double>(i);
    return cum_[i] + (cum_[i + 1] - cum_[i]) * frac;
}

double TabulatedCdf::quantile(double q) const {
    if (q <= 0.0) return x0_;
    if (q >= 1.0) return x_max();
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), q);
    const auto i = static_cast<std::size_t>(it - cum_.begin());
    if (i == 0) return x0_;
    const double c0 = cum_[i - 1];
    const double c1 = cum_[i];
    const double frac = (c1 > c0) ? (q - c0) / (c1 - c0) : 0.0;
    return x0_ + dx_ * (static_cast<double>(i - 1) + frac);
}

} // namespace pilotmz::stats
