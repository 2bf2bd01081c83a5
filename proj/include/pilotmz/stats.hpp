#pragma once

#include <cstddef>
#include <vector>

namespace pilotmz::stats {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse of normal_cdf, accurate to ~1e-15 after Newton polish.
double inverse_normal_cdf(double p);

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Upper-tail p-value of a chi-square statistic with dof degrees of freedom.
double chi2_pvalue(double statistic, int dof);

/// Pearson chi-square statistic from observed counts and expected counts.
double chi2_statistic(const std::vector<double>& observed,
                      const std::vector<double>& expected);

/// Piecewise-linear CDF built from nonnegative density samples on a uniform
/// grid. Used for measure-preserving coordinate maps and histogram binning.
class TabulatedCdf {
  public:
    TabulatedCdf() = default;
    /// density[i] sampled at x0 + i*dx; trapezoid-accumulated and normalized.
    TabulatedCdf(double x0, double dx, std::vector<double> density);

    double x_min() const { return x0_; }
    double x_max() const { return x0_ + dx_ * (cum_.size() - 1); }
    /// P(X <= x); clamps outside the table.
    double cdf(double x) const;
    /// Smallest x with cdf(x) >= q (linear interpolation; flat spans resolve
    /// to their left edge).
    double quantile(double q) const;

  private:
    double x0_ = 0.0;
    double dx_ = 1.0;
    std::vector<double> cum_;
};

} // namespace pilotmz::stats
