#pragma once

#include "error_models.hpp"
#include "estimator.hpp"
#include "exceptions.hpp"
#include "fourier.hpp"
#include "kernels.hpp"
#include "random.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hetdecon {

//! Finite normal mixture sum_i w_i N(mu_i, sigma_i^2), the target densities
//! for which risks are evaluated in closed form.
class NormalMixture
{
public:
  struct Component
  {
    double weight;
    double mean;
    double variance;
  };

  explicit NormalMixture(std::vector<Component> components)
    : comps_(std::move(components))
  {
    if (comps_.empty())
      throw std::invalid_argument("normal mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : comps_) {
      if (!(c.weight > 0.0) || !(c.variance > 0.0) || !std::isfinite(c.mean))
        throw std::invalid_argument("mixture components need weight > 0 and variance > 0");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("mixture weights must sum to 1");
  }

  static NormalMixture normal(double mean, double variance)
  {
    return NormalMixture({ { 1.0, mean, variance } });
  }

  const std::vector<Component>& components() const { return comps_; }

  complex ft(double t) const
  {
    complex s = 0.0;
    for (const auto& c : comps_)
      s += c.weight * std::polar(std::exp(-0.5 * c.variance * t * t), c.mean * t);
    return s;
  }

  double abs2_ft(double t) const { return std::norm(ft(t)); }

  double pdf(double x) const
  {
    double s = 0.0;
    for (const auto& c : comps_) {
      double z = x - c.mean;
      s += c.weight * std::exp(-0.5 * z * z / c.variance) / std::sqrt(2.0 * pi * c.variance);
    }
    return s;
  }

  double mean() const
  {
    double m = 0.0;
    for (const auto& c : comps_)
      m += c.weight * c.mean;
    return m;
  }

  double variance() const
  {
    double second = 0.0;
    for (const auto& c : comps_)
      second += c.weight * (c.variance + c.mean * c.mean);
    double m = mean();
    return second - m * m;
  }

  double min_sd() const
  {
    double v = comps_.front().variance;
    for (const auto& c : comps_)
      v = std::min(v, c.variance);
    return std::sqrt(v);
  }

  //! theta_r = int (f^{(r)})^2, in closed form: for each pair of components
  //! (-1)^r s^{-r} He_{2r}(d / sqrt s) phi_s(d) with d = mu_i - mu_j,
  //! s = sigma_i^2 + sigma_j^2.
  double roughness(unsigned r) const
  {
    double total = 0.0;
    for (const auto& a : comps_) {
      for (const auto& b : comps_) {
        double s = a.variance + b.variance;
        double d = a.mean - b.mean;
        double z = d / std::sqrt(s);
        double he_prev = 1.0; // He_0
        double he = z;        // He_1
        if (r == 0) {
          he = 1.0;
        } else {
          for (unsigned m = 1; m < 2 * r; ++m) {
            double next = z * he - m * he_prev;
            he_prev = he;
            he = next;
          }
        }
        double phi = std::exp(-0.5 * d * d / s) / std::sqrt(2.0 * pi * s);
        double sign = (r % 2 == 0) ? 1.0 : -1.0;
        total += a.weight * b.weight * sign * std::pow(s, -static_cast<double>(r)) * he * phi;
      }
    }
    return total;
  }

  //! int f^2.
  double l2_norm_sq() const { return roughness(0); }

  double sample(RandomStream& rs) const
  {
    double u = rs.uniform();
    double acc = 0.0;
    const Component* pick = &comps_.back();
    for (const auto& c : comps_) {
      acc += c.weight;
      if (u < acc) {
        pick = &c;
        break;
      }
    }
    return pick->mean + std::sqrt(pick->variance) * rs.normal();
  }

private:
  std::vector<Component> comps_;
};

using TargetDensitySpec = NormalMixture;

//! The three terms of the exact MISE at one bandwidth.
struct RiskReport
{
  double h = 0.0;
  std::size_t n = 0;
  double bias_term = 0.0;
  double variance_term = 0.0;
  double rn_term = 0.0;
  double mise = 0.0;
};

namespace detail {

inline unsigned kernel_order_or_throw(const Kernel& kernel)
{
  auto k = kernel.order();
  if (!k)
    throw unsupported_kernel("kernel '" + kernel.name() + "' has no finite order");
  return *k;
}

inline double factorial(unsigned k)
{
  double f = 1.0;
  for (unsigned i = 2; i <= k; ++i)
    f *= i;
  return f;
}

struct SupportIntegrals
{
  double bias_inside = 0.0; // int_{|t|<=1/h} |f_X|^2 |K^ft(th) - 1|^2
  double variance = 0.0;    // int |K^ft(th)|^2 / S(t)
  double rn = 0.0;          // int S4(t) / S(t)^2 |f_X|^2 |K^ft(th)|^2
};

inline SupportIntegrals support_integrals(const NormalMixture& fx,
                                          const ErrorProfile& profile,
                                          const Kernel& kernel,
                                          double h,
                                          QuadratureSpec quad)
{
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  auto nodes = frequency_nodes(kernel, h, quad);
  SupportIntegrals out;
  for (std::size_t i = 0; i < nodes.t.size(); ++i) {
    double t = nodes.t[i];
    double k = nodes.kernel_ft[i];
    double f2 = fx.abs2_ft(t);
    double s = cf_sum_sq(profile, t);
    double s4 = profile.sum_abs4(t);
    double w = nodes.weight[i];
    out.bias_inside += w * f2 * (k - 1.0) * (k - 1.0);
    out.variance += w * k * k / s;
    out.rn += w * s4 / (s * s) * f2 * k * k;
  }
  if (!std::isfinite(out.variance))
    throw numerical_error("variance integral overflowed; bandwidth too small for these errors");
  return out;
}

inline double tail_integral(const NormalMixture& fx, double h, QuadratureSpec quad)
{
  double lo = 1.0 / h;
  double hi = lo + 40.0 / fx.min_sd();
  return 2.0 * integrate([&fx](double t) { return fx.abs2_ft(t); }, lo, hi, quad);
}

} // namespace detail

//! Exact MISE of the Ψ_n estimator: integrated squared bias, integrated
//! variance and the subtracted R_n term.
inline RiskReport exact_mise(const NormalMixture& fx,
                             const ErrorProfile& profile,
                             const Kernel& kernel,
                             double h,
                             QuadratureSpec quad = {})
{
  auto in = detail::support_integrals(fx, profile, kernel, h, quad);
  RiskReport r;
  r.h = h;
  r.n = profile.n();
  r.bias_term = (in.bias_inside + detail::tail_integral(fx, h, quad)) / (2.0 * pi);
  r.variance_term = in.variance / (2.0 * pi);
  r.rn_term = in.rn / (2.0 * pi);
  r.mise = r.bias_term + r.variance_term - r.rn_term;
  return r;
}

//! R_n = (2π)^{-1} int (sum|f_j|^2)^{-2} (sum|f_k|^4) |f_X^ft|^2 |K^ft(th)|^2.
inline double rn_term(const NormalMixture& fx,
                      const ErrorProfile& profile,
                      const Kernel& kernel,
                      double h,
                      QuadratureSpec quad = {})
{
  return detail::support_integrals(fx, profile, kernel, h, quad).rn / (2.0 * pi);
}

//! Integrated variance of the AMISE: (2πh)^{-1} int_{-1}^{1} |K^ft(u)|^2 /
//! sum_j |f_{ε_j}^ft(u/h)|^2 du.
inline double amise_variance(const ErrorProfile& profile,
                             const Kernel& kernel,
                             double h,
                             QuadratureSpec quad = {})
{
  double v = integrate(
    [&](double u) {
      double k = kernel.ft(u);
      return k * k / cf_sum_sq(profile, u / h);
    },
    -1.0,
    1.0,
    quad);
  return v / (2.0 * pi * h);
}

//! h^{2k} mu_{K,k}^2 theta_k / (k!)^2 + integrated variance.
inline double amise(double theta_k,
                    const ErrorProfile& profile,
                    const Kernel& kernel,
                    double h,
                    QuadratureSpec quad = {})
{
  unsigned k = detail::kernel_order_or_throw(kernel);
  if (!(theta_k >= 0.0))
    throw std::invalid_argument("theta must be non-negative");
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  double mu = kernel.moment(k);
  double kf = detail::factorial(k);
  double bias = std::pow(h, 2.0 * k) * mu * mu * theta_k / (kf * kf);
  return bias + amise_variance(profile, kernel, h, quad);
}

//! Asymptotic bias of theta_hat(r) at pilot bandwidth h:
//! (-1)^{k/2} (2 h^k / k!) mu_{K,k} theta_{r+k/2}
//!   + (2π h^{2r+1})^{-1} int t^{2r} |K^ft(t)|^2 / sum_k |f_k^ft(t/h)|^2 dt.
inline double abias_theta(unsigned r,
                          double h,
                          double theta_next,
                          const ErrorProfile& profile,
                          const Kernel& kernel,
                          QuadratureSpec quad = {})
{
  unsigned k = detail::kernel_order_or_throw(kernel);
  if (k % 2 != 0)
    throw std::invalid_argument("kernel order must be even");
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
  double first = sign * 2.0 * std::pow(h, k) / detail::factorial(k) * kernel.moment(k) * theta_next;
  double integral = integrate(
    [&](double u) {
      double kf = kernel.ft(u);
      return std::pow(u, 2.0 * r) * kf * kf / cf_sum_sq(profile, u / h);
    },
    -1.0,
    1.0,
    quad);
  double second = integral / (2.0 * pi * std::pow(h, 2.0 * r + 1.0));
  return first + second;
}

//! theta_hat_r = int (f̂^{(r)})^2 evaluated by Parseval:
//! (2π)^{-1} int_{|t|<=1/h} t^{2r} |K^ft(th) Ψ_n(t)|^2 dt.
inline double theta_hat(const HetSample& sample,
                        unsigned r,
                        const Kernel& kernel,
                        double h,
                        QuadratureSpec quad = {})
{
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  auto nodes = detail::frequency_nodes(kernel, h, quad);
  std::vector<complex> scratch;
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.t.size(); ++i) {
    double t = nodes.t[i];
    double k = nodes.kernel_ft[i];
    if (k == 0.0)
      continue;
    complex psi = detail::psi_at(sample, t, scratch);
    double v = std::pow(t, 2.0 * r) * k * k * std::norm(psi);
    if (!std::isfinite(v))
      detail::throw_non_finite(i, t);
    sum += nodes.weight[i] * v;
  }
  return sum / (2.0 * pi);
}

//! theta_{2k} of N(0, sigma^2): (4k)! / ((2 sigma)^{4k+1} (2k)! sqrt(pi)).
inline double theta_normal_ref(unsigned k, double sigma_x)
{
  if (k == 0)
    throw std::invalid_argument("order must be positive");
  if (!(sigma_x > 0.0))
    throw std::invalid_argument("sigma_x must be positive");
  double log_value = std::lgamma(4.0 * k + 1.0) - std::lgamma(2.0 * k + 1.0) -
                     (4.0 * k + 1.0) * std::log(2.0 * sigma_x) - 0.5 * std::log(pi);
  return std::exp(log_value);
}

inline constexpr double sigma_x_sq_floor = 1e-8;

//! Variance of X: the biased sample variance of Y minus the average error
//! variance, floored at 1e-8.
inline double estimate_sigma_x(const HetSample& sample)
{
  const auto& ys = sample.ys();
  auto n = static_cast<double>(ys.size());
  double mean = 0.0;
  for (double y : ys)
    mean += y;
  mean /= n;
  double var_y = 0.0;
  for (double y : ys)
    var_y += (y - mean) * (y - mean);
  var_y /= n;

  double e1 = 0.0;
  double e2 = 0.0;
  for (const auto& entry : sample.profile().entries()) {
    auto [m1, m2] = entry.model.moments();
    e1 += static_cast<double>(entry.count) * m1;
    e2 += static_cast<double>(entry.count) * m2;
  }
  e1 /= n;
  e2 /= n;
  return std::max(var_y - (e2 - e1 * e1), sigma_x_sq_floor);
}

} // namespace hetdecon
