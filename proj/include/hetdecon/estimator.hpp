#pragma once

#include "error_models.hpp"
#include "exceptions.hpp"
#include "fourier.hpp"
#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetdecon {

//! Which empirical Fourier quotient weights the kernel transform.
enum class WeightSource
{
  psi,   // sum_j conj(f_j) e^{itY_j} / sum_k |f_k|^2
  phi,   // sum_j e^{itY_j} / sum_k f_k
  ridge  // replicate-based quotient with a ridge-floored denominator
};

inline std::string to_string(WeightSource w)
{
  switch (w) {
    case WeightSource::psi:
      return "psi";
    case WeightSource::phi:
      return "phi";
    default:
      return "ridge";
  }
}

inline WeightSource weight_source_from_name(const std::string& name)
{
  if (name == "psi")
    return WeightSource::psi;
  if (name == "phi")
    return WeightSource::phi;
  if (name == "ridge")
    return WeightSource::ridge;
  throw std::invalid_argument("unknown weight source '" + name + "' (expected psi, phi or ridge)");
}

struct EstimatorConfig
{
  Kernel kernel = Kernel::k2();
  double bandwidth = 1.0;
  std::vector<double> x_grid;
  QuadratureSpec quad{};
  WeightSource weights = WeightSource::psi;
  double ridge = 0.0;
  unsigned derivative = 0;
  //! Presentation only: clip negative values and rescale to unit mass on
  //! the grid.
  bool clip_and_renormalize = false;

  void validate() const
  {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw std::invalid_argument("bandwidth must be positive and finite");
    if (x_grid.empty())
      throw std::invalid_argument("evaluation grid is empty");
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      if (!std::isfinite(x_grid[i]) || (i > 0 && !(x_grid[i] > x_grid[i - 1])))
        throw std::invalid_argument("evaluation grid must be finite and strictly increasing");
    }
    if (weights == WeightSource::ridge && !(ridge > 0.0))
      throw std::invalid_argument("ridge weights need a positive ridge parameter");
    quad.validate();
  }
};

struct DensityEstimate
{
  std::vector<double> x;
  std::vector<double> values;
  double max_imag_discarded = 0.0;
  double bandwidth = 0.0;
  WeightSource weights = WeightSource::psi;
  std::string kernel;
  unsigned derivative = 0;
};

//! `count` points equispaced over [lo, hi].
inline std::vector<double> linear_grid(double lo, double hi, std::size_t count)
{
  if (count < 2 || !(lo < hi))
    throw std::invalid_argument("grid needs lo < hi and at least two points");
  std::vector<double> g(count);
  double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = lo + static_cast<double>(i) * step;
  g.back() = hi;
  return g;
}

namespace detail {

//! Evaluates Ψ_n at one t, reusing `cf` as scratch for the model cfs.
inline complex psi_at(const HetSample& sample, double t, std::vector<complex>& cf)
{
  double den = cf_sum_sq(sample.profile(), t);
  const auto& models = sample.models();
  cf.resize(models.size());
  for (std::size_t m = 0; m < models.size(); ++m)
    cf[m] = std::conj(models[m].cf(t));
  const auto& ys = sample.ys();
  const auto& idx = sample.model_index();
  complex num = 0.0;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    double arg = t * ys[j];
    num += cf[idx[j]] * complex(std::cos(arg), std::sin(arg));
  }
  return num / den;
}

inline complex phi_at(const HetSample& sample, double t)
{
  complex den = sample.profile().sum_cf(t);
  auto n = static_cast<double>(sample.size());
  if (!(std::abs(den) > 1e-12 * n)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "sum of error characteristic functions vanishes at t = " << t;
    throw degenerate_denominator(msg.str());
  }
  return empirical_cf(sample.ys(), t) * n / den;
}

inline complex derivative_factor(double t, unsigned r)
{
  // (-i t)^r
  complex f = 1.0;
  for (unsigned k = 0; k < r; ++k)
    f *= complex(0.0, -t);
  return f;
}

//! Quadrature nodes t = u / h for u on a Simpson grid over [-1, 1], so the
//! endpoints coincide with the edges of the kernel transform's support.
struct FrequencyNodes
{
  std::vector<double> t;
  std::vector<double> weight;    // Simpson weight in t
  std::vector<double> kernel_ft; // K^ft(t h)
};

inline FrequencyNodes frequency_nodes(const Kernel& kernel, double h, QuadratureSpec quad)
{
  SimpsonGrid grid(-1.0, 1.0, quad);
  FrequencyNodes out;
  out.t.resize(grid.size());
  out.weight.resize(grid.size());
  out.kernel_ft.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double u = grid.node(i);
    out.t[i] = u / h;
    out.weight[i] = grid.weight(i) / h;
    out.kernel_ft[i] = kernel.ft(u);
  }
  return out;
}

template<class Weight>
DensityEstimate invert(Weight&& weight_fn, const EstimatorConfig& cfg)
{
  auto nodes = frequency_nodes(cfg.kernel, cfg.bandwidth, cfg.quad);
  std::size_t q = nodes.t.size();
  std::vector<complex> coef(q);
  for (std::size_t i = 0; i < q; ++i) {
    complex w = weight_fn(nodes.t[i]);
    complex c = nodes.weight[i] * nodes.kernel_ft[i] * w;
    if (cfg.derivative > 0)
      c *= derivative_factor(nodes.t[i], cfg.derivative);
    if (!detail::is_finite(c))
      detail::throw_non_finite(i, nodes.t[i]);
    coef[i] = c;
  }

  DensityEstimate est;
  est.x = cfg.x_grid;
  est.values.resize(cfg.x_grid.size());
  est.bandwidth = cfg.bandwidth;
  est.weights = cfg.weights;
  est.kernel = cfg.kernel.name();
  est.derivative = cfg.derivative;
  for (std::size_t k = 0; k < cfg.x_grid.size(); ++k) {
    double x = cfg.x_grid[k];
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      double arg = -nodes.t[i] * x;
      double c = std::cos(arg);
      double s = std::sin(arg);
      re += coef[i].real() * c - coef[i].imag() * s;
      im += coef[i].real() * s + coef[i].imag() * c;
    }
    re /= 2.0 * pi;
    im /= 2.0 * pi;
    if (!std::isfinite(re) || !std::isfinite(im))
      throw numerical_error("non-finite density estimate at x = " + std::to_string(x));
    est.values[k] = re;
    est.max_imag_discarded = std::max(est.max_imag_discarded, std::abs(im));
  }

  if (cfg.clip_and_renormalize) {
    for (double& v : est.values)
      v = std::max(v, 0.0);
    double mass = 0.0;
    for (std::size_t k = 1; k < est.x.size(); ++k)
      mass += 0.5 * (est.values[k] + est.values[k - 1]) * (est.x[k] - est.x[k - 1]);
    if (mass > 0.0) {
      for (double& v : est.values)
        v /= mass;
    }
  }
  return est;
}

} // namespace detail

//! Ψ_n(t) = sum_j conj(f_{ε_j}^ft(t)) exp(itY_j) / sum_k |f_{ε_k}^ft(t)|^2.
inline complex psi_n(const HetSample& sample, double t)
{
  std::vector<complex> scratch;
  return detail::psi_at(sample, t, scratch);
}

//! Φ_n(t) = sum_j exp(itY_j) / sum_k f_{ε_k}^ft(t). Needs only the multiset
//! of error models; the denominator can vanish for asymmetric errors.
inline complex phi_n(const HetSample& sample, double t)
{
  return detail::phi_at(sample, t);
}

//! Replicate-based quotient: N^{-1} sum_S exp(it (Y_{j,k1} + Y_{j,k2}) / 2)
//! divided by empirical_error_cf(reps, t, rho).
inline complex phi_hat_ridge(const ReplicatedSample& reps, double t, double rho)
{
  complex num = empirical_cf(reps.pair_midpoints(), t);
  return num / empirical_error_cf(reps, t, rho);
}

//! f̂^{(r)}(x) = Re (2π)^{-1} int_{|t| <= 1/h} (-it)^r e^{-itx} K^ft(th) W(t) dt
//! with W = Ψ_n or Φ_n.
inline DensityEstimate estimate_density(const HetSample& sample, const EstimatorConfig& cfg)
{
  cfg.validate();
  switch (cfg.weights) {
    case WeightSource::psi: {
      std::vector<complex> scratch;
      return detail::invert([&](double t) { return detail::psi_at(sample, t, scratch); }, cfg);
    }
    case WeightSource::phi:
      return detail::invert([&](double t) { return detail::phi_at(sample, t); }, cfg);
    default:
      throw std::invalid_argument("ridge weights need replicated measurements");
  }
}

//! Same inversion with W = the ridge-regularized replicate quotient.
inline DensityEstimate estimate_density(const ReplicatedSample& reps, const EstimatorConfig& cfg)
{
  cfg.validate();
  if (cfg.weights != WeightSource::ridge)
    throw std::invalid_argument("replicated measurements are estimated with ridge weights; "
                                "average them into a HetSample for psi/phi");
  if (reps.pair_count() == 0)
    throw insufficient_replicates("ridge weights need at least one replicated subject");
  return detail::invert([&](double t) { return phi_hat_ridge(reps, t, cfg.ridge); }, cfg);
}

} // namespace hetdecon
