#pragma once

#include "error_models.hpp"
#include "kernels.hpp"
#include "risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hetdecon {

//! Geometric grid of candidate bandwidths.
struct BandwidthGrid
{
  std::size_t count = 61;
  double min = 0.05;
  double max = 5.0;

  void validate() const
  {
    if (count < 11)
      throw std::invalid_argument("bandwidth grid needs at least 11 points");
    if (!(min > 0.0) || !(max > min) || !std::isfinite(max))
      throw std::invalid_argument("bandwidth grid needs 0 < min < max");
  }

  std::vector<double> values() const
  {
    validate();
    std::vector<double> h(count);
    double ratio = std::log(max / min) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
      h[i] = min * std::exp(ratio * static_cast<double>(i));
    h.front() = min;
    h.back() = max;
    return h;
  }
};

//! Interquartile range with linearly interpolated order statistics.
inline double interquartile_range(std::vector<double> ys)
{
  if (ys.empty())
    throw std::invalid_argument("interquartile range of an empty sample");
  std::sort(ys.begin(), ys.end());
  auto q = [&ys](double p) {
    double pos = p * static_cast<double>(ys.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, ys.size() - 1);
    return ys[lo] + (pos - static_cast<double>(lo)) * (ys[hi] - ys[lo]);
  };
  return q(0.75) - q(0.25);
}

struct PluginConfig
{
  //! Explicit grid; when empty, [lo_factor, hi_factor] x IQR / n^{1/5}.
  std::optional<BandwidthGrid> grid;
  std::size_t grid_count = 61;
  double lo_factor = 0.05;
  double hi_factor = 5.0;
  //! Fixed variance of X for the normal reference; estimated when empty.
  std::optional<double> sigma_x_sq;

  BandwidthGrid grid_for(const HetSample& sample) const
  {
    if (grid)
      return *grid;
    double scale = interquartile_range(sample.ys());
    if (!(scale > 0.0)) {
      // all observations tied at the quartiles; fall back to the spread
      const auto& ys = sample.ys();
      auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
      scale = (*hi > *lo) ? (*hi - *lo) : 1.0;
    }
    double base = scale / std::pow(static_cast<double>(sample.size()), 0.2);
    return { grid_count, lo_factor * base, hi_factor * base };
  }
};

//! Intermediate quantities of the two-stage plug-in chain (kernel order 2).
struct PluginTrace
{
  double sigma_x_sq = 0.0;
  double theta4 = 0.0; // normal reference
  double h3 = 0.0;
  double theta3 = 0.0;
  double h2 = 0.0;
  double theta2 = 0.0;
  double h = 0.0;
  BandwidthGrid grid;
  bool degenerate_sample = false;
};

namespace detail {

inline void require_order_two(const Kernel& kernel)
{
  auto k = kernel.order();
  if (!k || *k != 2)
    throw unsupported_kernel("plug-in bandwidth selection supports kernel order 2 only (use k2)");
}

//! Lowest index wins ties.
template<class Objective>
double grid_argmin(const std::vector<double>& h_grid, Objective&& objective)
{
  if (h_grid.empty())
    throw std::invalid_argument("bandwidth grid is empty");
  std::size_t best = 0;
  double best_value = objective(h_grid[0]);
  for (std::size_t i = 1; i < h_grid.size(); ++i) {
    double v = objective(h_grid[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return h_grid[best];
}

//! Objective value used when the variance integral overflows at tiny h.
inline constexpr double objective_overflow = std::numeric_limits<double>::infinity();

} // namespace detail

//! Pilot bandwidth for theta_hat(r): the grid h minimizing |ABias|.
inline double select_stage_bandwidth(const ErrorProfile& profile,
                                     unsigned r,
                                     double theta_next,
                                     const Kernel& kernel,
                                     QuadratureSpec quad,
                                     const std::vector<double>& h_grid)
{
  detail::require_order_two(kernel);
  return detail::grid_argmin(h_grid, [&](double h) {
    try {
      double v = std::abs(abias_theta(r, h, theta_next, profile, kernel, quad));
      return std::isfinite(v) ? v : detail::objective_overflow;
    } catch (const numerical_error&) {
      return detail::objective_overflow;
    }
  });
}

//! Grid argmin of the AMISE (R_n excluded).
inline double minimize_amise(double theta_k,
                             const ErrorProfile& profile,
                             const Kernel& kernel,
                             QuadratureSpec quad,
                             const std::vector<double>& h_grid)
{
  detail::require_order_two(kernel);
  if (!(theta_k >= 0.0))
    throw std::invalid_argument("theta must be non-negative");
  return detail::grid_argmin(h_grid, [&](double h) {
    try {
      double v = amise(theta_k, profile, kernel, h, quad);
      return std::isfinite(v) ? v : detail::objective_overflow;
    } catch (const numerical_error&) {
      return detail::objective_overflow;
    }
  });
}

//! Two-stage plug-in: sigma_x -> normal-reference theta_4 -> h_3 -> theta_hat_3
//! -> h_2 -> theta_hat_2 -> AMISE minimizer.
inline PluginTrace plugin_bandwidth(const HetSample& sample,
                                    const Kernel& kernel,
                                    QuadratureSpec quad = {},
                                    const PluginConfig& cfg = {})
{
  detail::require_order_two(kernel);
  PluginTrace trace;
  trace.grid = cfg.grid_for(sample);
  std::vector<double> h_grid = trace.grid.values();

  const auto& ys = sample.ys();
  if (std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); })) {
    trace.degenerate_sample = true;
    trace.h = h_grid.front();
    return trace;
  }

  const auto& profile = sample.profile();
  trace.sigma_x_sq = cfg.sigma_x_sq ? *cfg.sigma_x_sq : estimate_sigma_x(sample);
  trace.theta4 = theta_normal_ref(2, std::sqrt(trace.sigma_x_sq));
  trace.h3 = select_stage_bandwidth(profile, 3, trace.theta4, kernel, quad, h_grid);
  trace.theta3 = theta_hat(sample, 3, kernel, trace.h3, quad);
  trace.h2 = select_stage_bandwidth(profile, 2, trace.theta3, kernel, quad, h_grid);
  trace.theta2 = theta_hat(sample, 2, kernel, trace.h2, quad);
  trace.h = minimize_amise(trace.theta2, profile, kernel, quad, h_grid);
  return trace;
}

} // namespace hetdecon
