#pragma once

#include "bandwidth.hpp"
#include "error_models.hpp"
#include "estimator.hpp"
#include "kernels.hpp"
#include "random.hpp"
#include "risk.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hetdecon {

//! Error scenarios of the simulation study.
//!  i   first half normal, second half Laplace, same variance
//!  ii  first half normal, second half error-free
//!  iii normal errors averaged over 1, 2 or 10 replicates (25/50/25 %)
//!  iv  normal with variance growing linearly in the index
enum class ErrorScenario
{
  i,
  ii,
  iii,
  iv
};

inline ErrorScenario error_scenario_from_name(const std::string& name)
{
  if (name == "i")
    return ErrorScenario::i;
  if (name == "ii")
    return ErrorScenario::ii;
  if (name == "iii")
    return ErrorScenario::iii;
  if (name == "iv")
    return ErrorScenario::iv;
  throw std::invalid_argument("unknown error scenario '" + name + "' (expected i, ii, iii or iv)");
}

inline std::string to_string(ErrorScenario e)
{
  static const char* names[] = { "i", "ii", "iii", "iv" };
  return names[static_cast<int>(e)];
}

//! density (1): 0.5 N(-3, 1) + 0.5 N(2, 1)
//! density (2): 0.75 N(0, 1) + 0.25 N(1.5, 1/81)
inline NormalMixture target_density(int density_id)
{
  switch (density_id) {
    case 1:
      return NormalMixture({ { 0.5, -3.0, 1.0 }, { 0.5, 2.0, 1.0 } });
    case 2:
      return NormalMixture({ { 0.75, 0.0, 1.0 }, { 0.25, 1.5, 1.0 / 81.0 } });
    default:
      throw std::invalid_argument("unknown density id " + std::to_string(density_id) +
                                  " (expected 1 or 2)");
  }
}

//! Default evaluation grids: 81 points over [-6.5, 5.5] or [-4, 4].
inline std::vector<double> default_x_grid(int density_id)
{
  if (density_id == 1)
    return linear_grid(-6.5, 5.5, 81);
  if (density_id == 2)
    return linear_grid(-4.0, 4.0, 81);
  throw std::invalid_argument("unknown density id " + std::to_string(density_id));
}

//! Target density and per-observation error assignment of one scenario.
struct ScenarioDesign
{
  NormalMixture fx;
  std::vector<ErrorModel> models;   // error of each (averaged) observation
  std::vector<unsigned> replicates; // replicate count per observation
  ErrorModel base;                  // single-replicate error for scenario iii
  double error_variance = 0.0;      // calibrated sigma_1^2 or sigma_3^2
};

//! Replicate counts 1 / 2 / 10 in proportions 25 / 50 / 25 %, with
//! largest-remainder rounding when n is not divisible by 4.
inline std::vector<unsigned> replicate_mix(std::size_t n)
{
  const std::array<double, 3> share{ 0.25, 0.5, 0.25 };
  const std::array<unsigned, 3> reps{ 1, 2, 10 };
  std::array<std::size_t, 3> count{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int g = 0; g < 3; ++g) {
    double exact = share[g] * static_cast<double>(n);
    count[g] = static_cast<std::size_t>(std::floor(exact));
    remainder[g] = exact - static_cast<double>(count[g]);
    assigned += count[g];
  }
  while (assigned < n) {
    int best = 0;
    for (int g = 1; g < 3; ++g) {
      if (remainder[g] > remainder[best])
        best = g;
    }
    ++count[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  std::vector<unsigned> out;
  out.reserve(n);
  for (int g = 0; g < 3; ++g)
    out.insert(out.end(), count[g], reps[g]);
  return out;
}

inline ScenarioDesign build_scenario(int density_id, ErrorScenario errors, std::size_t n)
{
  if (n == 0)
    throw std::invalid_argument("sample size must be positive");
  NormalMixture fx = target_density(density_id);
  double var_x = fx.variance();
  double noise_share = density_id == 1 ? 0.25 : 0.10;
  double linear_share = density_id == 1 ? 0.10 : 0.05;

  ScenarioDesign d{ fx, {}, std::vector<unsigned>(n, 1), ErrorModel::degenerate(), 0.0 };
  d.models.reserve(n);
  switch (errors) {
    case ErrorScenario::i:
    case ErrorScenario::ii: {
      if (n % 2 != 0)
        throw std::invalid_argument("scenarios i and ii split the sample in halves; n must be even");
      d.error_variance = noise_share * var_x;
      ErrorModel first = ErrorModel::normal(0.0, d.error_variance);
      ErrorModel second = errors == ErrorScenario::i
                            ? ErrorModel::laplace(std::sqrt(d.error_variance / 2.0))
                            : ErrorModel::degenerate();
      d.models.assign(n / 2, first);
      d.models.insert(d.models.end(), n / 2, second);
      break;
    }
    case ErrorScenario::iii: {
      d.error_variance = noise_share * var_x;
      d.base = ErrorModel::normal(0.0, d.error_variance);
      d.replicates = replicate_mix(n);
      for (unsigned r : d.replicates)
        d.models.push_back(ErrorModel::averaged(d.base, r));
      break;
    }
    case ErrorScenario::iv: {
      d.error_variance = linear_share * var_x;
      for (std::size_t i = 1; i <= n; ++i) {
        double growth = 1.0 + static_cast<double>(i) / static_cast<double>(n);
        d.models.push_back(ErrorModel::normal(0.0, d.error_variance * growth));
      }
      break;
    }
  }
  return d;
}

//! Draws one contaminated sample. Scenario iii draws every replicate and
//! returns subject means.
inline HetSample draw_sample(const ScenarioDesign& d, RandomStream& rs)
{
  std::size_t n = d.models.size();
  std::vector<double> ys(n);
  for (std::size_t j = 0; j < n; ++j) {
    double x = d.fx.sample(rs);
    unsigned r = d.replicates[j];
    if (r > 1) {
      double sum = 0.0;
      for (unsigned k = 0; k < r; ++k)
        sum += x + d.base.sample(rs);
      ys[j] = sum / r;
    } else {
      ys[j] = x + d.models[j].sample(rs);
    }
  }
  // share model objects between equal neighbours to keep the profile small
  std::vector<ErrorModel> models;
  std::vector<std::size_t> index(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!models.empty() && models.back() == d.models[j]) {
      index[j] = models.size() - 1;
    } else {
      models.push_back(d.models[j]);
      index[j] = models.size() - 1;
    }
  }
  return HetSample(std::move(ys), std::move(index), std::move(models));
}

//! Trapezoid integral of (f̂ - f_X)^2 over the estimate's grid.
inline double ise(const DensityEstimate& estimate, const NormalMixture& truth)
{
  const auto& x = estimate.x;
  if (x.size() < 2)
    throw std::invalid_argument("ISE needs at least two grid points");
  auto sq = [&](std::size_t k) {
    double d = estimate.values[k] - truth.pdf(x[k]);
    return d * d;
  };
  double total = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    if (!(x[k] > x[k - 1]))
      throw std::invalid_argument("ISE grid must be increasing");
    total += 0.5 * (sq(k) + sq(k - 1)) * (x[k] - x[k - 1]);
  }
  return total;
}

//! Full-line ISE of the Ψ_n estimate via Parseval:
//! (2π)^{-1} [int_{|t|<=1/h} |K^ft(th) Ψ_n(t) - f_X^ft(t)|^2 dt
//!            + int_{|t|>1/h} |f_X^ft(t)|^2 dt].
inline double ise_frequency(const HetSample& sample,
                            const Kernel& kernel,
                            double h,
                            const NormalMixture& truth,
                            QuadratureSpec quad = {})
{
  auto nodes = detail::frequency_nodes(kernel, h, quad);
  std::vector<complex> scratch;
  double inside = 0.0;
  for (std::size_t i = 0; i < nodes.t.size(); ++i) {
    double t = nodes.t[i];
    complex est = nodes.kernel_ft[i] == 0.0
                    ? complex(0.0)
                    : nodes.kernel_ft[i] * detail::psi_at(sample, t, scratch);
    inside += nodes.weight[i] * std::norm(est - truth.ft(t));
  }
  return (inside + detail::tail_integral(truth, h, quad)) / (2.0 * pi);
}

struct Scenario
{
  int density_id = 1;
  ErrorScenario errors = ErrorScenario::i;
  std::size_t n = 100;
  std::size_t replications = 500;
  std::vector<double> x_grid; // empty: default_x_grid(density_id)
  std::uint64_t seed = 0;
  Kernel kernel = Kernel::k2();
  std::optional<double> fixed_bandwidth; // empty: plug-in
  bool ignore_errors = false;            // classical KDE on the contaminated data
  QuadratureSpec estimate_quad{ 4097 };
  QuadratureSpec plugin_quad{ 1025 };
  PluginConfig plugin{};
  unsigned threads = 0; // 0: hardware concurrency
};

struct ReplicationResult
{
  double h = 0.0;
  double ise = 0.0;      // full-line L2 (Parseval)
  double ise_grid = 0.0; // trapezoid on the evaluation grid
  std::vector<double> values;
  bool failed = false;
  std::string failure;
};

inline constexpr std::array<double, 5> band_levels{ 0.1, 0.25, 0.5, 0.75, 0.9 };

struct QuantileBands
{
  std::vector<double> x;
  std::vector<double> truth;
  std::array<std::vector<double>, 5> q; // q[k] at band_levels[k]
};

struct ExperimentResult
{
  QuantileBands bands;
  std::vector<ReplicationResult> replications;
  std::size_t failures = 0;
  std::string rng = Philox4x32::algorithm_name;
};

//! Quantile with linear interpolation between order statistics of a sorted
//! sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p)
{
  if (sorted.empty())
    throw std::invalid_argument("quantile of an empty sample");
  double pos = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

//! Worker count: `requested`, or the hardware concurrency when 0.
inline unsigned resolve_threads(unsigned requested)
{
  if (requested > 0)
    return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

//! Runs body(i) for i in [0, count) on `threads` workers. Each index is
//! processed exactly once; results must be written to index-owned slots.
template<class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body)
{
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr error;
  std::atomic<bool> failed{ false };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load())
          return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true))
            error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

//! One replication: draw, select the bandwidth, estimate on the grid.
inline ReplicationResult run_replication(const Scenario& sc,
                                         const ScenarioDesign& design,
                                         const std::vector<double>& grid,
                                         std::size_t index)
{
  ReplicationResult out;
  try {
    RandomStream rs(sc.seed, index);
    HetSample sample = draw_sample(design, rs);
    if (sc.ignore_errors)
      sample = sample.ignoring_errors();
    out.h = sc.fixed_bandwidth
              ? *sc.fixed_bandwidth
              : plugin_bandwidth(sample, sc.kernel, sc.plugin_quad, sc.plugin).h;
    EstimatorConfig cfg;
    cfg.kernel = sc.kernel;
    cfg.bandwidth = out.h;
    cfg.x_grid = grid;
    cfg.quad = sc.estimate_quad;
    DensityEstimate est = estimate_density(sample, cfg);
    out.ise_grid = ise(est, design.fx);
    out.ise = ise_frequency(sample, sc.kernel, out.h, design.fx, sc.estimate_quad);
    out.values = std::move(est.values);
  } catch (const std::exception& e) {
    out.failed = true;
    out.failure = e.what();
  }
  return out;
}

//! Monte Carlo study of one scenario. Replication i uses Philox stream i of
//! `seed`, so results do not depend on the worker count.
inline ExperimentResult run_experiment(const Scenario& sc)
{
  if (sc.replications == 0)
    throw std::invalid_argument("need at least one replication");
  ScenarioDesign design = build_scenario(sc.density_id, sc.errors, sc.n);
  std::vector<double> grid = sc.x_grid.empty() ? default_x_grid(sc.density_id) : sc.x_grid;

  ExperimentResult res;
  res.replications.resize(sc.replications);
  parallel_for(sc.replications, resolve_threads(sc.threads), [&](std::size_t i) {
    res.replications[i] = run_replication(sc, design, grid, i);
  });

  std::vector<const ReplicationResult*> ok;
  for (const auto& r : res.replications) {
    if (r.failed)
      ++res.failures;
    else
      ok.push_back(&r);
  }

  res.bands.x = grid;
  res.bands.truth.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    res.bands.truth[k] = design.fx.pdf(grid[k]);
  if (ok.empty())
    throw numerical_error("every replication failed: " + res.replications.front().failure);
  for (auto& q : res.bands.q)
    q.resize(grid.size());
  std::vector<double> column(ok.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t r = 0; r < ok.size(); ++r)
      column[r] = ok[r]->values[k];
    std::sort(column.begin(), column.end());
    for (std::size_t b = 0; b < band_levels.size(); ++b)
      res.bands.q[b][k] = quantile_sorted(column, band_levels[b]);
  }
  return res;
}

//! Per-replication ISE (full-line) of the successful replications.
inline std::vector<double> ise_values(const ExperimentResult& res)
{
  std::vector<double> v;
  for (const auto& r : res.replications) {
    if (!r.failed)
      v.push_back(r.ise);
  }
  return v;
}

} // namespace hetdecon
