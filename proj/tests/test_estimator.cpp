#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

#include <hetdecon/estimator.hpp>
#include <hetdecon/random.hpp>

using namespace hetdecon;
using Catch::Approx;

namespace {

std::vector<double> normal_draws(std::size_t n, double sd, std::uint64_t seed)
{
  RandomStream rs(seed, 0);
  std::vector<double> ys(n);
  for (double& y : ys)
    y = sd * rs.normal();
  return ys;
}

EstimatorConfig config(Kernel k, double h, std::vector<double> grid)
{
  EstimatorConfig cfg;
  cfg.kernel = std::move(k);
  cfg.bandwidth = h;
  cfg.x_grid = std::move(grid);
  return cfg;
}

double max_abs(const std::vector<double>& v)
{
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

} // namespace

TEST_CASE("psi_n examples", "[estimator]")
{
  auto deg = HetSample::homoscedastic({ 0.0 }, ErrorModel::degenerate());
  CHECK(std::abs(psi_n(deg, 2.7) - complex(1.0)) < 1e-15);

  auto nrm = HetSample::homoscedastic({ 0.0 }, ErrorModel::normal(0.0, 1.0));
  for (double t : { 0.5, 1.0, 2.0 })
    CHECK(psi_n(nrm, t).real() == Approx(std::exp(t * t / 2.0)).epsilon(1e-14));

  auto mixed = HetSample::from_models(
    { 0.3, -1.2, 2.5 },
    { ErrorModel::laplace(0.5), ErrorModel::normal(0.2, 0.4), ErrorModel::degenerate() });
  CHECK(std::abs(psi_n(mixed, 0.0) - complex(1.0)) < 1e-15);
  for (double t : { 0.4, 1.7 })
    CHECK(std::abs(psi_n(mixed, -t) - std::conj(psi_n(mixed, t))) < 1e-14);
}

TEST_CASE("phi_n examples", "[estimator]")
{
  std::vector<double> ys{ 0.3, -1.2, 2.5, 0.9 };
  auto deg = HetSample::homoscedastic(ys, ErrorModel::degenerate());
  for (double t : { 0.4, 3.1 })
    CHECK(std::abs(phi_n(deg, t) - empirical_cf(ys, t)) < 1e-15);
  CHECK(std::abs(phi_n(deg, 0.0) - complex(1.0)) < 1e-15);

  // one shared symmetric model: phi_n equals psi_n
  auto lap = HetSample::homoscedastic(ys, ErrorModel::laplace(0.7));
  for (double t : { 0.4, 3.1 })
    CHECK(std::abs(phi_n(lap, t) - psi_n(lap, t)) < 1e-13 * std::abs(psi_n(lap, t)));

  // e^{i pi/2 t} + e^{-i pi/2 t} vanishes at t = 1
  auto cancel = HetSample::from_models(
    { 0.0, 1.0 }, { ErrorModel::normal(pi / 2, 0.1), ErrorModel::normal(-pi / 2, 0.1) });
  CHECK_THROWS_AS(phi_n(cancel, 1.0), degenerate_denominator);
}

TEST_CASE("ridge quotient examples", "[estimator]")
{
  auto reps = ReplicatedSample::from_values({ { 0.1, 0.5 }, { -1.0, -0.2, 0.3 } });
  CHECK(std::abs(phi_hat_ridge(reps, 0.0, 0.1) - complex(1.0)) < 1e-15);
  for (double t : { 0.3, 2.0 })
    CHECK(std::abs(phi_hat_ridge(reps, -t, 0.1) - std::conj(phi_hat_ridge(reps, t, 0.1))) < 1e-15);

  double c = 1.7;
  auto point = ReplicatedSample::from_values({ { c, c }, { c, c, c } });
  for (double t : { 0.5, 4.0 })
    CHECK(std::abs(phi_hat_ridge(point, t, 0.1) - std::exp(complex(0.0, t * c))) < 1e-14);

  // X ~ N(0, 1) with Laplace replicate errors: recovers f_X^ft(1)
  ErrorModel lap = ErrorModel::laplace(0.5);
  RandomStream rs(31, 0);
  std::vector<std::vector<double>> values(10000);
  for (auto& v : values) {
    double x = rs.normal();
    v = { x + lap.sample(rs), x + lap.sample(rs) };
  }
  auto sim = ReplicatedSample::from_values(values);
  CHECK(std::abs(phi_hat_ridge(sim, 1.0, 0.01) - complex(std::exp(-0.5))) < 0.05);
}

TEST_CASE("single point estimates with the sinc kernel", "[estimator]")
{
  auto deg = HetSample::homoscedastic({ 0.0 }, ErrorModel::degenerate());
  auto est = estimate_density(deg, config(Kernel::sinc(), 1.0, { 0.0, pi, 4.0 }));
  CHECK(est.values[0] == Approx(1.0 / pi).epsilon(1e-12));
  CHECK(std::abs(est.values[1]) < 1e-12);
  CHECK(est.values[2] == Approx(std::sin(4.0) / (4.0 * pi)).epsilon(1e-10));
}

TEST_CASE("error-free estimates equal the classical kernel estimator", "[estimator]")
{
  auto ys = normal_draws(50, 1.0, 5);
  auto sample = HetSample::homoscedastic(ys, ErrorModel::degenerate());
  auto grid = linear_grid(-4.0, 4.0, 201);
  for (const Kernel& k : { Kernel::sinc(), Kernel::k2() }) {
    double h = 0.4;
    auto est = estimate_density(sample, config(k, h, grid));
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double ref = oracle::classical_kde(
        ys, k.id() == KernelId::sinc ? oracle::sinc_kernel : oracle::k2_kernel, h, grid[i]);
      worst = std::max(worst, std::abs(est.values[i] - ref));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("homoscedastic errors reduce to the classical deconvolution estimator", "[estimator]")
{
  auto ys = normal_draws(40, 1.2, 8);
  double sigma2 = 0.3;
  ErrorModel err = ErrorModel::normal(0.0, sigma2);
  auto sample = HetSample::homoscedastic(ys, err);
  auto grid = linear_grid(-4.0, 4.0, 41);
  double h = 0.35;
  Kernel k2 = Kernel::k2();
  for (WeightSource w : { WeightSource::psi, WeightSource::phi }) {
    auto cfg = config(k2, h, grid);
    cfg.weights = w;
    auto est = estimate_density(sample, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double ref = oracle::homoscedastic_deconvolution(
        ys, [&](double t) { return complex(std::exp(-0.5 * sigma2 * t * t)); },
        [](double u) { return std::abs(u) <= 1.0 ? std::pow(1.0 - u * u, 3) : 0.0; }, h, grid[i],
        4096);
      worst = std::max(worst, std::abs(est.values[i] - ref));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("estimates are translation equivariant", "[estimator]")
{
  auto ys = normal_draws(30, 1.0, 12);
  std::vector<ErrorModel> per_obs;
  for (std::size_t j = 0; j < ys.size(); ++j)
    per_obs.push_back(j % 2 ? ErrorModel::laplace(0.3) : ErrorModel::normal(0.0, 0.2));
  double shift = 1.25;
  std::vector<double> shifted = ys;
  for (double& y : shifted)
    y += shift;
  auto grid = linear_grid(-3.0, 3.0, 25);
  std::vector<double> grid_shifted = grid;
  for (double& x : grid_shifted)
    x += shift;
  auto a = estimate_density(HetSample::from_models(ys, per_obs), config(Kernel::k2(), 0.4, grid));
  auto b = estimate_density(HetSample::from_models(shifted, per_obs),
                            config(Kernel::k2(), 0.4, grid_shifted));
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(a.values[i] - b.values[i]) < 1e-9);
}

TEST_CASE("estimate diagnostics and normalization", "[estimator]")
{
  auto ys = normal_draws(100, 1.0, 21);
  std::vector<ErrorModel> per_obs;
  for (std::size_t j = 0; j < ys.size(); ++j)
    per_obs.push_back(j < 50 ? ErrorModel::normal(0.0, 0.25) : ErrorModel::laplace(0.35));
  auto sample = HetSample::from_models(ys, per_obs);
  auto grid = linear_grid(-9.0, 9.0, 721);
  auto est = estimate_density(sample, config(Kernel::k2(), 0.45, grid));
  CHECK(est.max_imag_discarded < 1e-8 * max_abs(est.values));
  double mass = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    mass += 0.5 * (est.values[i] + est.values[i - 1]) * (grid[i] - grid[i - 1]);
  CHECK(std::abs(mass - 1.0) < 0.02);

  // Parseval: spatial L2 norm against the frequency-domain one
  double spatial = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    spatial += 0.5 * (est.values[i] * est.values[i] + est.values[i - 1] * est.values[i - 1]) *
               (grid[i] - grid[i - 1]);
  double h = 0.45;
  double freq = oracle::simpson(
                  [&](double t) { return std::norm(Kernel::k2().ft(t * h) * psi_n(sample, t)); },
                  -1.0 / h, 1.0 / h, 4096) /
                (2.0 * pi);
  CHECK(std::abs(spatial - freq) < 1e-4);
}

TEST_CASE("derivative estimates match finite differences", "[estimator]")
{
  auto ys = normal_draws(40, 1.0, 4);
  auto sample = HetSample::homoscedastic(ys, ErrorModel::degenerate());
  double h = 0.5, step = 1e-4;
  std::vector<double> xs{ -1.5, -0.2, 0.7, 2.0 };
  auto cfg1 = config(Kernel::k2(), h, xs);
  cfg1.derivative = 1;
  auto d1 = estimate_density(sample, cfg1);
  std::vector<double> plus = xs, minus = xs;
  for (double& x : plus)
    x += step;
  for (double& x : minus)
    x -= step;
  auto fp = estimate_density(sample, config(Kernel::k2(), h, plus));
  auto fm = estimate_density(sample, config(Kernel::k2(), h, minus));
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(std::abs(d1.values[i] - (fp.values[i] - fm.values[i]) / (2 * step)) < 1e-4);
}

TEST_CASE("ridge estimates from replicates", "[estimator]")
{
  ErrorModel err = ErrorModel::normal(0.0, 0.2);
  RandomStream rs(41, 0);
  std::vector<std::vector<double>> values(400);
  for (auto& v : values) {
    double x = rs.normal();
    v = { x + err.sample(rs), x + err.sample(rs) };
  }
  auto reps = ReplicatedSample::from_values(values);
  auto cfg = config(Kernel::k2(), 0.4, linear_grid(-4.0, 4.0, 81));
  cfg.weights = WeightSource::ridge;
  cfg.ridge = 1.0;
  auto est = estimate_density(reps, cfg);
  double peak = est.values[40];
  // target is the kernel-smoothed N(0, 1) density at zero
  double smoothed = oracle::simpson(
                      [](double t) {
                        double u = 1.0 - 0.16 * t * t;
                        return u * u * u * std::exp(-0.5 * t * t);
                      },
                      -2.5, 2.5, 2000) /
                    (2 * pi);
  CHECK(peak == Approx(smoothed).margin(0.03));
  CHECK(est.max_imag_discarded < 1e-8 * max_abs(est.values));

  auto psi_cfg = cfg;
  psi_cfg.weights = WeightSource::psi;
  CHECK_THROWS_AS(estimate_density(reps, psi_cfg), std::invalid_argument);
  cfg.ridge = 0.0;
  CHECK_THROWS_AS(estimate_density(reps, cfg), std::invalid_argument);
  auto single = ReplicatedSample::from_values({ { 1.0 }, { 2.0 } });
  cfg.ridge = 1.0;
  CHECK_THROWS_AS(estimate_density(single, cfg), insufficient_replicates);
}

TEST_CASE("configuration validation", "[estimator]")
{
  auto sample = HetSample::homoscedastic({ 0.0, 1.0 }, ErrorModel::degenerate());
  CHECK_THROWS_AS(estimate_density(sample, config(Kernel::k2(), 0.0, { 0.0 })),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_density(sample, config(Kernel::k2(), 1.0, {})), std::invalid_argument);
  CHECK_THROWS_AS(estimate_density(sample, config(Kernel::k2(), 1.0, { 1.0, 0.0 })),
                  std::invalid_argument);
  auto ridge = config(Kernel::k2(), 1.0, { 0.0 });
  ridge.weights = WeightSource::ridge;
  ridge.ridge = 1.0;
  CHECK_THROWS_AS(estimate_density(sample, ridge), std::invalid_argument);
  CHECK(weight_source_from_name("phi") == WeightSource::phi);
  CHECK_THROWS_AS(weight_source_from_name("other"), std::invalid_argument);
}

TEST_CASE("clipping is presentation only", "[estimator]")
{
  auto sample = HetSample::homoscedastic({ -2.0, 0.0, 2.5 }, ErrorModel::normal(0.0, 0.3));
  auto grid = linear_grid(-8.0, 8.0, 321);
  auto raw = estimate_density(sample, config(Kernel::k2(), 0.3, grid));
  auto cfg = config(Kernel::k2(), 0.3, grid);
  cfg.clip_and_renormalize = true;
  auto clipped = estimate_density(sample, cfg);
  bool raw_negative = false;
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    raw_negative |= raw.values[i] < 0.0;
    CHECK(clipped.values[i] >= 0.0);
    if (i > 0)
      mass += 0.5 * (clipped.values[i] + clipped.values[i - 1]) * (grid[i] - grid[i - 1]);
  }
  CHECK(raw_negative);
  CHECK(mass == Approx(1.0).epsilon(1e-12));
}
