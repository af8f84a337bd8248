#pragma once

#include <hetdecon/hetdecon.hpp>
#include <hetdecon/io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace hetdecon::cli {

//! Exit statuses of run().
inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 1;
inline constexpr int exit_numeric = 2;

//! Parsed command line. `bandwidth` is a number or "plugin".
struct RunConfig
{
  std::string command;
  std::string data;
  std::string replicates;
  std::string models;
  std::string kernel = "k2";
  std::string bandwidth = "plugin";
  std::vector<double> grid; // lo hi points
  std::size_t quad = 4097;
  std::size_t plugin_quad = 1025;
  std::string weights = "psi";
  double ridge = 0.0;
  unsigned derivative = 0;
  bool clip = false;
  std::string out;
  std::string summary;
  bool verbose = false;

  // scenario fields
  int density = 1;
  std::string errors = "i";
  std::size_t n = 100;
  std::size_t reps = 500;
  std::uint64_t seed = 0;
  bool naive = false;
  unsigned threads = 0;

  // risk / diagnose
  std::vector<double> h_grid; // lo hi points
  double omega = 1.0;
  double t_max = 10.0;
  std::size_t t_points = 201;
};

namespace detail {

//! Worker count from --threads, capped by HETDECON_THREADS (0 = auto).
inline unsigned worker_count(unsigned requested)
{
  unsigned threads = resolve_threads(requested);
  if (const char* env = std::getenv("HETDECON_THREADS")) {
    unsigned cap = io::parse_unsigned(env, "HETDECON_THREADS");
    if (cap > 0)
      threads = std::min(threads, cap);
  }
  return threads;
}

inline std::vector<double> grid_from(const std::vector<double>& spec, const char* flag)
{
  if (spec.size() != 3)
    throw io::parse_error(std::string(flag) + " expects <min> <max> <points>");
  double count = spec[2];
  if (!(count >= 2.0) || count != std::floor(count))
    throw io::parse_error(std::string(flag) + " needs an integer point count >= 2");
  return linear_grid(spec[0], spec[1], static_cast<std::size_t>(count));
}

inline std::optional<double> numeric_bandwidth(const std::string& text)
{
  if (text == "plugin")
    return std::nullopt;
  double h = io::parse_double(text, "--bandwidth");
  if (!(h > 0.0))
    throw io::parse_error("--bandwidth must be positive or 'plugin'");
  return h;
}

inline void print_trace(std::ostream& out, const PluginTrace& t)
{
  out << "grid " << io::format_double(t.grid.min) << ' ' << io::format_double(t.grid.max) << ' '
      << t.grid.count << '\n';
  if (t.degenerate_sample) {
    out << "warning all observations equal; bandwidth set to the grid minimum\n";
    return;
  }
  out << "sigma_x_sq " << io::format_double(t.sigma_x_sq) << '\n'
      << "theta4 " << io::format_double(t.theta4) << '\n'
      << "h3 " << io::format_double(t.h3) << '\n'
      << "theta3 " << io::format_double(t.theta3) << '\n'
      << "h2 " << io::format_double(t.h2) << '\n'
      << "theta2 " << io::format_double(t.theta2) << '\n';
}

inline HetSample load_observations(const RunConfig& rc)
{
  if (rc.data.empty() || rc.models.empty())
    throw io::parse_error("--data and --models are required");
  return io::read_observations(rc.data, io::read_model_config(rc.models));
}

inline int cmd_estimate(const RunConfig& rc, std::ostream& out)
{
  EstimatorConfig cfg;
  cfg.kernel = Kernel::from_name(rc.kernel);
  cfg.x_grid = grid_from(rc.grid, "--grid");
  cfg.quad = QuadratureSpec{ rc.quad };
  cfg.weights = weight_source_from_name(rc.weights);
  cfg.ridge = rc.ridge;
  cfg.derivative = rc.derivative;
  cfg.clip_and_renormalize = rc.clip;
  auto h = numeric_bandwidth(rc.bandwidth);

  DensityEstimate est;
  if (cfg.weights == WeightSource::ridge) {
    if (rc.replicates.empty())
      throw io::parse_error("ridge weights need --replicates");
    if (!h)
      throw io::parse_error("ridge weights need a numeric --bandwidth");
    cfg.bandwidth = *h;
    est = estimate_density(io::read_replicates(rc.replicates), cfg);
  } else {
    if (!rc.replicates.empty())
      throw io::parse_error("--replicates is only used with --weights ridge");
    HetSample sample = load_observations(rc);
    if (h) {
      cfg.bandwidth = *h;
    } else {
      PluginTrace trace = plugin_bandwidth(sample, cfg.kernel, QuadratureSpec{ rc.plugin_quad });
      cfg.bandwidth = trace.h;
      if (rc.verbose)
        print_trace(out, trace);
    }
    est = estimate_density(sample, cfg);
  }
  if (rc.verbose) {
    out << "h " << io::format_double(est.bandwidth) << '\n'
        << "max_imag_discarded " << io::format_double(est.max_imag_discarded) << '\n';
  }
  io::write_atomic(rc.out, io::estimate_csv(est));
  return exit_ok;
}

inline int cmd_bandwidth(const RunConfig& rc, std::ostream& out)
{
  HetSample sample = load_observations(rc);
  PluginTrace trace =
    plugin_bandwidth(sample, Kernel::from_name(rc.kernel), QuadratureSpec{ rc.plugin_quad });
  if (rc.verbose)
    print_trace(out, trace);
  out << "h " << io::format_double(trace.h) << '\n';
  return exit_ok;
}

inline int cmd_risk(const RunConfig& rc, std::ostream& out)
{
  NormalMixture fx = target_density(rc.density);
  ErrorProfile profile = [&] {
    if (!rc.data.empty() || !rc.models.empty())
      return load_observations(rc).profile();
    ScenarioDesign d = build_scenario(rc.density, error_scenario_from_name(rc.errors), rc.n);
    return ErrorProfile::from_observations(d.models);
  }();
  Kernel kernel = Kernel::from_name(rc.kernel);
  std::vector<RiskReport> rows;
  for (double h : grid_from(rc.h_grid, "--h-grid"))
    rows.push_back(exact_mise(fx, profile, kernel, h, QuadratureSpec{ rc.quad }));
  if (rc.verbose) {
    for (const auto& r : rows)
      out << io::format_double(r.h) << ' ' << io::format_double(r.mise) << '\n';
  }
  io::write_atomic(rc.out, io::risk_csv(rows));
  return exit_ok;
}

inline int cmd_simulate(const RunConfig& rc, std::ostream& out)
{
  Scenario sc;
  sc.density_id = rc.density;
  sc.errors = error_scenario_from_name(rc.errors);
  sc.n = rc.n;
  sc.replications = rc.reps;
  sc.seed = rc.seed;
  sc.kernel = Kernel::from_name(rc.kernel);
  sc.fixed_bandwidth = numeric_bandwidth(rc.bandwidth);
  sc.ignore_errors = rc.naive;
  sc.estimate_quad = QuadratureSpec{ rc.quad };
  sc.plugin_quad = QuadratureSpec{ rc.plugin_quad };
  sc.threads = worker_count(rc.threads);
  if (!rc.grid.empty())
    sc.x_grid = grid_from(rc.grid, "--grid");

  ExperimentResult res = run_experiment(sc);

  std::string summary_path = rc.summary.empty() ? rc.out + ".summary.csv" : rc.summary;
  nlohmann::ordered_json meta;
  meta["rng"] = res.rng;
  meta["seed"] = sc.seed;
  meta["density"] = sc.density_id;
  meta["errors"] = to_string(sc.errors);
  meta["n"] = sc.n;
  meta["replications"] = sc.replications;
  meta["failures"] = res.failures;
  meta["kernel"] = sc.kernel.name();
  meta["bandwidth"] = rc.bandwidth;
  meta["ignore_errors"] = sc.ignore_errors;
  meta["estimate_quadrature_nodes"] = sc.estimate_quad.node_count;
  meta["plugin_quadrature_nodes"] = sc.plugin_quad.node_count;
  meta["summary"] = summary_path;

  io::write_atomic(summary_path, io::summary_csv(res));
  io::write_atomic(io::metadata_path(rc.out), meta.dump(2) + "\n");
  io::write_atomic(rc.out, io::bands_csv(res.bands));
  out << "replications " << sc.replications << " failures " << res.failures << '\n';
  out << "median_ise " << io::format_double(median(ise_values(res))) << '\n';
  return exit_ok;
}

inline int cmd_diagnose(const RunConfig& rc, std::ostream& out)
{
  if (rc.models.empty())
    throw io::parse_error("--models is required");
  io::ModelConfig cfg = io::read_model_config(rc.models);
  std::vector<ErrorModel> per_observation;
  if (!rc.data.empty()) {
    HetSample sample = io::read_observations(rc.data, cfg);
    for (std::size_t j = 0; j < sample.size(); ++j)
      per_observation.push_back(sample.model_of(j));
  } else {
    per_observation = cfg.models;
  }
  ErrorProfile profile = ErrorProfile::from_observations(per_observation);

  bool all_stable = std::all_of(per_observation.begin(), per_observation.end(), [](const auto& m) {
    return m.template is<models::StableSymmetric>();
  });
  if (all_stable)
    out << "diagnostic " << io::format_double(consistency_diagnostic(per_observation, rc.omega))
        << '\n';
  else
    out << "diagnostic n/a (needs stable error models)\n";

  if (!(rc.t_max > 0.0) || rc.t_points < 2)
    throw io::parse_error("--t-max must be positive and --t-points at least 2");
  double min_value = std::numeric_limits<double>::infinity();
  double min_t = 0.0;
  for (double t : linear_grid(0.0, rc.t_max, rc.t_points)) {
    double v = profile.sum_abs2(t);
    if (v < min_value) {
      min_value = v;
      min_t = t;
    }
  }
  out << "min_sum_abs2 " << io::format_double(min_value) << " at_t " << io::format_double(min_t)
      << '\n';
  return exit_ok;
}

} // namespace detail

//! Runs one command line. Diagnostics go to `err` as a single line.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  RunConfig rc;
  CLI::App app{ "Heteroscedastic deconvolution kernel density estimation", "hetdecon" };
  app.require_subcommand(1);

  auto add_common = [&rc](CLI::App* sub) {
    sub->add_option("--kernel", rc.kernel, "sinc or k2")->capture_default_str();
    sub->add_option("--quad", rc.quad, "Simpson nodes for the estimate / risk integrals")
      ->capture_default_str();
    sub->add_option("--plugin-quad", rc.plugin_quad, "Simpson nodes inside the plug-in selector")
      ->capture_default_str();
    sub->add_flag("--verbose", rc.verbose, "print intermediate quantities");
  };

  auto* est = app.add_subcommand("estimate", "estimate the density of X on a grid");
  est->add_option("--data", rc.data, "observations CSV (y,model_id)");
  est->add_option("--replicates", rc.replicates, "replicates CSV (subject,y)");
  est->add_option("--models", rc.models, "model config file");
  est->add_option("--bandwidth", rc.bandwidth, "number or 'plugin'")->capture_default_str();
  est->add_option("--grid", rc.grid, "min max points")->expected(3)->required();
  est->add_option("--weights", rc.weights, "psi, phi or ridge")->capture_default_str();
  est->add_option("--ridge", rc.ridge, "ridge parameter for --weights ridge");
  est->add_option("--derivative", rc.derivative, "derivative order")->capture_default_str();
  est->add_flag("--clip", rc.clip, "clip negative values and renormalize on the grid");
  est->add_option("--out", rc.out, "output CSV (x,f)")->required();
  add_common(est);

  auto* bw = app.add_subcommand("bandwidth", "plug-in bandwidth");
  bw->add_option("--data", rc.data, "observations CSV (y,model_id)")->required();
  bw->add_option("--models", rc.models, "model config file")->required();
  add_common(bw);

  auto* risk = app.add_subcommand("risk", "exact MISE decomposition over a bandwidth grid");
  risk->add_option("--density", rc.density, "target density 1 or 2")->capture_default_str();
  risk->add_option("--data", rc.data, "observations CSV defining the error profile");
  risk->add_option("--models", rc.models, "model config file");
  risk->add_option("--errors", rc.errors, "scenario i, ii, iii or iv (without --data)")
    ->capture_default_str();
  risk->add_option("--n", rc.n, "sample size (without --data)")->capture_default_str();
  risk->add_option("--h-grid", rc.h_grid, "min max points")->expected(3)->required();
  risk->add_option("--out", rc.out, "output CSV")->required();
  add_common(risk);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study of one scenario");
  sim->add_option("--density", rc.density, "target density 1 or 2")->capture_default_str();
  sim->add_option("--errors", rc.errors, "scenario i, ii, iii or iv")->capture_default_str();
  sim->add_option("--n", rc.n, "sample size")->capture_default_str();
  sim->add_option("--reps", rc.reps, "replications")->capture_default_str();
  sim->add_option("--seed", rc.seed, "seed")->capture_default_str();
  sim->add_option("--bandwidth", rc.bandwidth, "number or 'plugin'")->capture_default_str();
  sim->add_option("--grid", rc.grid, "min max points")->expected(3);
  sim->add_flag("--naive", rc.naive, "ignore the errors (classical KDE)");
  sim->add_option("--threads", rc.threads, "worker threads (0 = auto)")->capture_default_str();
  sim->add_option("--summary", rc.summary, "per-replication CSV (default <out>.summary.csv)");
  sim->add_option("--out", rc.out, "quantile band CSV")->required();
  add_common(sim);

  auto* diag = app.add_subcommand("diagnose", "consistency diagnostics of an error configuration");
  diag->add_option("--models", rc.models, "model config file")->required();
  diag->add_option("--data", rc.data, "observations CSV; weights models by their counts");
  diag->add_option("--omega", rc.omega, "frequency of the stable diagnostic")->capture_default_str();
  diag->add_option("--t-max", rc.t_max, "upper end of the t-grid")->capture_default_str();
  diag->add_option("--t-points", rc.t_points, "t-grid points")->capture_default_str();
  add_common(diag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input;
  }

  try {
    if (*est)
      return detail::cmd_estimate(rc, out);
    if (*bw)
      return detail::cmd_bandwidth(rc, out);
    if (*risk)
      return detail::cmd_risk(rc, out);
    if (*sim)
      return detail::cmd_simulate(rc, out);
    return detail::cmd_diagnose(rc, out);
  } catch (const numerical_error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numeric;
  } catch (const identification_failure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numeric;
  } catch (const infinite_variance& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_input;
  }
}

} // namespace hetdecon::cli
