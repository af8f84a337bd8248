#pragma once

#include "exceptions.hpp"
#include "fourier.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hetdecon {

class ErrorModel;

namespace models {

//! Point mass at zero (error-free observation).
struct Degenerate
{};

struct Normal
{
  double mean = 0.0;
  double variance = 1.0;
};

//! Laplace with scale b: density exp(-|x|/b)/(2b), variance 2b^2.
struct Laplace
{
  double scale = 1.0;
};

//! Symmetric stable family with cf exp(-sigma^gamma |t|^gamma / 2).
//! gamma = 1 is Cauchy with scale sigma/2, gamma = 2 is N(0, sigma^2).
struct StableSymmetric
{
  double scale = 1.0;
  double exponent = 2.0;
};

//! Mean of r i.i.d. draws from `base`.
struct Averaged
{
  std::shared_ptr<const ErrorModel> base;
  unsigned replicates = 1;
};

//! Symmetric error cf estimated from replicate differences, tabulated on
//! [0, t_max] and clamped to [floor, 1].
struct EmpiricalSymmetric
{
  ComplexFunctionTable table;
  double floor = 0.0;
};

} // namespace models

//! Distribution of one measurement error, known through its characteristic
//! function f^ft(t) = E exp(itε).
class ErrorModel
{
public:
  using variant_type = std::variant<models::Degenerate,
                                    models::Normal,
                                    models::Laplace,
                                    models::StableSymmetric,
                                    models::Averaged,
                                    models::EmpiricalSymmetric>;

  ErrorModel()
    : v_(models::Degenerate{})
  {}

  static ErrorModel degenerate() { return ErrorModel(models::Degenerate{}); }

  static ErrorModel normal(double mean, double variance)
  {
    if (!std::isfinite(mean) || !std::isfinite(variance) || variance < 0.0)
      throw std::invalid_argument("normal error model needs a finite mean and variance >= 0");
    return ErrorModel(models::Normal{ mean, variance });
  }

  static ErrorModel laplace(double scale)
  {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw std::invalid_argument("laplace error model needs scale > 0");
    return ErrorModel(models::Laplace{ scale });
  }

  static ErrorModel stable(double scale, double exponent)
  {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw std::invalid_argument("stable error model needs scale > 0");
    if (!(exponent >= 1.0 && exponent <= 2.0))
      throw std::invalid_argument("stable error model needs exponent in [1, 2]");
    return ErrorModel(models::StableSymmetric{ scale, exponent });
  }

  static ErrorModel empirical(ComplexFunctionTable table, double floor)
  {
    if (!(floor > 0.0 && floor <= 1.0))
      throw std::invalid_argument("empirical error cf floor must lie in (0, 1]");
    return ErrorModel(models::EmpiricalSymmetric{ std::move(table), floor });
  }

  //! Error of the mean of r replicates. Normal bases stay normal with
  //! variance / r; r = 1 returns the base unchanged.
  static ErrorModel averaged(const ErrorModel& base, unsigned r)
  {
    if (r == 0)
      throw std::invalid_argument("replicate count must be at least 1");
    if (r == 1 || base.is<models::Degenerate>())
      return base;
    if (auto* nm = base.get_if<models::Normal>())
      return normal(nm->mean, nm->variance / r);
    if (auto* av = base.get_if<models::Averaged>())
      return ErrorModel(models::Averaged{ av->base, av->replicates * r });
    return ErrorModel(models::Averaged{ std::make_shared<const ErrorModel>(base), r });
  }

  const variant_type& variant() const { return v_; }

  template<class T>
  bool is() const
  {
    return std::holds_alternative<T>(v_);
  }

  template<class T>
  const T* get_if() const
  {
    return std::get_if<T>(&v_);
  }

  //! Characteristic function at t.
  complex cf(double t) const
  {
    return std::visit([t](const auto& m) { return cf_of(m, t); }, v_);
  }

  //! |cf(t)|^2, with closed forms that avoid complex arithmetic.
  double cf_abs2(double t) const
  {
    if (is<models::Degenerate>())
      return 1.0;
    if (auto* nm = get_if<models::Normal>())
      return std::exp(-nm->variance * t * t);
    if (auto* lp = get_if<models::Laplace>()) {
      double c = 1.0 / (1.0 + lp->scale * lp->scale * t * t);
      return c * c;
    }
    if (auto* st = get_if<models::StableSymmetric>())
      return std::exp(-std::pow(st->scale * std::abs(t), st->exponent));
    return std::norm(cf(t));
  }

  //! True when the cf is real (symmetric error density).
  bool symmetric() const
  {
    if (auto* nm = get_if<models::Normal>())
      return nm->mean == 0.0;
    if (auto* av = get_if<models::Averaged>())
      return av->base->symmetric();
    return true;
  }

  //! (E ε, E ε^2).
  std::pair<double, double> moments() const
  {
    return std::visit([](const auto& m) { return moments_of(m); }, v_);
  }

  //! One draw. Supported: degenerate, normal, laplace, stable with exponent
  //! 1 or 2, and averages of these.
  double sample(RandomStream& rs) const
  {
    return std::visit([&rs](const auto& m) { return sample_of(m, rs); }, v_);
  }

  //! Config-file description (`normal 0 1`, `laplace 0.5`, ...). Averaged
  //! models print their base inline as `averaged(<base>) <r>`.
  std::string describe() const
  {
    std::ostringstream os;
    os.precision(17);
    std::visit(
      [&os](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, models::Degenerate>)
          os << "degenerate";
        else if constexpr (std::is_same_v<T, models::Normal>)
          os << "normal " << m.mean << ' ' << m.variance;
        else if constexpr (std::is_same_v<T, models::Laplace>)
          os << "laplace " << m.scale;
        else if constexpr (std::is_same_v<T, models::StableSymmetric>)
          os << "stable " << m.scale << ' ' << m.exponent;
        else if constexpr (std::is_same_v<T, models::Averaged>)
          os << "averaged(" << m.base->describe() << ") " << m.replicates;
        else
          os << "empirical";
      },
      v_);
    return os.str();
  }

  friend bool operator==(const ErrorModel& a, const ErrorModel& b)
  {
    if (a.v_.index() != b.v_.index())
      return false;
    return std::visit(
      [&b](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        const T& o = std::get<T>(b.v_);
        if constexpr (std::is_same_v<T, models::Degenerate>)
          return true;
        else if constexpr (std::is_same_v<T, models::Normal>)
          return m.mean == o.mean && m.variance == o.variance;
        else if constexpr (std::is_same_v<T, models::Laplace>)
          return m.scale == o.scale;
        else if constexpr (std::is_same_v<T, models::StableSymmetric>)
          return m.scale == o.scale && m.exponent == o.exponent;
        else if constexpr (std::is_same_v<T, models::Averaged>)
          return m.replicates == o.replicates && *m.base == *o.base;
        else
          return m.floor == o.floor && m.table.values() == o.table.values() &&
                 m.table.t_hi() == o.table.t_hi();
      },
      a.v_);
  }

private:
  template<class T>
  explicit ErrorModel(T m)
    : v_(std::move(m))
  {}

  static complex cf_of(const models::Degenerate&, double) { return 1.0; }

  static complex cf_of(const models::Normal& m, double t)
  {
    double mod = std::exp(-0.5 * m.variance * t * t);
    if (m.mean == 0.0)
      return mod;
    return std::polar(mod, m.mean * t);
  }

  static complex cf_of(const models::Laplace& m, double t)
  {
    return 1.0 / (1.0 + m.scale * m.scale * t * t);
  }

  static complex cf_of(const models::StableSymmetric& m, double t)
  {
    return std::exp(-0.5 * std::pow(m.scale * std::abs(t), m.exponent));
  }

  static complex cf_of(const models::Averaged& m, double t)
  {
    complex base = m.base->cf(t / m.replicates);
    complex result = 1.0;
    for (unsigned e = m.replicates; e > 0; e >>= 1) {
      if (e & 1u)
        result *= base;
      base *= base;
    }
    return result;
  }

  static complex cf_of(const models::EmpiricalSymmetric& m, double t)
  {
    double v = m.table(std::abs(t)).real();
    return std::clamp(v, m.floor, 1.0);
  }

  static std::pair<double, double> moments_of(const models::Degenerate&) { return { 0.0, 0.0 }; }

  static std::pair<double, double> moments_of(const models::Normal& m)
  {
    return { m.mean, m.mean * m.mean + m.variance };
  }

  static std::pair<double, double> moments_of(const models::Laplace& m)
  {
    return { 0.0, 2.0 * m.scale * m.scale };
  }

  static std::pair<double, double> moments_of(const models::StableSymmetric& m)
  {
    if (m.exponent < 2.0)
      throw infinite_variance("stable errors with exponent < 2 have no finite variance");
    return { 0.0, m.scale * m.scale };
  }

  static std::pair<double, double> moments_of(const models::Averaged& m)
  {
    auto [mean, second] = m.base->moments();
    double var = (second - mean * mean) / m.replicates;
    return { mean, mean * mean + var };
  }

  static std::pair<double, double> moments_of(const models::EmpiricalSymmetric&)
  {
    throw std::domain_error("moments of an empirical error model are not available");
  }

  static double sample_of(const models::Degenerate&, RandomStream&) { return 0.0; }

  static double sample_of(const models::Normal& m, RandomStream& rs)
  {
    return m.mean + std::sqrt(m.variance) * rs.normal();
  }

  static double sample_of(const models::Laplace& m, RandomStream& rs)
  {
    double u = rs.uniform() - 0.5;
    double mag = -m.scale * std::log1p(-2.0 * std::abs(u));
    return u < 0.0 ? -mag : mag;
  }

  static double sample_of(const models::StableSymmetric& m, RandomStream& rs)
  {
    if (m.exponent == 2.0)
      return m.scale * rs.normal();
    if (m.exponent == 1.0)
      return 0.5 * m.scale * std::tan(pi * (rs.uniform() - 0.5));
    throw std::domain_error("sampling stable errors is only supported for exponent 1 or 2");
  }

  static double sample_of(const models::Averaged& m, RandomStream& rs)
  {
    double sum = 0.0;
    for (unsigned k = 0; k < m.replicates; ++k)
      sum += m.base->sample(rs);
    return sum / m.replicates;
  }

  static double sample_of(const models::EmpiricalSymmetric&, RandomStream&)
  {
    throw std::domain_error("empirical error models cannot be sampled");
  }

  variant_type v_;
};

inline complex char_fn(const ErrorModel& model, double t) { return model.cf(t); }

inline ErrorModel averaged_model(const ErrorModel& base, unsigned r)
{
  return ErrorModel::averaged(base, r);
}

inline std::pair<double, double> error_moments(const ErrorModel& model)
{
  return model.moments();
}

//! Distinct error models with the number of observations carrying each.
//! All sums over observations in the estimator and risk formulas go through
//! this grouping.
class ErrorProfile
{
public:
  struct Entry
  {
    ErrorModel model;
    std::size_t count;
  };

  ErrorProfile() = default;

  explicit ErrorProfile(std::vector<Entry> entries)
    : entries_(std::move(entries))
  {
    for (const auto& e : entries_)
      n_ += e.count;
  }

  //! Groups a per-observation model list (equal models share an entry,
  //! first-appearance order).
  static ErrorProfile from_observations(std::span<const ErrorModel> per_observation)
  {
    std::vector<Entry> entries;
    for (const auto& m : per_observation) {
      auto it = std::find_if(entries.begin(), entries.end(), [&m](const Entry& e) {
        return e.model == m;
      });
      if (it != entries.end())
        ++it->count;
      else
        entries.push_back({ m, 1 });
    }
    return ErrorProfile(std::move(entries));
  }

  static ErrorProfile uniform(const ErrorModel& model, std::size_t n)
  {
    return ErrorProfile({ { model, n } });
  }

  std::size_t n() const { return n_; }
  const std::vector<Entry>& entries() const { return entries_; }

  //! sum_k |f^ft_k(t)|^2 without the degeneracy check.
  double sum_abs2(double t) const
  {
    double s = 0.0;
    for (const auto& e : entries_)
      s += static_cast<double>(e.count) * e.model.cf_abs2(t);
    return s;
  }

  //! sum_k |f^ft_k(t)|^4.
  double sum_abs4(double t) const
  {
    double s = 0.0;
    for (const auto& e : entries_) {
      double a = e.model.cf_abs2(t);
      s += static_cast<double>(e.count) * a * a;
    }
    return s;
  }

  //! sum_k f^ft_k(t).
  complex sum_cf(double t) const
  {
    complex s = 0.0;
    for (const auto& e : entries_)
      s += static_cast<double>(e.count) * e.model.cf(t);
    return s;
  }

private:
  std::vector<Entry> entries_;
  std::size_t n_ = 0;
};

inline constexpr double min_cf_sum_sq = 1e-300;

//! sum_k |f^ft_k(t)|^2; throws when it is numerically zero.
inline double cf_sum_sq(const ErrorProfile& profile, double t)
{
  if (profile.n() == 0)
    throw std::invalid_argument("error profile is empty");
  double s = profile.sum_abs2(t);
  if (!(s >= min_cf_sum_sq)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "sum of squared error characteristic functions vanishes at t = " << t;
    throw degenerate_denominator(msg.str());
  }
  return s;
}

//! Observations y_j with the error model that contaminated each one.
class HetSample
{
public:
  HetSample(std::vector<double> ys,
            std::vector<std::size_t> model_index,
            std::vector<ErrorModel> models)
    : ys_(std::move(ys))
    , index_(std::move(model_index))
    , models_(std::move(models))
  {
    if (ys_.empty())
      throw std::invalid_argument("sample must contain at least one observation");
    if (index_.size() != ys_.size())
      throw std::invalid_argument("every observation needs a model index");
    for (double y : ys_) {
      if (!std::isfinite(y))
        throw std::invalid_argument("observations must be finite");
    }
    std::vector<std::size_t> counts(models_.size(), 0);
    for (std::size_t k : index_) {
      if (k >= models_.size())
        throw std::out_of_range("observation refers to an unknown error model");
      ++counts[k];
    }
    std::vector<ErrorProfile::Entry> entries;
    for (std::size_t m = 0; m < models_.size(); ++m) {
      if (counts[m] > 0)
        entries.push_back({ models_[m], counts[m] });
    }
    profile_ = ErrorProfile(std::move(entries));
  }

  //! All observations share one model.
  static HetSample homoscedastic(std::vector<double> ys, ErrorModel model)
  {
    std::vector<std::size_t> idx(ys.size(), 0);
    return HetSample(std::move(ys), std::move(idx), { std::move(model) });
  }

  //! One model per observation.
  static HetSample from_models(std::vector<double> ys, std::vector<ErrorModel> per_observation)
  {
    std::vector<std::size_t> idx(per_observation.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
      idx[j] = j;
    return HetSample(std::move(ys), std::move(idx), std::move(per_observation));
  }

  std::size_t size() const { return ys_.size(); }
  const std::vector<double>& ys() const { return ys_; }
  const std::vector<std::size_t>& model_index() const { return index_; }
  const std::vector<ErrorModel>& models() const { return models_; }
  const ErrorModel& model_of(std::size_t j) const { return models_[index_[j]]; }
  const ErrorProfile& profile() const { return profile_; }

  //! The same observations with every error replaced by a point mass.
  HetSample ignoring_errors() const { return homoscedastic(ys_, ErrorModel::degenerate()); }

private:
  std::vector<double> ys_;
  std::vector<std::size_t> index_;
  std::vector<ErrorModel> models_;
  ErrorProfile profile_;
};

inline double cf_sum_sq(const HetSample& sample, double t)
{
  return cf_sum_sq(sample.profile(), t);
}

//! Replicated measurements Y_{j,k} = X_j + ε_{j,k}.
class ReplicatedSample
{
public:
  struct Subject
  {
    std::string id;
    std::vector<double> values;
  };

  explicit ReplicatedSample(std::vector<Subject> subjects)
    : subjects_(std::move(subjects))
  {
    if (subjects_.empty())
      throw std::invalid_argument("replicated sample has no subjects");
    for (const auto& s : subjects_) {
      if (s.values.empty())
        throw std::invalid_argument("subject '" + s.id + "' has no measurements");
      for (double y : s.values) {
        if (!std::isfinite(y))
          throw std::invalid_argument("measurements must be finite");
      }
      for (std::size_t a = 0; a < s.values.size(); ++a) {
        for (std::size_t b = a + 1; b < s.values.size(); ++b) {
          pair_mid_.push_back(0.5 * (s.values[a] + s.values[b]));
          pair_half_diff_.push_back(0.5 * (s.values[a] - s.values[b]));
        }
      }
    }
  }

  //! Subjects numbered 0..n-1.
  static ReplicatedSample from_values(const std::vector<std::vector<double>>& values)
  {
    std::vector<Subject> subjects;
    subjects.reserve(values.size());
    for (std::size_t j = 0; j < values.size(); ++j)
      subjects.push_back({ std::to_string(j), values[j] });
    return ReplicatedSample(std::move(subjects));
  }

  const std::vector<Subject>& subjects() const { return subjects_; }
  std::size_t subject_count() const { return subjects_.size(); }

  //! N = #{(j, k1, k2) : k1 < k2}.
  std::size_t pair_count() const { return pair_mid_.size(); }

  //! (Y_{j,k1} + Y_{j,k2}) / 2 over the pair set.
  const std::vector<double>& pair_midpoints() const { return pair_mid_; }

  //! (Y_{j,k1} - Y_{j,k2}) / 2 over the pair set.
  const std::vector<double>& pair_half_differences() const { return pair_half_diff_; }

  std::vector<double> subject_means() const
  {
    std::vector<double> means;
    means.reserve(subjects_.size());
    for (const auto& s : subjects_) {
      double sum = 0.0;
      for (double y : s.values)
        sum += y;
      means.push_back(sum / static_cast<double>(s.values.size()));
    }
    return means;
  }

  std::vector<unsigned> replicate_counts() const
  {
    std::vector<unsigned> r;
    r.reserve(subjects_.size());
    for (const auto& s : subjects_)
      r.push_back(static_cast<unsigned>(s.values.size()));
    return r;
  }

  //! Subject means with error models averaged(base, r_j).
  HetSample averaged(const ErrorModel& base) const
  {
    std::vector<double> means = subject_means();
    std::vector<ErrorModel> models;
    std::vector<std::size_t> index;
    std::vector<unsigned> seen;
    for (const auto& s : subjects_) {
      auto r = static_cast<unsigned>(s.values.size());
      auto it = std::find(seen.begin(), seen.end(), r);
      if (it == seen.end()) {
        seen.push_back(r);
        models.push_back(ErrorModel::averaged(base, r));
        index.push_back(models.size() - 1);
      } else {
        index.push_back(static_cast<std::size_t>(it - seen.begin()));
      }
    }
    return HetSample(std::move(means), std::move(index), std::move(models));
  }

private:
  std::vector<Subject> subjects_;
  std::vector<double> pair_mid_;
  std::vector<double> pair_half_diff_;
};

//! (2N)^{-1} sum over replicate pairs of (Y_{j,k1} - Y_{j,k2})^2.
inline double estimate_error_variance(const ReplicatedSample& reps)
{
  if (reps.pair_count() == 0)
    throw insufficient_replicates("no subject has two or more replicates");
  double sum = 0.0;
  for (double d : reps.pair_half_differences())
    sum += 4.0 * d * d;
  return sum / (2.0 * static_cast<double>(reps.pair_count()));
}

//! max(|N^{-1} sum_S exp(it (Y_{j,k1} - Y_{j,k2}) / 2)|, rho / N): an
//! estimate of |f_ε^ft(t/2)|^2 for symmetric errors, floored by the ridge.
inline double empirical_error_cf(const ReplicatedSample& reps, double t, double rho)
{
  if (reps.pair_count() == 0)
    throw insufficient_replicates("no subject has two or more replicates");
  if (!(rho > 0.0))
    throw std::invalid_argument("ridge parameter must be positive");
  auto n = static_cast<double>(reps.pair_count());
  double value = std::abs(empirical_cf(reps.pair_half_differences(), t));
  return std::max(value, rho / n);
}

//! Symmetric error model whose cf is estimated from replicate differences:
//! f_ε^ft(t) = sqrt(empirical_error_cf(reps, 2t, rho)), tabulated on
//! [0, t_max].
inline ErrorModel empirical_error_model(const ReplicatedSample& reps,
                                        double rho,
                                        double t_max,
                                        std::size_t points = 513)
{
  if (!(t_max > 0.0))
    throw std::invalid_argument("t_max must be positive");
  auto table = ComplexFunctionTable::tabulate(
    [&](double t) { return complex(std::sqrt(empirical_error_cf(reps, 2.0 * t, rho))); },
    0.0,
    t_max,
    points);
  double floor = std::sqrt(rho / static_cast<double>(reps.pair_count()));
  return ErrorModel::empirical(std::move(table), std::min(floor, 1.0));
}

//! Result of the linear-variance identification scan.
struct LinearVarianceFit
{
  double a;
  double t;          // frequency at which the bands first interleave
  bool boundary;     // true when the estimate was clamped to 1 or 2
};

namespace detail {

//! n^{-1} sum_{j=1}^n exp(-a (1 + j/n) t^2 / 2) in closed form (geometric sum).
inline double linear_variance_upper(double a, double t, std::size_t n)
{
  auto nn = static_cast<double>(n);
  double s = a * t * t / 2.0;
  if (s == 0.0)
    return 1.0;
  double q_log = -s / nn;           // log of the common ratio
  double first = std::exp(-s + q_log);
  // sum_{j=1}^n q^j = q (1 - q^n) / (1 - q)
  double ratio = -std::expm1(-s) / -std::expm1(q_log);
  return first * ratio / nn;
}

} // namespace detail

//! Identifies a in the model Var(ε_j) = a (1 + j/n), a in [1, 2], from a
//! lower bound |f_X^ft(t)| >= c / (1 + |t|^{beta + 1/2}).
//!
//! `phi_hat(t)` is the observed estimate of n^{-1} sum_j f_{ε_j}^ft(t)
//! f_X^ft(t). Scans t over `t_points` equispaced points in (0, t_max] for the
//! first t at which the upper/lower bands of the grid a_j = 1 + j/m
//! (j = 1..m) interleave, then returns the midpoint of the cell containing
//! phi_hat(t).
template<class PhiHat>
LinearVarianceFit identify_linear_variance(PhiHat&& phi_hat,
                                           std::size_t n,
                                           double c,
                                           double beta,
                                           unsigned m,
                                           double t_max,
                                           std::size_t t_points = 200)
{
  if (n == 0)
    throw std::invalid_argument("sample size must be positive");
  if (!(c > 0.0 && c <= 1.0))
    throw std::invalid_argument("lower-bound constant c must lie in (0, 1]");
  if (!(beta > 0.0))
    throw std::invalid_argument("smoothness beta must be positive");
  if (m < 3)
    throw std::invalid_argument("variance grid needs at least 3 cells");
  if (!(t_max > 0.0) || t_points == 0)
    throw std::invalid_argument("t scan needs t_max > 0 and at least one point");

  auto grid_a = [m](unsigned j) { return 1.0 + static_cast<double>(j) / m; };
  std::vector<double> upper(m + 1), lower(m + 1);

  for (std::size_t i = 1; i <= t_points; ++i) {
    double t = t_max * static_cast<double>(i) / static_cast<double>(t_points);
    double envelope = c / (1.0 + std::pow(t, beta + 0.5));
    for (unsigned j = 1; j <= m; ++j) {
      upper[j] = detail::linear_variance_upper(grid_a(j), t, n);
      lower[j] = upper[j] * envelope;
    }
    bool interleaved = true;
    for (unsigned j = 1; j <= m && interleaved; ++j) {
      interleaved = upper[j] > lower[j] && (j == m || lower[j] > upper[j + 1]);
    }
    if (!interleaved)
      continue;

    double obs = phi_hat(t);
    if (obs > upper[1])
      return { 1.0, t, true };
    if (obs < upper[m])
      return { 2.0, t, true };
    for (unsigned j = 1; j < m; ++j) {
      if (obs <= upper[j] && obs > upper[j + 1]) {
        double mid = 0.5 * (grid_a(j) + grid_a(j + 1));
        return { std::clamp(mid, 1.0, 2.0), t, false };
      }
    }
    return { 2.0, t, true };
  }
  throw identification_failure("no frequency in (0, t_max] separates the variance bands");
}

//! Data version: phi_hat(t) = max(0, Re empirical_cf(ys, t)), with ys in the
//! order that defines the index j of the variance model.
inline LinearVarianceFit estimate_linear_variance_param(std::span<const double> ys,
                                                        double c,
                                                        double beta,
                                                        unsigned m,
                                                        double t_max = 10.0)
{
  if (ys.empty())
    throw std::invalid_argument("sample must contain at least one observation");
  return identify_linear_variance(
    [ys](double t) { return std::max(0.0, empirical_cf(ys, t).real()); },
    ys.size(),
    c,
    beta,
    m,
    t_max);
}

//! sum_j exp(-sigma_j^gamma omega^gamma) for symmetric stable errors with a
//! common exponent; growth with n indicates the consistent regime.
inline double consistency_diagnostic(std::span<const ErrorModel> stable_models, double omega)
{
  if (!(omega > 0.0))
    throw std::invalid_argument("omega must be positive");
  if (stable_models.empty())
    throw std::invalid_argument("no error models given");
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& m : stable_models) {
    auto* st = m.get_if<models::StableSymmetric>();
    if (!st)
      throw std::domain_error("consistency diagnostic requires stable error models");
    if (std::isnan(gamma))
      gamma = st->exponent;
    else if (st->exponent != gamma)
      throw std::domain_error("stable error models must share one exponent");
    sum += std::exp(-std::pow(st->scale * omega, gamma));
  }
  return sum;
}

} // namespace hetdecon
