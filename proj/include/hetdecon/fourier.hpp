#pragma once

#include "exceptions.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace hetdecon {

using complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

//! Composite Simpson rule with an odd number of equispaced nodes.
struct QuadratureSpec
{
  std::size_t node_count = 4097;

  void validate() const
  {
    if (node_count < 3 || node_count % 2 == 0) {
      throw std::invalid_argument(
        "quadrature node count must be odd and at least 3, got " +
        std::to_string(node_count));
    }
  }
};

//! Nodes and weights of a composite Simpson rule on [a, b].
//!
//! Nodes are placed symmetrically about the interval midpoint, so on a
//! symmetric interval node(i) == -node(size() - 1 - i) holds exactly.
class SimpsonGrid
{
public:
  SimpsonGrid(double a, double b, QuadratureSpec quad = {})
    : n_(quad.node_count)
    , mid_(0.5 * (a + b))
    , step_((b - a) / static_cast<double>(quad.node_count - 1))
    , half_(static_cast<std::ptrdiff_t>(quad.node_count - 1) / 2)
  {
    quad.validate();
    if (!(a <= b)) {
      throw std::invalid_argument("integration interval must satisfy a <= b");
    }
  }

  std::size_t size() const { return n_; }
  double step() const { return step_; }

  double node(std::size_t i) const
  {
    return mid_ + static_cast<double>(static_cast<std::ptrdiff_t>(i) - half_) * step_;
  }

  double weight(std::size_t i) const
  {
    double w = (i == 0 || i + 1 == n_) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    return w * step_ / 3.0;
  }

  std::vector<double> nodes() const
  {
    std::vector<double> t(n_);
    for (std::size_t i = 0; i < n_; ++i)
      t[i] = node(i);
    return t;
  }

  std::vector<double> weights() const
  {
    std::vector<double> w(n_);
    for (std::size_t i = 0; i < n_; ++i)
      w[i] = weight(i);
    return w;
  }

private:
  std::size_t n_;
  double mid_;
  double step_;
  std::ptrdiff_t half_;
};

namespace detail {

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const complex& v)
{
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

[[noreturn]] inline void throw_non_finite(std::size_t i, double t)
{
  std::ostringstream msg;
  msg.precision(17);
  msg << "non-finite integrand value at node " << i << " (t = " << t << ")";
  throw numerical_error(msg.str());
}

} // namespace detail

//! Integrates `f` over [a, b] with the composite Simpson rule. `f` may return
//! a real or a complex value; the return type follows it.
template<class F>
auto integrate(F&& f, double a, double b, QuadratureSpec quad = {})
{
  using value_type = std::decay_t<std::invoke_result_t<F&, double>>;
  SimpsonGrid grid(a, b, quad);
  value_type sum{};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double t = grid.node(i);
    value_type v = f(t);
    if (!detail::is_finite(v))
      detail::throw_non_finite(i, t);
    sum += grid.weight(i) * v;
  }
  return sum;
}

//! n^{-1} sum_j exp(i t y_j).
inline complex empirical_cf(std::span<const double> ys, double t)
{
  if (ys.empty()) {
    throw std::domain_error("empirical characteristic function of an empty sample");
  }
  double re = 0.0;
  double im = 0.0;
  for (double y : ys) {
    double arg = t * y;
    re += std::cos(arg);
    im += std::sin(arg);
  }
  double n = static_cast<double>(ys.size());
  return { re / n, im / n };
}

//! Complex values tabulated on an equispaced grid over [t_lo, t_hi], with
//! linear interpolation in between and constant extension outside.
class ComplexFunctionTable
{
public:
  ComplexFunctionTable() = default;

  ComplexFunctionTable(double t_lo, double t_hi, std::vector<complex> values)
    : t_lo_(t_lo)
    , t_hi_(t_hi)
    , values_(std::move(values))
  {
    if (values_.size() < 2 || !(t_lo < t_hi)) {
      throw std::invalid_argument(
        "function table needs at least two values on a non-empty interval");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!detail::is_finite(values_[i]))
        detail::throw_non_finite(i, node(i));
    }
  }

  template<class F>
  static ComplexFunctionTable tabulate(F&& f, double t_lo, double t_hi, std::size_t count)
  {
    if (count < 2)
      throw std::invalid_argument("function table needs at least two nodes");
    std::vector<complex> v(count);
    double step = (t_hi - t_lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
      v[i] = f(t_lo + static_cast<double>(i) * step);
    return ComplexFunctionTable(t_lo, t_hi, std::move(v));
  }

  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<complex>& values() const { return values_; }

  double node(std::size_t i) const
  {
    return t_lo_ + static_cast<double>(i) * step();
  }

  complex operator()(double t) const
  {
    if (t <= t_lo_)
      return values_.front();
    if (t >= t_hi_)
      return values_.back();
    double pos = (t - t_lo_) / step();
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= values_.size())
      return values_.back();
    double frac = pos - static_cast<double>(i);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
  }

  //! True when value(-t) == conj(value(t)) at mirrored nodes within `tol`.
  //! Requires a symmetric interval.
  bool conjugate_symmetric(double tol = 1e-12) const
  {
    if (std::abs(t_lo_ + t_hi_) > tol * std::max(1.0, std::abs(t_hi_)))
      return false;
    std::size_t n = values_.size();
    for (std::size_t i = 0; i < n / 2 + 1; ++i) {
      if (std::abs(values_[i] - std::conj(values_[n - 1 - i])) > tol)
        return false;
    }
    return true;
  }

private:
  double step() const
  {
    return (t_hi_ - t_lo_) / static_cast<double>(values_.size() - 1);
  }

  double t_lo_ = 0.0;
  double t_hi_ = 1.0;
  std::vector<complex> values_;
};

} // namespace hetdecon
