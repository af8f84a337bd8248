#pragma once

#include "exceptions.hpp"
#include "fourier.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hetdecon {

enum class KernelId
{
  sinc,
  k2,
  custom
};

//! A deconvolution kernel whose Fourier transform vanishes outside [-1, 1].
//!
//! The transform convention is K^ft(t) = int exp(itx) K(x) dx, so the sinc
//! kernel sin(x)/(pi x) has the indicator of [-1, 1] as its transform and
//! K2 has (1 - t^2)^3 on [-1, 1].
class Kernel
{
public:
  //! User supplied kernel. `transform` is evaluated only on [-1, 1].
  struct Definition
  {
    std::string name;
    std::function<double(double)> transform;
    std::function<double(double)> density;
    std::optional<unsigned> order;
    double moment_k = 0.0;
    double roughness = 0.0;
  };

  static Kernel sinc() { return Kernel(KernelId::sinc); }
  static Kernel k2() { return Kernel(KernelId::k2); }

  static Kernel custom(Definition def)
  {
    if (!def.transform || !def.density)
      throw std::invalid_argument("custom kernel needs transform and density");
    if (def.order && (*def.order == 0 || *def.order % 2 != 0))
      throw std::invalid_argument("kernel order must be a positive even integer");
    Kernel k(KernelId::custom);
    k.def_ = std::make_shared<const Definition>(std::move(def));
    return k;
  }

  //! CLI names: `sinc`, `k2`.
  static Kernel from_name(std::string_view name)
  {
    if (name == "sinc")
      return sinc();
    if (name == "k2")
      return k2();
    throw std::invalid_argument("unknown kernel '" + std::string(name) +
                                "' (expected sinc or k2)");
  }

  KernelId id() const { return id_; }

  std::string name() const
  {
    switch (id_) {
      case KernelId::sinc:
        return "sinc";
      case KernelId::k2:
        return "k2";
      default:
        return def_->name;
    }
  }

  //! Fourier transform K^ft(t); zero outside [-1, 1].
  double ft(double t) const
  {
    if (std::abs(t) > 1.0)
      return 0.0;
    switch (id_) {
      case KernelId::sinc:
        return 1.0;
      case KernelId::k2: {
        double u = 1.0 - t * t;
        return u * u * u;
      }
      default:
        return def_->transform(t);
    }
  }

  //! Spatial kernel K(x).
  double operator()(double x) const
  {
    switch (id_) {
      case KernelId::sinc:
        return sinc_value(x);
      case KernelId::k2:
        return k2_value(x);
      default:
        return def_->density(x);
    }
  }

  //! Kernel order k (first non-vanishing moment index); empty for sinc,
  //! whose moments of order >= 1 do not converge.
  std::optional<unsigned> order() const
  {
    switch (id_) {
      case KernelId::sinc:
        return std::nullopt;
      case KernelId::k2:
        return 2u;
      default:
        return def_->order;
    }
  }

  //! mu_{K,j} = int x^j K(x) dx, read off the Taylor coefficients of K^ft at
  //! zero: mu_j = i^{-j} (d^j K^ft / dt^j)(0).
  double moment(unsigned j) const
  {
    switch (id_) {
      case KernelId::sinc:
        throw unsupported_kernel("moments of the sinc kernel are not defined");
      case KernelId::k2: {
        // (1 - t^2)^3 = 1 - 3t^2 + 3t^4 - t^6
        static constexpr double table[] = { 1.0, 0.0, 6.0, 0.0, 72.0, 0.0, -720.0 };
        if (j > 6)
          throw std::out_of_range("K2 moments are tabulated up to order 6");
        return table[j];
      }
      default: {
        if (!def_->order)
          throw unsupported_kernel("kernel '" + def_->name + "' has no finite order");
        if (j == 0)
          return 1.0;
        if (j < *def_->order)
          return 0.0;
        if (j == *def_->order)
          return def_->moment_k;
        throw std::out_of_range("custom kernels only expose moments up to their order");
      }
    }
  }

  //! R(K) = int K^2 = (2 pi)^{-1} int |K^ft|^2.
  double roughness() const
  {
    switch (id_) {
      case KernelId::sinc:
        return 1.0 / pi;
      case KernelId::k2:
        // (1/pi) int_0^1 (1 - t^2)^6 dt = (1/pi) 2^12 (6!)^2 / 13!
        return 4096.0 * 518400.0 / 6227020800.0 / pi;
      default:
        return def_->roughness;
    }
  }

private:
  explicit Kernel(KernelId id)
    : id_(id)
  {}

  static double sinc_value(double x)
  {
    if (std::abs(x) < 1e-3) {
      double x2 = x * x;
      return (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))) / pi;
    }
    return std::sin(x) / (pi * x);
  }

  static double k2_value(double x)
  {
    double ax = std::abs(x);
    if (ax < 2.0) {
      // (1/pi) int_0^1 (1-t^2)^3 cos(tx) dt expanded in powers of x; the
      // t^{2k} moments of (1-t^2)^3 are 48 / ((2k+1)(2k+3)(2k+5)(2k+7)).
      double x2 = x * x;
      double power = 1.0; // x^{2k} / (2k)!
      double sum = 0.0;
      for (int k = 0; k < 40; ++k) {
        double m = 2.0 * k;
        double term = power * 48.0 / ((m + 1) * (m + 3) * (m + 5) * (m + 7));
        sum += (k % 2 == 0) ? term : -term;
        if (term < 1e-18 * std::abs(sum))
          break;
        power *= x2 / ((m + 1) * (m + 2));
      }
      return sum / pi;
    }
    double x2 = x * x;
    double x4 = x2 * x2;
    return 48.0 * std::cos(x) * (1.0 - 15.0 / x2) / (pi * x4) -
           144.0 * std::sin(x) * (2.0 - 5.0 / x2) / (pi * x4 * x);
  }

  KernelId id_;
  std::shared_ptr<const Definition> def_;
};

inline double kft_eval(const Kernel& kernel, double t) { return kernel.ft(t); }
inline double kernel_eval(const Kernel& kernel, double x) { return kernel(x); }
inline double kernel_moment(const Kernel& kernel, unsigned j) { return kernel.moment(j); }

} // namespace hetdecon
