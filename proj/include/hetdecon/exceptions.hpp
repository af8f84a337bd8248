#pragma once

#include <stdexcept>
#include <string>

namespace hetdecon {

//! Base class for failures of the numerical pipeline (non-finite values,
//! vanishing denominators). Input validation errors use the standard
//! `std::invalid_argument` / `std::domain_error` / `std::out_of_range`.
class numerical_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! The sum of squared error characteristic functions (or another Fourier
//! denominator) is numerically zero.
class degenerate_denominator : public numerical_error
{
public:
  using numerical_error::numerical_error;
};

//! The error distribution has no finite second moment.
class infinite_variance : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

class insufficient_replicates : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

class unsupported_kernel : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//! No frequency on the scan grid separates the variance bands.
class identification_failure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace hetdecon
