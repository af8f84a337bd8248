#pragma once

//! Umbrella header for heteroscedastic deconvolution density estimation.

#include "bandwidth.hpp"
#include "error_models.hpp"
#include "estimator.hpp"
#include "exceptions.hpp"
#include "fourier.hpp"
#include "kernels.hpp"
#include "random.hpp"
#include "risk.hpp"
#include "simulation.hpp"
