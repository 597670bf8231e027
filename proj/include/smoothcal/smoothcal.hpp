#pragma once

#include "smoothcal/bphi.hpp"
#include "smoothcal/confidence.hpp"
#include "smoothcal/estimate.hpp"
#include "smoothcal/experiment.hpp"
#include "smoothcal/fit.hpp"
#include "smoothcal/fourier.hpp"
#include "smoothcal/gls.hpp"
#include "smoothcal/io.hpp"
#include "smoothcal/numerics.hpp"
#include "smoothcal/rho_model.hpp"
#include "smoothcal/rng.hpp"
#include "smoothcal/simulate.hpp"
