#pragma once

#include "sbbm/model.hpp"
#include "sbbm/likelihood.hpp"
#include "sbbm/projection.hpp"
#include "sbbm/rng.hpp"
#include "sbbm/spectral.hpp"
#include "sbbm/fitter.hpp"
#include "sbbm/generators.hpp"
#include "sbbm/evaluation.hpp"
