#pragma once

// Umbrella header: interpolators, tangent-space geometry, manifold Laplace
// approximations, Bayesian-duality verifiers, and the interpolating
// information criterion, plus the random-feature sweep harness.

#include "iic/criteria.hpp"
#include "iic/dataset.hpp"
#include "iic/duality.hpp"
#include "iic/errors.hpp"
#include "iic/features.hpp"
#include "iic/geometry.hpp"
#include "iic/idx.hpp"
#include "iic/interpolate.hpp"
#include "iic/laplace.hpp"
#include "iic/loss.hpp"
#include "iic/model.hpp"
#include "iic/numeric.hpp"
#include "iic/prior.hpp"
#include "iic/quadrature.hpp"
#include "iic/rng.hpp"
#include "iic/svg.hpp"
#include "iic/sweep.hpp"
#include "iic/verify.hpp"
