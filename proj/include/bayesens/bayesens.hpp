#pragma once

#include "bayesens/errors.hpp"
#include "bayesens/rng.hpp"
#include "bayesens/data.hpp"
#include "bayesens/weak.hpp"
#include "bayesens/loss.hpp"
#include "bayesens/quadrature.hpp"
#include "bayesens/bayes.hpp"
#include "bayesens/baselines.hpp"
#include "bayesens/harness.hpp"
#include "bayesens/verify.hpp"
