#pragma once

// Umbrella header.

#include "polywalk/backtest.hpp"
#include "polywalk/densities.hpp"
#include "polywalk/diagnostics.hpp"
#include "polywalk/error.hpp"
#include "polywalk/exact.hpp"
#include "polywalk/geometry.hpp"
#include "polywalk/io.hpp"
#include "polywalk/optimize.hpp"
#include "polywalk/portfolio.hpp"
#include "polywalk/rng.hpp"
#include "polywalk/rounding.hpp"
#include "polywalk/walks.hpp"
