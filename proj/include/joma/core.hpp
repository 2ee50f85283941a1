#pragma once

#include "core/errors.hpp"
#include "core/metrics.hpp"
#include "core/quadrature.hpp"
#include "core/radial.hpp"
#include "core/rng.hpp"
#include "core/special.hpp"
#include "core/types.hpp"
