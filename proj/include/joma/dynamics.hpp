#pragma once

#include "dynamics/attention.hpp"
#include "dynamics/coupled.hpp"
#include "dynamics/nonlinear.hpp"
#include "dynamics/reduced.hpp"
#include "dynamics/theta.hpp"
#include "dynamics/trajectory.hpp"
