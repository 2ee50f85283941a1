#pragma once

#include "lab/artifacts.hpp"
#include "lab/config.hpp"
#include "lab/dynamics_runs.hpp"
#include "lab/hblt_runs.hpp"
#include "lab/io.hpp"
#include "lab/registry.hpp"
#include "lab/runtime.hpp"
#include "lab/train_runs.hpp"
#include "lab/verify.hpp"
