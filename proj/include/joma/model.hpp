#pragma once

#include "model/batch.hpp"
#include "model/checkpoint.hpp"
#include "model/gradcheck.hpp"
#include "model/ncorr.hpp"
#include "model/network.hpp"
#include "model/optim.hpp"
#include "model/params.hpp"
#include "model/train.hpp"
