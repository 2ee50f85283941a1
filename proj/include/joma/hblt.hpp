#pragma once

#include "hblt/cooccur.hpp"
#include "hblt/corpus.hpp"
#include "hblt/sampler.hpp"
#include "hblt/tree.hpp"
