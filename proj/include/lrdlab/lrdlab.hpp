#pragma once

#include "lrdlab/error.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/slowly_varying.hpp"
#include "lrdlab/lrd_source.hpp"
#include "lrdlab/functional.hpp"
#include "lrdlab/chaos.hpp"
#include "lrdlab/tails.hpp"
#include "lrdlab/regimes.hpp"
#include "lrdlab/limit_processes.hpp"
#include "lrdlab/stats.hpp"
#include "lrdlab/experiments.hpp"
#include "lrdlab/config.hpp"
