#pragma once

#include "adapted_cbs.hpp"
#include "ame.hpp"
#include "bench.hpp"
#include "constraints.hpp"
#include "core.hpp"
#include "dependency.hpp"
#include "execution.hpp"
#include "generate.hpp"
#include "io.hpp"
#include "rng.hpp"
#include "stats.hpp"
