#pragma once

// Umbrella header.

#include "bbs/baselines.hpp"
#include "bbs/best_buddies.hpp"
#include "bbs/box.hpp"
#include "bbs/errors.hpp"
#include "bbs/eval.hpp"
#include "bbs/feature_grid.hpp"
#include "bbs/features.hpp"
#include "bbs/io.hpp"
#include "bbs/matcher.hpp"
#include "bbs/parallel.hpp"
#include "bbs/point_set.hpp"
#include "bbs/statsim.hpp"
