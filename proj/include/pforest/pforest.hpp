#pragma once

#include "pforest/csv.hpp"
#include "pforest/dataset.hpp"
#include "pforest/experiments.hpp"
#include "pforest/forest.hpp"
#include "pforest/metrics.hpp"
#include "pforest/numeric.hpp"
#include "pforest/penalty.hpp"
#include "pforest/prng.hpp"
#include "pforest/simulate.hpp"
#include "pforest/split.hpp"
#include "pforest/tree.hpp"
#include "pforest/version.hpp"
