#pragma once

#include "spnmap/approx.hpp"
#include "spnmap/bench.hpp"
#include "spnmap/bn.hpp"
#include "spnmap/evaluate.hpp"
#include "spnmap/exact.hpp"
#include "spnmap/io.hpp"
#include "spnmap/oracles.hpp"
#include "spnmap/random.hpp"
#include "spnmap/reduce.hpp"
#include "spnmap/solve_result.hpp"
#include "spnmap/spn.hpp"
