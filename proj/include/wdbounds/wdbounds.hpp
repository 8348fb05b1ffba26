#pragma once

#include "wdbounds/rng.hpp"
#include "wdbounds/bounds.hpp"
#include "wdbounds/coefficients.hpp"
#include "wdbounds/processes.hpp"
#include "wdbounds/parallel.hpp"
#include "wdbounds/clopper_pearson.hpp"
#include "wdbounds/estimation.hpp"
#include "wdbounds/io.hpp"
#include "wdbounds/harness.hpp"
