#pragma once

#include "lagflow/core_geometry.hpp"
#include "lagflow/curvature.hpp"
#include "lagflow/decomp.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/io.hpp"
#include "lagflow/maslov.hpp"
#include "lagflow/mollify.hpp"
#include "lagflow/parallel.hpp"
#include "lagflow/scenarios.hpp"
#include "lagflow/types.hpp"
#include "lagflow/varifold.hpp"
