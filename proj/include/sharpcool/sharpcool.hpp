#pragma once

#include "sharpcool/analytics.hpp"
#include "sharpcool/diagnostics.hpp"
#include "sharpcool/errors.hpp"
#include "sharpcool/grid.hpp"
#include "sharpcool/jobs.hpp"
#include "sharpcool/kinetics.hpp"
#include "sharpcool/model.hpp"
#include "sharpcool/scenario.hpp"
