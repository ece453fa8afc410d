#pragma once

#include "dgflow/config.hpp"
#include "dgflow/experiments.hpp"
#include "dgflow/flow.hpp"
#include "dgflow/integrate.hpp"
#include "dgflow/io.hpp"
#include "dgflow/linalg.hpp"
#include "dgflow/noise.hpp"
#include "dgflow/operators.hpp"
#include "dgflow/penalty.hpp"
#include "dgflow/random.hpp"
#include "dgflow/run.hpp"
#include "dgflow/stopping.hpp"
#include "dgflow/tableau.hpp"
#include "dgflow/tv1d.hpp"
