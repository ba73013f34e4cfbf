#pragma once

#include "wpt/counterfactual.hpp"
#include "wpt/errors.hpp"
#include "wpt/gaussian.hpp"
#include "wpt/helmholtz/exact.hpp"
#include "wpt/helmholtz/kernel.hpp"
#include "wpt/helmholtz/projection.hpp"
#include "wpt/helmholtz/rff.hpp"
#include "wpt/log.hpp"
#include "wpt/ot/cost.hpp"
#include "wpt/ot/coupling.hpp"
#include "wpt/ot/maps.hpp"
#include "wpt/ot/solvers.hpp"
#include "wpt/random.hpp"
#include "wpt/transport.hpp"
#include "wpt/types.hpp"
