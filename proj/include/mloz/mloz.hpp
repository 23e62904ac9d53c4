#pragma once

// Umbrella header: the complete ozone-parameterization toolkit.

#include "mloz/bench.hpp"
#include "mloz/config_json.hpp"
#include "mloz/core.hpp"
#include "mloz/digest.hpp"
#include "mloz/engine.hpp"
#include "mloz/error.hpp"
#include "mloz/eval.hpp"
#include "mloz/linalg.hpp"
#include "mloz/parallel.hpp"
#include "mloz/rng.hpp"
#include "mloz/spline.hpp"
#include "mloz/store.hpp"
#include "mloz/toysim.hpp"
#include "mloz/trainer.hpp"
#include "mloz/transfer.hpp"
