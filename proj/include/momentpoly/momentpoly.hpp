#pragma once

// Umbrella header for the momentpoly library.

#include "momentpoly/csv.hpp"
#include "momentpoly/errors.hpp"
#include "momentpoly/eval_metrics.hpp"
#include "momentpoly/moment_engine.hpp"
#include "momentpoly/poly_model.hpp"
#include "momentpoly/synth_data.hpp"
#include "momentpoly/system_solver.hpp"
#include "momentpoly/tensor_index.hpp"
