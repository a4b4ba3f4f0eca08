#pragma once

#include "pecons/analysis.hpp"
#include "pecons/dynamics.hpp"
#include "pecons/error.hpp"
#include "pecons/experiment.hpp"
#include "pecons/graph.hpp"
#include "pecons/rk4.hpp"
#include "pecons/weights.hpp"
