#pragma once

#include "netmoment/edge_models.hpp"
#include "netmoment/error.hpp"
#include "netmoment/estimator.hpp"
#include "netmoment/graph_core.hpp"
#include "netmoment/io.hpp"
#include "netmoment/rng.hpp"
#include "netmoment/simulator.hpp"
