#pragma once

#include "pairdyn/config_space.hpp"
#include "pairdyn/dynamics_analysis.hpp"
#include "pairdyn/error.hpp"
#include "pairdyn/mc_sim.hpp"
#include "pairdyn/pair_approx.hpp"
#include "pairdyn/parallel.hpp"
#include "pairdyn/payoff_model.hpp"
#include "pairdyn/replicator.hpp"

namespace pairdyn {
inline constexpr const char* kVersion = "0.1.0";
}
