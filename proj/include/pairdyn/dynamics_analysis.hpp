#pragma once

#include "pairdyn/dynamics/equilibria.hpp"
#include "pairdyn/dynamics/integrate.hpp"
#include "pairdyn/dynamics/phase.hpp"
#include "pairdyn/dynamics/thresholds.hpp"
