#pragma once

#include "lgt/bitconfig.hpp"
#include "lgt/dynamics.hpp"
#include "lgt/gauge_basis.hpp"
#include "lgt/lattice.hpp"
#include "lgt/models.hpp"
#include "lgt/operators.hpp"
#include "lgt/strings.hpp"
#include "lgt/version.hpp"
