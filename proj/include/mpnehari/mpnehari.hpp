// Umbrella header.
#pragma once

#include "mpnehari/config.hpp"
#include "mpnehari/energy.hpp"
#include "mpnehari/error.hpp"
#include "mpnehari/expr.hpp"
#include "mpnehari/fields.hpp"
#include "mpnehari/grid.hpp"
#include "mpnehari/nehari.hpp"
#include "mpnehari/power_sum.hpp"
#include "mpnehari/solver.hpp"
#include "mpnehari/spaces.hpp"
