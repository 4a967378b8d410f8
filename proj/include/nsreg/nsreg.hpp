#pragma once

#include "nsreg/core.hpp"
#include "nsreg/prox.hpp"
#include "nsreg/quasi_newton.hpp"
#include "nsreg/inner.hpp"
#include "nsreg/r2.hpp"
#include "nsreg/trust_region.hpp"
#include "nsreg/experiments.hpp"
#include "nsreg/bench.hpp"
