#pragma once
// Umbrella header.

#include "qht/estimate.hpp"
#include "qht/io.hpp"
#include "qht/kernels.hpp"
#include "qht/model.hpp"
#include "qht/specfun.hpp"
#include "qht/tomo.hpp"
