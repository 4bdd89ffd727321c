#pragma once

#include "strainmix/data_io.hpp"
#include "strainmix/errors.hpp"
#include "strainmix/inference.hpp"
#include "strainmix/model.hpp"
#include "strainmix/numeric.hpp"
#include "strainmix/random.hpp"
#include "strainmix/selection.hpp"
#include "strainmix/simulator.hpp"

namespace strainmix {
inline constexpr const char* kVersion = "0.1.0";
}
