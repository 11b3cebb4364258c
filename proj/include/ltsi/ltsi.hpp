#pragma once

#include "ltsi/calculus.hpp"
#include "ltsi/error.hpp"
#include "ltsi/expr.hpp"
#include "ltsi/localtime.hpp"
#include "ltsi/ltspace.hpp"
#include "ltsi/measure.hpp"
#include "ltsi/montecarlo.hpp"
#include "ltsi/path.hpp"
#include "ltsi/rng.hpp"
#include "ltsi/roots.hpp"
#include "ltsi/sdelt.hpp"

namespace ltsi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ltsi
