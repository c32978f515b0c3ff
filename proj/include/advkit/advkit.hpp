#pragma once

// Umbrella header for the whole toolkit.

#include "attacks.hpp"
#include "datakit.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "projection.hpp"
#include "random.hpp"
#include "svg.hpp"
#include "universal.hpp"

namespace advkit {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace advkit
