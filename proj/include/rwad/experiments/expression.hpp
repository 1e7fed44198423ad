#pragma once

// Parses schedule functions written in config files, e.g.
//   4*sin(pi*tau)        -(2/pi)*sin(pi*tau)        step(0.2, 0.4) * (1 - tau^2)
// Arguments of sin and cos must be affine in tau.

#include <string_view>

#include "rwad/scalar_fn.hpp"

namespace rwad::experiments {

/// Throws ConfigError with the offending position on malformed input.
ScalarFn parse_function(std::string_view text);

}  // namespace rwad::experiments
