// Complex log-gamma (principal branch) via a Lanczos approximation with
// reflection for Re z < 1/2. Relative accuracy is 1e-13 or better away from
// the poles; unit tests pin this against high-precision reference values.
#pragma once

#include "dp3/numeric.hpp"

namespace dp3 {

cx log_gamma(cx z);
cx gamma_fn(cx z);

// arg Gamma(1/2 + i*rho) for real rho, continuous in rho with value 0 at 0.
double arg_gamma_half_plus_i(double rho);

}  // namespace dp3
