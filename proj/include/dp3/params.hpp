// Parameters of the degenerate Painleve III (D7) equation
//   u'' = u'^2/u - u'/tau + (-8 eps u^2 + 2 a b)/tau + b^2/u
// together with the axis labels used by the asymptotic formulae:
// eps1 locates arg tau (multiples of pi on the real axes, of pi/2 on the
// imaginary axes) and eps2 locates arg(eps*b) = pi*eps2.
#pragma once

#include <cmath>

#include "dp3/numeric.hpp"

namespace dp3 {

struct EquationParams {
    cx a{0.0, 0.0};
    double b = 1.0;
    int epsilon = 1;  // +-1
    int eps1 = 0;     // axis label for tau, in {-1, 0, 1}
    int eps2 = 0;     // axis label for eps*b, in {-1, 0, 1}

    double eb() const { return static_cast<double>(epsilon) * b; }
    double eb_abs() const { return std::abs(b); }

    // (eps*b)^{1/3} on the branch fixed by eps2 (negative reals root to
    // negative reals).
    double eb_root13() const {
        return eps2 == 0 ? std::cbrt(eb()) : -std::cbrt(std::abs(eb()));
    }
    double eb_root23() const {
        const double r = eb_root13();
        return r * r;
    }

    void validate() const {
        if (b == 0.0) throw ConfigError("b must be nonzero");
        if (epsilon != 1 && epsilon != -1) throw ConfigError("epsilon must be +1 or -1");
        if (eps1 < -1 || eps1 > 1) throw ConfigError("eps1 must be in {-1,0,1}");
        if (eps2 < -1 || eps2 > 1) throw ConfigError("eps2 must be in {-1,0,1}");
        // sign(eps*b) = (-1)^{eps2}
        const double signed_eb = eb();
        const bool eb_positive = signed_eb > 0.0;
        const bool label_positive = (eps2 == 0);
        if (eb_positive != label_positive)
            throw ConfigError("eps2 inconsistent with the sign of eps*b");
    }
};

}  // namespace dp3
