#pragma once

#include <stdexcept>
#include <string>

namespace qzeta {

/// Bad argument at a public boundary (mixed-sign word, q outside (0,1), ...).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The certified quadrature remainder could not be pushed below the target.
struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A coefficient that should cancel (pole in eps or delta) survived above tolerance.
struct ResidualPole : std::runtime_error {
    int exponent;
    double magnitude;
    ResidualPole(int exp, double mag)
        : std::runtime_error("residual pole at exponent " + std::to_string(exp) +
                             ", magnitude " + std::to_string(mag)),
          exponent(exp), magnitude(mag) {}
};

/// A truncated-series operation would need coefficients beyond any computable horizon.
struct TruncationOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shifting vector incompatible with the argument vector.
struct InvalidShift : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace qzeta
