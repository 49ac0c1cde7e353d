#pragma once

#include <cmath>

namespace delay_spde {

/// phi1(z) = (1 - exp(-z))/z, stable near 0.
inline double phi1(double z) {
    if (std::abs(z) < 1e-6) return 1.0 - z / 2.0 + z * z / 6.0;
    return -std::expm1(-z) / z;
}

/// phi2(z) = (1 - phi1(z))/z = (exp(-z) - 1 + z)/z^2, stable near 0.
inline double phi2(double z) {
    if (std::abs(z) < 1e-4) return 0.5 - z / 6.0 + z * z / 24.0;
    return (1.0 - phi1(z)) / z;
}

/// Standard deviation of int_0^dt exp(-lambda (dt-s)) dW(s):
/// sqrt((1 - exp(-2 lambda dt)) / (2 lambda)) = sqrt(dt phi1(2 lambda dt)).
inline double ou_gain(double lambda, double dt) {
    return std::sqrt(dt * phi1(2.0 * lambda * dt));
}

} // namespace delay_spde
