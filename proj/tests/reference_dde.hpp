#pragma once

// Test-only reference integrator for the scalar linear memory equation
//   m'(t) = -lambda m(t) + b * int_{-inf}^0 e^theta m(t + theta) dtheta,
// with a prescribed history on (-inf, 0]. Heun stepping on a uniform grid;
// the memory integral is evaluated by plain trapezoid quadrature over a
// truncated, grid-aligned past. Deliberately shares no code with the solver.

#include <cmath>
#include <functional>
#include <vector>

namespace dde_reference {

struct Result {
    std::vector<double> times;
    std::vector<double> values;
};

inline Result integrate(double lambda, double b, const std::function<double(double)>& history,
                        double horizon, int steps, double radius = 24.0) {
    const double dt = horizon / steps;
    const int past = static_cast<int>(std::ceil(radius / dt));

    Result out;
    out.times.resize(steps + 1);
    out.values.resize(steps + 1);
    out.values[0] = history(0.0);
    for (int i = 0; i <= steps; ++i) out.times[i] = i * dt;

    auto value_at = [&](int node, double candidate, int candidate_node) -> double {
        if (node < 0) return history(node * dt);
        if (node == candidate_node) return candidate;
        return out.values[node];
    };

    // Trapezoid over theta in [-radius, 0] on the aligned grid.
    auto memory = [&](int node, double candidate, int candidate_node) -> double {
        double acc = 0.0;
        for (int j = 0; j <= past; ++j) {
            const double theta = -j * dt;
            const double w = (j == 0 || j == past) ? 0.5 * dt : dt;
            acc += w * std::exp(theta) * value_at(node - j, candidate, candidate_node);
        }
        return acc;
    };

    for (int i = 0; i < steps; ++i) {
        const double m = out.values[i];
        const double f1 = -lambda * m + b * memory(i, 0.0, -1);
        const double pred = m + dt * f1;
        const double f2 = -lambda * pred + b * memory(i + 1, pred, i + 1);
        out.values[i + 1] = m + 0.5 * dt * (f1 + f2);
    }
    return out;
}

/// Exact solution when the history is u0 e^{r theta}: the pair (m, I) with
/// I(t) = int e^theta m(t+theta) dtheta solves the constant 2x2 linear system
/// m' = -lambda m + b I, I' = m - I, I(0) = u0 / (1 + r).
inline double closed_form_exponential(double lambda, double b, double u0, double r, double t) {
    const double tr = -lambda - 1.0;
    const double det = lambda - b;
    const double disc = tr * tr - 4.0 * det;
    const double root = std::sqrt(disc);
    const double mu_plus = 0.5 * (tr + root);
    const double mu_minus = 0.5 * (tr - root);
    // Eigenvectors of [[-lambda, b], [1, -1]] for eigenvalue mu: (b, mu + lambda).
    const double m0 = u0;
    const double i0 = u0 / (1.0 + r);
    // Solve c_plus * v_plus + c_minus * v_minus = (m0, i0).
    const double vp0 = b, vp1 = mu_plus + lambda;
    const double vm0 = b, vm1 = mu_minus + lambda;
    const double den = vp0 * vm1 - vp1 * vm0;
    const double c_plus = (m0 * vm1 - i0 * vm0) / den;
    const double c_minus = (i0 * vp0 - m0 * vp1) / den;
    return c_plus * vp0 * std::exp(mu_plus * t) + c_minus * vm0 * std::exp(mu_minus * t);
}

} // namespace dde_reference
