#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "delay_spde/path.hpp"

namespace delay_spde {

/// Configuration of the solution-space norms: the singular exponent alpha, the
/// moment p, the flavor (sup over t or integrated in t), the t-subgrid used
/// for the outer sup/integral and the inner gamma-norm MC budget.
struct VNormConfig {
    enum class Flavor { SupInT, IntegratedInT };

    double alpha = 0.3;
    double p = 4.0;
    Flavor flavor = Flavor::SupInT;
    int t_subgrid = 12;       // 0 => every grid node
    int gamma_samples = 1024; // inner MC budget per (path, t)
    std::uint64_t seed = 7;

    void validate() const;
};

struct VNormReport {
    double value = 0.0;
    double sup_term = 0.0;   // (E ||phi||_C^p)^{1/p}
    double gamma_term = 0.0; // sup_t or integral flavor of the weighted gamma part
    double standard_error = 0.0;
};

/// Exact cell masses of mu_{t,alpha}(ds) = (t-s)^{-2 alpha} ds on the cells of
/// `times` below t. Total mass telescopes to t^{1-2 alpha}/(1-2 alpha).
Eigen::VectorXd mu_weights(double t, double alpha, const Eigen::VectorXd& times);

VNormReport v_norm(const std::vector<const MildPath*>& ensemble, const VNormConfig& cfg);
VNormReport v_norm(const MildPath& path, const VNormConfig& cfg);

struct HolderReport {
    double value = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
};

/// Empirical (E || U - S phi(0) ||^p_{C^lambda([0,T]; E_delta)})^{1/p} over the
/// grid. Admissible region: lambda >= 0, delta >= eta and
/// lambda + delta < min{1/2 - 1/p - theta_B, 1 - theta_F}.
HolderReport holder_diagnostic(const std::vector<const MildPath*>& ensemble, double lambda,
                               double delta, double p, double eta = 0.0, double theta_f = 0.0,
                               double theta_b = 0.0);

} // namespace delay_spde
