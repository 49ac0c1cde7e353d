#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "delay_spde/errors.hpp"
#include "delay_spde/stochastic.hpp"
#include "delay_spde/weights.hpp"

namespace delay_spde {

/// Norm of the Banach target of a gamma-radonifying operator. Euclidean, a
/// weighted L^p grid norm, an L^p-of-blocks norm, or the history-space product
/// norm head + (sum_b w_b ||block_b||^p)^{1/p}.
struct TargetNorm {
    enum class Kind { Euclidean, Composite };

    Kind kind = Kind::Euclidean;
    int euclidean_dim = 0;
    double p = 2.0;
    Eigen::VectorXd head_weights;   // may be empty
    Eigen::VectorXd block_weights;  // outer weight per block; may be empty
    Eigen::VectorXd inner_weights;  // per-entry weights inside one block
    int block_dim = 0;

    static TargetNorm euclidean(int dim);
    static TargetNorm weighted_lp(Eigen::VectorXd weights, double p);
    static TargetNorm block_lp(Eigen::VectorXd block_weights, Eigen::VectorXd inner_weights, double p);
    static TargetNorm history_product(Eigen::VectorXd head_weights, Eigen::VectorXd block_weights,
                                      Eigen::VectorXd inner_weights, double p);

    int dim() const;
    double operator()(const Eigen::VectorXd& v) const;
};

/// A finite operator from noise coordinates into a normed target.
struct GammaOperator {
    Eigen::MatrixXd matrix; // target dim x hilbert dim
    TargetNorm target;

    GammaOperator(Eigen::MatrixXd m, TargetNorm t);
    int hilbert_dim() const { return static_cast<int>(matrix.cols()); }
};

struct GammaEstimate {
    double value = 0.0;          // estimated gamma norm
    double standard_error = 0.0; // SE of `value` (delta method)
    double sq_mean = 0.0;        // unbiased estimate of E||R gamma||^2
    double sq_standard_error = 0.0;
    int samples = 0;
};

/// Monte Carlo estimate of (E||sum_n gamma_n R h_n||^2)^{1/2}. Budget >= 1000.
GammaEstimate gamma_norm_mc(const GammaOperator& op, int samples = 20000, std::uint64_t seed = 1);

/// Exact Hilbert-Schmidt value for Euclidean targets (the MC oracle).
double gamma_norm_hilbert(const GammaOperator& op);

/// Stacks per-node row blocks phi(s_j) into one operator into the L^p block
/// space (optionally with a product head), realizing the function-space
/// identification of gamma norms block-wise.
GammaOperator gamma_fubini_forward(const std::vector<Eigen::MatrixXd>& blocks,
                                   Eigen::VectorXd block_weights, Eigen::VectorXd inner_weights,
                                   double p, const Eigen::MatrixXd* head = nullptr,
                                   const Eigen::VectorXd* head_weights = nullptr);

struct L2GammaEstimate {
    double value = 0.0; // gamma part + L2 part
    double gamma_part = 0.0;
    double gamma_se = 0.0;
    double l2_part = 0.0;
    int samples = 0;
};

/// || phi ||_{L^2_gamma(mu; E)} for a field path: columns(i) holds the
/// coefficients of phi(s_i), mu the nonnegative node masses.
L2GammaEstimate l2gamma_norm_fields(const Space& space, const Eigen::MatrixXd& columns,
                                    const Eigen::VectorXd& mu, double p, int samples = 20000,
                                    std::uint64_t seed = 1);

/// Same with segment-valued paths and the history-space norm.
L2GammaEstimate l2gamma_norm_segments(const std::vector<const HistorySegment*>& segments,
                                      const Eigen::VectorXd& mu, const WeightFunction& w, double p,
                                      int samples = 2000, std::uint64_t seed = 1);

struct GammaBoundEstimate {
    double bound = 0.0; // best observed ratio: a lower bound for gamma(T)
    double standard_error = 0.0;
    int trials = 0;
};

/// Randomized lower bound for the gamma-bound of an operator family: maximizes
/// E||sum gamma_n T_n x_n||^2 / E||sum gamma_n x_n||^2 over random finite
/// sequences. Exact sums for Euclidean norms, MC otherwise.
GammaBoundEstimate gamma_bound_estimate(const std::vector<Eigen::MatrixXd>& family,
                                        const TargetNorm& source, const TargetNorm& target,
                                        int trials = 64, int samples = 4000, std::uint64_t seed = 1);

struct MultiplierReport {
    double lhs = 0.0;   // ||M Psi||_gamma
    double rhs = 0.0;   // ||Psi||_gamma
    double bound = 0.0; // gamma-bound estimate of the multiplier family
    double margin = 0.0;
    bool pass = false;
};

/// Checks ||M Psi||_gamma <= (bound + margin) ||Psi||_gamma for a pointwise
/// operator multiplier M(t) against a finite-rank step process Psi.
MultiplierReport check_multiplier_inequality(const std::function<Eigen::MatrixXd(double)>& multiplier,
                                             const std::vector<double>& cell_left, double dt,
                                             const StepProcess& psi, const TargetNorm& source,
                                             const TargetNorm& target, int samples = 20000,
                                             std::uint64_t seed = 1);

/// Haar-ish random orthogonal matrix (QR of a Gaussian matrix).
Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed);

} // namespace delay_spde
