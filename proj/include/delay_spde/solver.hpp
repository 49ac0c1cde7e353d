#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "delay_spde/path.hpp"
#include "delay_spde/stochastic.hpp"
#include "delay_spde/vnorms.hpp"

namespace delay_spde {

/// The full problem data: generator (through the Space), drift F, diffusion B,
/// initial history, history weight, smoothing exponents and the solution-space
/// parameters. Drift and diffusion receive the absolute time and the current
/// segment; null std::function means the term is absent.
struct ProblemSpec {
    using DriftFn = std::function<void(double t, const HistorySegment& seg, Eigen::VectorXd& out)>;
    using DiffusionFn = std::function<void(double t, const HistorySegment& seg, Eigen::MatrixXd& out)>;

    SpacePtr space;
    WeightFunction weight = WeightFunction::exponential(1.0);
    HistorySegmentPtr initial_history;
    DriftFn drift;         // values in E_{-theta_F}
    DiffusionFn diffusion; // modes x noise_modes blocks, values in L(H, E_{-theta_B})
    int noise_modes = 0;

    double eta = 0.0, theta_f = 0.0, theta_b = 0.0;
    double p = 4.0;
    double alpha = 0.3;
    double type_tau = 2.0; // metadata only
    double horizon = 1.0;

    /// Smoothing admissibility and the alpha window of the contraction result.
    void validate() const;
};

/// (S * Psi)(t_i) per mode, exact for piecewise-linear nodal data.
Eigen::MatrixXd det_convolution(const Space& space, const Eigen::MatrixXd& psi, double dt);

/// (S <> B)(t_i): diffusion frozen at cell-left endpoints, exact
/// Ornstein-Uhlenbeck transfer per mode. Rejects non-adapted step processes.
Eigen::MatrixXd stoch_convolution(const Space& space, const StepProcess& b,
                                  const CylindricalNoise& noise, int cell_offset, int cells);

/// One application of the fixed-point map on [0, T]:
/// L_T(phi)(t) = S(t) Phi(0) + S*F(., tilde phi)(t) + S<>B(., tilde phi)(t).
/// `history` is the segment gluing phi below zero; noise cells are consumed
/// starting at cell_offset and drift/diffusion see absolute time t_offset + t.
MildPath apply_LT(const ProblemSpec& spec, const MildPath& phi, const HistorySegmentPtr& history,
                  const CylindricalNoise& noise, int cell_offset = 0, double t_offset = 0.0);

struct ContractionEstimate {
    double max_ratio = 0.0;
    std::vector<double> ratios;
    int skipped = 0;
};

/// Empirical Lipschitz constant of L_T on [0, T] over seeded probe pairs.
ContractionEstimate empirical_contraction(const ProblemSpec& spec, double T, int steps,
                                          const CylindricalNoise& noise, int pairs,
                                          std::uint64_t seed, const VNormConfig& vcfg);

struct PicardIterate {
    int iteration = 0;
    double residual = 0.0; // ||phi^{k+1} - phi^k||_V
    double ratio = 0.0;    // residual_k / residual_{k-1}
};

struct SubintervalRecord {
    double t_start = 0.0, t_end = 0.0;
    std::vector<PicardIterate> iterates;
    double fixed_point_residual = 0.0; // ||U - L_T(U)||_V on the subinterval
    bool converged = false;
};

struct ConvergenceRecord {
    double contraction_horizon = 0.0; // chosen T
    double contraction_ratio = 0.0;   // measured C_T at the chosen T
    int bisections = 0;
    std::vector<std::pair<double, double>> contraction_scan; // (T, C_T) per bisection step
    std::vector<SubintervalRecord> subintervals;
};

struct PicardResult {
    MildPath path;
    ConvergenceRecord record;
    bool converged = false;
};

struct PicardOptions {
    double tol = 1e-6;
    int max_iter = 60;
    int contraction_pairs = 8;
    int max_bisections = 10;
    double contraction_threshold = 0.5;
    int force_subintervals = 0; // > 0 skips the bisection and pins the count
    std::uint64_t probe_seed = 99;
};

/// Contraction-driven fixed-point solve: bisect T until the empirical C_T is
/// below 1/2, iterate phi -> L_T(phi) from the semigroup orbit, restart from
/// the reached segment, and concatenate up to the horizon.
PicardResult picard_solve(const ProblemSpec& spec, const CylindricalNoise& noise,
                          const PicardOptions& opts, const VNormConfig& vcfg);

/// Independent exponential-Euler cross-check on the same grid and noise.
MildPath step_solve(const ProblemSpec& spec, const CylindricalNoise& noise);

struct ConvergenceStudy {
    std::vector<double> dt;     // per level
    std::vector<double> error;  // mean strong error at the horizon vs finest
    double order = 0.0;         // fitted slope of log2(error) against level
    double order_halfwidth = 0.0;
    bool monotone = true;
};

enum class SolveMethod { Picard, Step, PicardVsStep };

/// Coupled-noise refinement study: levels of dt halving against the finest
/// level (or picard against step on the same grid).
ConvergenceStudy strong_convergence_study(const ProblemSpec& spec, SolveMethod method, int levels,
                                          int base_steps, int paths, std::uint64_t seed,
                                          const PicardOptions& opts, const VNormConfig& vcfg);

} // namespace delay_spde
