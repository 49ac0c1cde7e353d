#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "delay_spde/solver.hpp"

namespace delay_spde {

/// Nemytskii drift f(t,s,h) = kappa_f * sat(int e^theta h(theta) dtheta):
/// linear exponential memory with an optional bounded saturation.
struct MemoryDrift {
    double gain = 0.5;      // kappa_f (1/time)
    double sat_level = 0.0; // 0 => linear; else sat(x) = level * tanh(x / level)
};

/// Nemytskii diffusion b_n(t,s,h) = c_n * sat(int e^theta h(theta) dtheta)
/// with c_n = c0 n^{-q}; q > 1/2 keeps the amplitude sequence square-summable.
struct MemoryDiffusion {
    enum class Kind { Zero, Additive, Memory };

    Kind kind = Kind::Memory;
    double c0 = 0.1;
    double decay_q = 1.0;
    bool saturate = true; // sat = tanh (|sat| <= 1, |sat'| <= 1); false => linear
};

struct HeatmemParams {
    double length = 1.0;
    int modes = 64;
    int quad_points = 512;
    double p = 4.0;
    double alpha = 0.3;
    double type_tau = 2.0;
    double horizon = 1.0;

    MemoryDrift drift;
    MemoryDiffusion diffusion;
    int noise_modes = 0; // 0 => modes

    // Initial history Phi(t,s) = scale * exp(rate t) * sin(pi s / length),
    // or an arbitrary coefficient-valued function of theta.
    double history_rate = 1.0;
    double history_scale = 1.0;
    std::function<Eigen::VectorXd(double)> custom_history; // overrides the exponential form

    int history_cells = 256;
    double history_stretch = 1.03;
    double history_radius = 0.0; // 0 => from eps_tail
    double eps_tail = 1e-10;
};

struct HeatmemProblem {
    ProblemSpec spec;
    Eigen::VectorXd amplitudes;     // c_n
    double kernel_dual_norm = 0.0;  // ||e^theta||_{L^{p'}(-inf,0]}
    double lipschitz_f = 0.0;       // kappa_f * kernel_dual_norm
    double lipschitz_diffusion = 0.0; // (sum c_n^2)^{1/2} * kernel_dual_norm
    double admissibility_first = 0.0;  // the (p/2)-mixed-norm integral of the history
    double admissibility_second = 0.0; // the (2/p)-mixed-norm integral
};

/// Assembles the perturbed-heat-with-memory problem on E = L^p(S) with the
/// plain product history space, checking the diffusion decay, the alpha
/// window and the initial-history admissibility class.
HeatmemProblem build_problem(const HeatmemParams& params);

struct LipschitzReport {
    double drift_ratio = 0.0;
    double drift_bound = 0.0;
    double diffusion_ratio = 0.0;
    double diffusion_bound = 0.0;
    int trials = 0;
    bool pass = false;
};

/// Samples segment pairs and checks the empirical Lipschitz ratios of the
/// shipped drift and diffusion against their closed-form constants (5% slack).
LipschitzReport verify_lipschitz(const HeatmemProblem& problem, int trials, std::uint64_t seed = 31,
                                 int gamma_samples = 400, double slack = 0.05);

} // namespace delay_spde
