#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "delay_spde/errors.hpp"
#include "delay_spde/rng.hpp"

namespace delay_spde {

/// Truncated H-cylindrical Brownian motion: independent increments
/// dW_n(i) ~ N(0, dt) for noise mode n and time cell i, reproducible from
/// (seed, path_id). Coarsening sums consecutive fine increments, which is the
/// coupling used by every refinement study.
class CylindricalNoise {
public:
    CylindricalNoise(int noise_modes, int steps, double dt, std::uint64_t seed,
                     std::uint64_t path_id = 0);

    int modes() const { return static_cast<int>(increments_.rows()); }
    int steps() const { return static_cast<int>(increments_.cols()); }
    double dt() const { return dt_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t path_id() const { return path_id_; }
    const Eigen::MatrixXd& increments() const { return increments_; }
    double increment(int mode, int cell) const { return increments_(mode, cell); }

    /// W_n(t_i), the cumulated increments up to node i (W_n(t_0) = 0).
    double brownian(int mode, int node) const;

    /// Coarse noise with dt * factor per cell; increments are exact sums.
    CylindricalNoise coarsen(int factor) const;

    /// Explicit increments (splicing and coupling experiments).
    static CylindricalNoise from_increments(Eigen::MatrixXd increments, double dt);

private:
    CylindricalNoise(Eigen::MatrixXd increments, double dt, std::uint64_t seed,
                     std::uint64_t path_id);

    Eigen::MatrixXd increments_; // modes x steps
    double dt_;
    std::uint64_t seed_, path_id_;
};

/// Read-only view of the increments strictly before a cell boundary; the only
/// noise access a step-process builder gets, so anticipation cannot be
/// expressed through it.
class NoiseView {
public:
    NoiseView(const CylindricalNoise& noise, int limit) : noise_(noise), limit_(limit) {}

    int modes() const { return noise_.modes(); }
    int limit() const { return limit_; }
    double increment(int mode, int cell) const {
        if (cell >= limit_)
            throw structural_error("NoiseView: anticipating access to increment at cell >= limit");
        return noise_.increment(mode, cell);
    }

private:
    const CylindricalNoise& noise_;
    int limit_;
};

/// Finite-rank step process: one operator matrix (rows x noise modes) per time
/// cell. Built through the adapted interface, cell i sees only increments < i.
class StepProcess {
public:
    using Builder = std::function<Eigen::MatrixXd(int cell, const NoiseView& past)>;

    static StepProcess adapted(const CylindricalNoise& noise, int rows, const Builder& builder);
    /// Direct construction; marked non-adapted (adversarial/testing path).
    static StepProcess unchecked(std::vector<Eigen::MatrixXd> cells, bool adapted = false);

    int cells() const { return static_cast<int>(cells_.size()); }
    int rows() const { return rows_; }
    int noise_modes() const { return cols_; }
    bool adapted() const { return adapted_; }
    const Eigen::MatrixXd& cell(int i) const { return cells_.at(i); }

private:
    StepProcess(std::vector<Eigen::MatrixXd> cells, bool adapted);

    std::vector<Eigen::MatrixXd> cells_;
    int rows_ = 0, cols_ = 0;
    bool adapted_ = false;
};

/// The step-process integral: xi(t_i) = sum_{j < i} Phi_j dW(j), returned as a
/// (rows x steps+1) matrix with xi(t_0) = 0.
Eigen::MatrixXd integrate_step(const StepProcess& process, const CylindricalNoise& noise);

/// Exact Ornstein-Uhlenbeck transition for one mode:
/// a+ = exp(-lambda dt) a + sigma sqrt((1 - exp(-2 lambda dt)) / (2 lambda)) xi.
double ou_exact_step(double a, double lambda, double sigma, double dt, double xi);

} // namespace delay_spde
