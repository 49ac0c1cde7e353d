#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "delay_spde/errors.hpp"

namespace delay_spde {

/// Dirichlet Laplacian on (0, length): eigenvalues lambda_k = (k pi / length)^2
/// against the orthonormal sine basis e_k(s) = sqrt(2/length) sin(k pi s / length).
struct DirichletLaplacian1D {
    double length = 1.0;
    int mode_count = 64;
    double shift = 0.0; // the stability shift w; 0 suffices since lambda_1 > 0
    Eigen::VectorXd eigenvalues;

    DirichletLaplacian1D(double length_, int modes, double shift_ = 0.0);
};

/// Immutable spatial context shared by every field of one experiment: the
/// generator, the quadrature grid in (0, length) and the cached synthesis
/// matrix. The composite-trapezoid rule on the uniform grid is exact for the
/// sine-basis Gram matrix when mode_count <= quad_points, so the grid L2 norm
/// agrees with the coefficient norm to machine precision.
class Space {
public:
    Space(double length, int modes, int quad_points);

    static std::shared_ptr<const Space> make(double length, int modes, int quad_points);

    const DirichletLaplacian1D& generator() const { return op_; }
    double length() const { return op_.length; }
    int modes() const { return op_.mode_count; }
    int quad_points() const { return static_cast<int>(grid_.size()); }
    const Eigen::VectorXd& lambda() const { return op_.eigenvalues; }
    const Eigen::VectorXd& grid() const { return grid_; }
    double cell() const { return cell_; }
    const Eigen::MatrixXd& synthesis() const { return synth_; }

    Eigen::VectorXd point_values(const Eigen::VectorXd& coeffs) const;
    /// Inverse of point_values on the resolved modes (exact for modes <= quad_points).
    Eigen::VectorXd coefficients(const Eigen::VectorXd& point_values) const;

    double lp_norm(const Eigen::VectorXd& coeffs, double p) const;
    double lp_norm_points(const Eigen::VectorXd& points, double p) const;

private:
    DirichletLaplacian1D op_;
    Eigen::VectorXd grid_;
    double cell_;
    Eigen::MatrixXd synth_; // quad_points x modes
};

using SpacePtr = std::shared_ptr<const Space>;

/// An element of E = L^p(S) as Dirichlet-sine coefficients on a shared Space.
struct SpectralField {
    SpacePtr space;
    Eigen::VectorXd coeffs;

    SpectralField() = default;
    SpectralField(SpacePtr space_, Eigen::VectorXd coeffs_);

    static SpectralField zero(SpacePtr space);
    static SpectralField mode(SpacePtr space, int k, double amplitude = 1.0);

    const Eigen::VectorXd& point_values() const; // cached synthesis
    double lp_norm(double p) const;

private:
    mutable std::optional<Eigen::VectorXd> points_;
};

/// S(t) x, acting diagonally: a_k -> exp(-lambda_k t) a_k. Requires t >= 0.
SpectralField semigroup_apply(double t, const SpectralField& x);

/// Diagonal factors exp(-lambda_k t) (solver fast path).
Eigen::VectorXd semigroup_factors(const Space& space, double t);

/// (-A)^eta x, spectrally: a_k -> lambda_k^eta a_k. Any real eta.
SpectralField frac_power_apply(double eta, const SpectralField& x);

/// ||x||_{E_eta} = ||x||_{L^p} + ||(-A)^eta x||_{L^p}.
double e_eta_norm(const SpectralField& x, double eta, double p);

struct AnalyticScanResult {
    double constant = 0.0;    // sup over samples and t of t^eta ||S(t)x||_{E_eta} / ||x||
    int skipped = 0;          // zero sample fields skipped
    double arg_t = 0.0;       // maximizing t
};

/// Empirical constant for ||S(t)||_{E -> E_eta} <= C_eta t^{-eta} over a
/// t-grid in (0, T0] and a set of sample fields.
AnalyticScanResult analytic_estimate_scan(double eta, const std::vector<double>& t_grid,
                                          const std::vector<SpectralField>& samples, double p);

/// Log-spaced scan grid on [t_min, t_max]; doubling `points - 1` refines it
/// by nested midpoint insertion.
std::vector<double> log_spaced_grid(double t_min, double t_max, int points);

} // namespace delay_spde
