#include "delay_spde/spectral.hpp"

#include <cmath>
#include <numbers>

namespace delay_spde {

DirichletLaplacian1D::DirichletLaplacian1D(double length_, int modes, double shift_)
    : length(length_), mode_count(modes), shift(shift_) {
    if (length <= 0.0) throw std::domain_error("DirichletLaplacian1D: length must be positive");
    if (modes < 1) throw std::domain_error("DirichletLaplacian1D: need at least one mode");
    eigenvalues.resize(modes);
    for (int k = 1; k <= modes; ++k) {
        const double kr = k * std::numbers::pi / length;
        eigenvalues(k - 1) = kr * kr;
    }
}

Space::Space(double length, int modes, int quad_points) : op_(length, modes, 0.0) {
    if (quad_points < modes)
        throw structural_error("Space: quad_points must be >= modes for exact analysis");
    cell_ = length / (quad_points + 1);
    grid_.resize(quad_points);
    for (int q = 1; q <= quad_points; ++q) grid_(q - 1) = q * cell_;
    synth_.resize(quad_points, modes);
    const double scale = std::sqrt(2.0 / length);
    for (int k = 1; k <= modes; ++k)
        for (int q = 0; q < quad_points; ++q)
            synth_(q, k - 1) = scale * std::sin(k * std::numbers::pi * grid_(q) / length);
}

std::shared_ptr<const Space> Space::make(double length, int modes, int quad_points) {
    return std::make_shared<const Space>(length, modes, quad_points);
}

Eigen::VectorXd Space::point_values(const Eigen::VectorXd& coeffs) const {
    return synth_ * coeffs;
}

Eigen::VectorXd Space::coefficients(const Eigen::VectorXd& point_values) const {
    return cell_ * (synth_.transpose() * point_values);
}

double Space::lp_norm_points(const Eigen::VectorXd& points, double p) const {
    if (p == 2.0) return std::sqrt(cell_ * points.squaredNorm());
    double acc = 0.0;
    for (Eigen::Index q = 0; q < points.size(); ++q)
        acc += std::pow(std::abs(points(q)), p);
    return std::pow(cell_ * acc, 1.0 / p);
}

double Space::lp_norm(const Eigen::VectorXd& coeffs, double p) const {
    if (p == 2.0) return coeffs.norm(); // trapezoid L2 equals the coefficient norm
    return lp_norm_points(synth_ * coeffs, p);
}

SpectralField::SpectralField(SpacePtr space_, Eigen::VectorXd coeffs_)
    : space(std::move(space_)), coeffs(std::move(coeffs_)) {
    if (!space) throw structural_error("SpectralField: null space");
    if (coeffs.size() != space->modes())
        throw structural_error("SpectralField: coefficient count does not match space");
}

SpectralField SpectralField::zero(SpacePtr space) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(space->modes());
    return SpectralField(std::move(space), std::move(c));
}

SpectralField SpectralField::mode(SpacePtr space, int k, double amplitude) {
    if (k < 1 || k > space->modes()) throw std::domain_error("SpectralField::mode: index out of range");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(space->modes());
    c(k - 1) = amplitude;
    return SpectralField(std::move(space), std::move(c));
}

const Eigen::VectorXd& SpectralField::point_values() const {
    if (!points_) points_ = space->point_values(coeffs);
    return *points_;
}

double SpectralField::lp_norm(double p) const {
    return space->lp_norm(coeffs, p);
}

SpectralField semigroup_apply(double t, const SpectralField& x) {
    if (t < 0.0) throw std::domain_error("semigroup_apply: t must be nonnegative");
    Eigen::VectorXd c = x.coeffs.cwiseProduct((-t * x.space->lambda().array()).exp().matrix());
    return SpectralField(x.space, std::move(c));
}

Eigen::VectorXd semigroup_factors(const Space& space, double t) {
    if (t < 0.0) throw std::domain_error("semigroup_factors: t must be nonnegative");
    return (-t * space.lambda().array()).exp();
}

SpectralField frac_power_apply(double eta, const SpectralField& x) {
    if (eta == 0.0) return x;
    Eigen::VectorXd c = x.coeffs.cwiseProduct(x.space->lambda().array().pow(eta).matrix());
    return SpectralField(x.space, std::move(c));
}

double e_eta_norm(const SpectralField& x, double eta, double p) {
    if (eta < 0.0) throw std::domain_error("e_eta_norm: eta must be nonnegative");
    return x.lp_norm(p) + frac_power_apply(eta, x).lp_norm(p);
}

std::vector<double> log_spaced_grid(double t_min, double t_max, int points) {
    if (!(t_min > 0.0 && t_max > t_min && points >= 2))
        throw std::domain_error("log_spaced_grid: need 0 < t_min < t_max and >= 2 points");
    std::vector<double> grid(points);
    const double a = std::log(t_min), b = std::log(t_max);
    for (int i = 0; i < points; ++i)
        grid[i] = std::exp(a + (b - a) * i / (points - 1));
    return grid;
}

AnalyticScanResult analytic_estimate_scan(double eta, const std::vector<double>& t_grid,
                                          const std::vector<SpectralField>& samples, double p) {
    AnalyticScanResult out;
    for (const auto& x : samples) {
        const double base = x.lp_norm(p);
        if (base == 0.0) {
            ++out.skipped;
            continue;
        }
        for (double t : t_grid) {
            if (t <= 0.0) throw std::domain_error("analytic_estimate_scan: t_grid must be positive");
            const double ratio = std::pow(t, eta) * e_eta_norm(semigroup_apply(t, x), eta, p) / base;
            if (ratio > out.constant) {
                out.constant = ratio;
                out.arg_t = t;
            }
        }
    }
    return out;
}

} // namespace delay_spde
