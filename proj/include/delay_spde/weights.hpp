#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>

#include "delay_spde/spectral.hpp"

namespace delay_spde {

/// Weight g of the history space B = L^p_g(-inf,0;E) x E together with its
/// submultiplicativity companion G: g(s+theta) <= G(s) g(theta) for s,theta <= 0.
class WeightFunction {
public:
    enum class Kind { Exponential, Constant, Custom };

    static WeightFunction exponential(double rate = 1.0);
    static WeightFunction constant();
    static WeightFunction custom(std::function<double(double)> g, std::function<double(double)> G,
                                 std::string label = "custom");

    Kind kind() const { return kind_; }
    double rate() const { return rate_; }
    const std::string& label() const { return label_; }

    double g(double theta) const { return g_(theta); }
    double companion(double s) const { return G_(s); }

    /// Integral of g over [a, b] with a <= b <= 0, via adaptive Simpson.
    double integrate(double a, double b, double tol = 1e-13) const;

private:
    WeightFunction(Kind kind, double rate, std::function<double(double)> g,
                   std::function<double(double)> G, std::string label);

    Kind kind_;
    double rate_;
    std::function<double(double)> g_, G_;
    std::string label_;
};

struct WeightAxiomReport {
    bool pass = true;
    double max_relative_violation = 0.0;
    double worst_s = 0.0, worst_theta = 0.0;
};

/// Samples (s, theta) pairs and checks g(s+theta) <= G(s) g(theta) within rtol.
WeightAxiomReport verify_weight_axioms(const WeightFunction& w, int samples, std::uint64_t seed,
                                       double span = 30.0, double rtol = 1e-12);

/// Truncation radius R with g-weighted tail mass (for unit-bounded histories)
/// below eps_tail. Closed form for the exponential kernel, search otherwise.
double truncation_radius(const WeightFunction& w, double eps_tail, double p = 1.0);

/// Discretization of (-inf, 0] truncated at -radius: strictly decreasing nodes
/// theta_0 = 0 > ... > theta_M = -radius with trapezoid weights.
class HistoryGrid {
public:
    /// Geometric layout: cell widths grow by `stretch` away from 0.
    static std::shared_ptr<const HistoryGrid> geometric(double radius, int cells, double stretch = 1.03,
                                                        double eps_tail = 1e-10);
    static std::shared_ptr<const HistoryGrid> uniform(double radius, int cells, double eps_tail = 1e-10);
    /// Arbitrary strictly decreasing nodes starting at 0.
    explicit HistoryGrid(Eigen::VectorXd nodes, double eps_tail = 1e-10);

    const Eigen::VectorXd& nodes() const { return nodes_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double radius() const { return -nodes_(nodes_.size() - 1); }
    double eps_tail() const { return eps_tail_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    /// Trapezoid mass sum(w_j g(theta_j)); compare with w.integrate(-R, 0).
    double weighted_mass(const WeightFunction& w) const;

private:
    Eigen::VectorXd nodes_, weights_;
    double eps_tail_;
};

using HistoryGridPtr = std::shared_ptr<const HistoryGrid>;

/// The pair (phi, x) in B on a truncated grid: column j holds the coefficients
/// of phi(theta_j), the head x is stored separately (phi is an L^p class, so
/// the pair may be discontinuous at 0). Segments extracted from continuous
/// paths satisfy values.col(0) == head.
class HistorySegment {
public:
    HistorySegment(SpacePtr space, HistoryGridPtr grid, Eigen::MatrixXd values);
    HistorySegment(SpacePtr space, HistoryGridPtr grid, Eigen::MatrixXd values,
                   Eigen::VectorXd head);

    static HistorySegment constant(SpacePtr space, HistoryGridPtr grid, const Eigen::VectorXd& coeffs);
    /// phi(theta) = profile * exp(rate * theta) (single separable history).
    static HistorySegment exponential(SpacePtr space, HistoryGridPtr grid,
                                      const Eigen::VectorXd& profile, double rate);
    static HistorySegment from_function(SpacePtr space, HistoryGridPtr grid,
                                        const std::function<Eigen::VectorXd(double)>& phi);

    const SpacePtr& space() const { return space_; }
    const HistoryGridPtr& grid() const { return grid_; }
    const Eigen::MatrixXd& values() const { return values_; }
    const Eigen::VectorXd& head() const { return head_; }

    /// phi(theta) by linear interpolation between nodes, the head at theta = 0,
    /// clamped to the deepest node below -R.
    Eigen::VectorXd eval(double theta) const;

    HistorySegment scaled(double factor) const;
    HistorySegment plus(const HistorySegment& other) const;

private:
    SpacePtr space_;
    HistoryGridPtr grid_;
    Eigen::MatrixXd values_; // modes x node_count
    Eigen::VectorXd head_;
};

/// The weighted tail integral sum_j w_j g(theta_j) ||phi(theta_j)||^p.
double g_tail_integral(const HistorySegment& seg, const WeightFunction& w, double p);

/// ||(phi, x)||_B = ||x||_{L^p(S)} + (g tail integral)^{1/p}.
double b_norm(const HistorySegment& seg, const WeightFunction& w, double p);

/// K(t) = 1 + (int_{-t}^0 g)^{1/p}; continuous, K(0) = 1.
double k_fn(double t, const WeightFunction& w, double p);

/// M(t) = max{ (int_{-t}^0 g)^{1/p}, G(-t)^{1/p} }; locally bounded.
double m_fn(double t, const WeightFunction& w, double p);

} // namespace delay_spde
