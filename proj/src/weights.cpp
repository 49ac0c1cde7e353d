#include "delay_spde/weights.hpp"

#include <algorithm>
#include <cmath>

#include "delay_spde/rng.hpp"

namespace delay_spde {

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace

WeightFunction::WeightFunction(Kind kind, double rate, std::function<double(double)> g,
                               std::function<double(double)> G, std::string label)
    : kind_(kind), rate_(rate), g_(std::move(g)), G_(std::move(G)), label_(std::move(label)) {}

WeightFunction WeightFunction::exponential(double rate) {
    if (rate <= 0.0) throw std::domain_error("WeightFunction::exponential: rate must be positive");
    auto g = [rate](double theta) { return std::exp(rate * theta); };
    return WeightFunction(Kind::Exponential, rate, g, g, "exp");
}

WeightFunction WeightFunction::constant() {
    auto one = [](double) { return 1.0; };
    return WeightFunction(Kind::Constant, 0.0, one, one, "const");
}

WeightFunction WeightFunction::custom(std::function<double(double)> g, std::function<double(double)> G,
                                      std::string label) {
    return WeightFunction(Kind::Custom, 0.0, std::move(g), std::move(G), std::move(label));
}

double WeightFunction::integrate(double a, double b, double tol) const {
    if (a > b) throw std::domain_error("WeightFunction::integrate: a > b");
    return adaptive_simpson(g_, a, b, tol);
}

WeightAxiomReport verify_weight_axioms(const WeightFunction& w, int samples, std::uint64_t seed,
                                       double span, double rtol) {
    rng::CounterRng gen(rng::substream(seed, 0x77617861)); // "waxa"
    WeightAxiomReport rep;
    for (int i = 0; i < samples; ++i) {
        const double s = -span * gen.uniform(i, 0);
        const double theta = -span * gen.uniform(i, 1);
        const double lhs = w.g(s + theta);
        const double rhs = w.companion(s) * w.g(theta);
        const double viol = (lhs - rhs) / std::max(1e-300, rhs);
        if (viol > rep.max_relative_violation) {
            rep.max_relative_violation = viol;
            rep.worst_s = s;
            rep.worst_theta = theta;
        }
    }
    rep.pass = rep.max_relative_violation <= rtol;
    return rep;
}

double truncation_radius(const WeightFunction& w, double eps_tail, double p) {
    if (eps_tail <= 0.0) throw std::domain_error("truncation_radius: eps_tail must be positive");
    if (w.kind() == WeightFunction::Kind::Exponential)
        return -std::log(eps_tail * w.rate() * p) / (w.rate() * p);
    // Generic: grow R until the sampled tail mass of g drops below eps_tail.
    double radius = 1.0;
    for (int i = 0; i < 64; ++i) {
        const double tail = w.integrate(-8.0 * radius, -radius, 1e-12);
        if (tail < eps_tail && w.g(-radius) * radius < eps_tail) return radius;
        radius *= 2.0;
    }
    throw std::domain_error("truncation_radius: weight tail does not decay");
}

HistoryGrid::HistoryGrid(Eigen::VectorXd nodes, double eps_tail)
    : nodes_(std::move(nodes)), eps_tail_(eps_tail) {
    const Eigen::Index m = nodes_.size();
    if (m < 2) throw structural_error("HistoryGrid: need at least two nodes");
    if (nodes_(0) != 0.0) throw structural_error("HistoryGrid: first node must be 0");
    for (Eigen::Index j = 1; j < m; ++j)
        if (!(nodes_(j) < nodes_(j - 1))) throw structural_error("HistoryGrid: nodes must strictly decrease");
    weights_.resize(m);
    weights_(0) = 0.5 * (nodes_(0) - nodes_(1));
    weights_(m - 1) = 0.5 * (nodes_(m - 2) - nodes_(m - 1));
    for (Eigen::Index j = 1; j + 1 < m; ++j) weights_(j) = 0.5 * (nodes_(j - 1) - nodes_(j + 1));
}

std::shared_ptr<const HistoryGrid> HistoryGrid::geometric(double radius, int cells, double stretch,
                                                          double eps_tail) {
    if (radius <= 0.0 || cells < 1) throw std::domain_error("HistoryGrid::geometric: bad parameters");
    if (stretch <= 1.0) return uniform(radius, cells, eps_tail);
    Eigen::VectorXd nodes(cells + 1);
    const double denom = std::pow(stretch, cells) - 1.0;
    for (int j = 0; j <= cells; ++j)
        nodes(j) = -radius * (std::pow(stretch, j) - 1.0) / denom;
    nodes(cells) = -radius;
    return std::make_shared<const HistoryGrid>(std::move(nodes), eps_tail);
}

std::shared_ptr<const HistoryGrid> HistoryGrid::uniform(double radius, int cells, double eps_tail) {
    if (radius <= 0.0 || cells < 1) throw std::domain_error("HistoryGrid::uniform: bad parameters");
    Eigen::VectorXd nodes(cells + 1);
    for (int j = 0; j <= cells; ++j) nodes(j) = -radius * j / cells;
    return std::make_shared<const HistoryGrid>(std::move(nodes), eps_tail);
}

double HistoryGrid::weighted_mass(const WeightFunction& w) const {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < nodes_.size(); ++j) acc += weights_(j) * w.g(nodes_(j));
    return acc;
}

HistorySegment::HistorySegment(SpacePtr space, HistoryGridPtr grid, Eigen::MatrixXd values)
    : HistorySegment(std::move(space), std::move(grid), std::move(values), Eigen::VectorXd()) {}

HistorySegment::HistorySegment(SpacePtr space, HistoryGridPtr grid, Eigen::MatrixXd values,
                               Eigen::VectorXd head)
    : space_(std::move(space)), grid_(std::move(grid)), values_(std::move(values)),
      head_(std::move(head)) {
    if (!space_ || !grid_) throw structural_error("HistorySegment: null space or grid");
    if (values_.rows() != space_->modes() || values_.cols() != grid_->node_count())
        throw structural_error("HistorySegment: value shape does not match space/grid");
    if (head_.size() == 0) head_ = values_.col(0);
    if (head_.size() != space_->modes())
        throw structural_error("HistorySegment: head does not match space");
    if (!values_.allFinite() || !head_.allFinite())
        throw numeric_error("HistorySegment: non-finite values");
}

HistorySegment HistorySegment::constant(SpacePtr space, HistoryGridPtr grid,
                                        const Eigen::VectorXd& coeffs) {
    Eigen::MatrixXd v = coeffs.replicate(1, grid->node_count());
    return HistorySegment(std::move(space), std::move(grid), std::move(v));
}

HistorySegment HistorySegment::exponential(SpacePtr space, HistoryGridPtr grid,
                                           const Eigen::VectorXd& profile, double rate) {
    Eigen::MatrixXd v(profile.size(), grid->node_count());
    for (int j = 0; j < grid->node_count(); ++j)
        v.col(j) = profile * std::exp(rate * grid->nodes()(j));
    return HistorySegment(std::move(space), std::move(grid), std::move(v));
}

HistorySegment HistorySegment::from_function(SpacePtr space, HistoryGridPtr grid,
                                             const std::function<Eigen::VectorXd(double)>& phi) {
    Eigen::MatrixXd v(space->modes(), grid->node_count());
    for (int j = 0; j < grid->node_count(); ++j) v.col(j) = phi(grid->nodes()(j));
    return HistorySegment(std::move(space), std::move(grid), std::move(v));
}

Eigen::VectorXd HistorySegment::eval(double theta) const {
    const Eigen::VectorXd& n = grid_->nodes();
    const Eigen::Index m = n.size();
    if (theta >= 0.0) return head_;
    if (theta <= n(m - 1)) return values_.col(m - 1);
    // nodes decrease; locate the cell containing theta
    Eigen::Index lo = 0, hi = m - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (n(mid) >= theta)
            lo = mid;
        else
            hi = mid;
    }
    const double span = n(lo) - n(hi);
    const double lam = (n(lo) - theta) / span;
    return (1.0 - lam) * values_.col(lo) + lam * values_.col(hi);
}

HistorySegment HistorySegment::scaled(double factor) const {
    return HistorySegment(space_, grid_, values_ * factor, head_ * factor);
}

HistorySegment HistorySegment::plus(const HistorySegment& other) const {
    if (other.space_ != space_ || other.grid_ != grid_)
        throw structural_error("HistorySegment::plus: mismatched space or grid");
    return HistorySegment(space_, grid_, values_ + other.values_, head_ + other.head_);
}

double g_tail_integral(const HistorySegment& seg, const WeightFunction& w, double p) {
    if (p < 1.0) throw std::domain_error("g_tail_integral: p must be >= 1");
    const auto& grid = *seg.grid();
    const auto& space = *seg.space();
    if (!seg.values().allFinite()) throw numeric_error("g_tail_integral: non-finite field values");
    double tail = 0.0;
    for (int j = 0; j < grid.node_count(); ++j) {
        const double nrm = space.lp_norm(seg.values().col(j), p);
        tail += grid.weights()(j) * w.g(grid.nodes()(j)) * std::pow(nrm, p);
    }
    return tail;
}

double b_norm(const HistorySegment& seg, const WeightFunction& w, double p) {
    return seg.space()->lp_norm(seg.head(), p) + std::pow(g_tail_integral(seg, w, p), 1.0 / p);
}

double k_fn(double t, const WeightFunction& w, double p) {
    if (t < 0.0) throw std::domain_error("k_fn: t must be nonnegative");
    if (p < 1.0) throw std::domain_error("k_fn: p must be >= 1");
    if (t == 0.0) return 1.0;
    return 1.0 + std::pow(w.integrate(-t, 0.0), 1.0 / p);
}

double m_fn(double t, const WeightFunction& w, double p) {
    if (t < 0.0) throw std::domain_error("m_fn: t must be nonnegative");
    if (p < 1.0) throw std::domain_error("m_fn: p must be >= 1");
    const double mass = (t == 0.0) ? 0.0 : std::pow(w.integrate(-t, 0.0), 1.0 / p);
    return std::max(mass, std::pow(w.companion(-t), 1.0 / p));
}

} // namespace delay_spde
