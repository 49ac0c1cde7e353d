#include "delay_spde/path.hpp"

#include <cmath>

namespace delay_spde {

MildPath::MildPath(SpacePtr space, Eigen::VectorXd times, Eigen::MatrixXd values,
                   HistorySegmentPtr history, bool adapted)
    : space_(std::move(space)), times_(std::move(times)), values_(std::move(values)),
      history_(std::move(history)), adapted_(adapted) {
    if (!space_) throw structural_error("MildPath: null space");
    if (times_.size() < 2 || times_(0) != 0.0)
        throw structural_error("MildPath: time grid must start at 0 with >= 2 nodes");
    for (Eigen::Index i = 1; i < times_.size(); ++i)
        if (!(times_(i) > times_(i - 1))) throw structural_error("MildPath: times must increase");
    if (values_.rows() != space_->modes() || values_.cols() != times_.size())
        throw structural_error("MildPath: value shape does not match grid");
    if (history_ && history_->space() != space_)
        throw structural_error("MildPath: history lives on a different space");
}

MildPath MildPath::semigroup_orbit(const SpacePtr& space, const HistorySegmentPtr& history,
                                   double horizon, int steps) {
    Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(steps + 1, 0.0, horizon);
    Eigen::MatrixXd values(space->modes(), steps + 1);
    const Eigen::VectorXd head = history->head();
    for (int i = 0; i <= steps; ++i)
        values.col(i) = head.cwiseProduct(semigroup_factors(*space, times(i)).matrix());
    return MildPath(space, std::move(times), std::move(values), history);
}

MildPath MildPath::constant(const SpacePtr& space, const HistorySegmentPtr& history,
                            const Eigen::VectorXd& coeffs, double horizon, int steps) {
    Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(steps + 1, 0.0, horizon);
    Eigen::MatrixXd values = coeffs.replicate(1, steps + 1);
    return MildPath(space, std::move(times), std::move(values), history);
}

Eigen::VectorXd MildPath::eval(double t) const {
    if (t < 0.0) {
        if (history_) return history_->eval(t);
        return Eigen::VectorXd::Zero(space_->modes());
    }
    const Eigen::Index n = times_.size();
    if (t > times_(n - 1) * (1.0 + 1e-12) + 1e-300)
        throw std::domain_error("MildPath::eval: t beyond horizon");
    if (t >= times_(n - 1)) return values_.col(n - 1);
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (times_(mid) <= t)
            lo = mid;
        else
            hi = mid;
    }
    const double lam = (t - times_(lo)) / (times_(hi) - times_(lo));
    if (lam == 0.0) return values_.col(lo);
    return (1.0 - lam) * values_.col(lo) + lam * values_.col(hi);
}

MildPath MildPath::difference(const MildPath& a, const MildPath& b) {
    if (a.space_ != b.space_ || a.times_.size() != b.times_.size() ||
        (a.times_ - b.times_).cwiseAbs().maxCoeff() != 0.0)
        throw structural_error("MildPath::difference: mismatched grids");
    return MildPath(a.space_, a.times_, a.values_ - b.values_, nullptr,
                    a.adapted_ && b.adapted_);
}

Eigen::VectorXd HatExtension::eval(double t) const {
    if (t > 0.0) return Eigen::VectorXd::Zero(history->space()->modes());
    return history->eval(t);
}

MildPath extend_tilde(const MildPath& path, const HistorySegmentPtr& history, double head_tol) {
    if (!history) throw structural_error("extend_tilde: null history");
    const Eigen::VectorXd head = history->head();
    const double scale = std::max(1.0, head.norm());
    if ((path.values().col(0) - head).norm() > head_tol * scale)
        throw consistency_error("extend_tilde: path(0) does not match history head");
    return MildPath(path.space(), path.times(), path.values(), history, path.adapted());
}

HatExtension extend_hat(const HistorySegmentPtr& history, double horizon) {
    if (!history) throw structural_error("extend_hat: null history");
    if (horizon <= 0.0) throw std::domain_error("extend_hat: horizon must be positive");
    return HatExtension{history, horizon};
}

namespace {

template <typename Eval>
HistorySegment build_segment(const SpacePtr& space, const HistoryGridPtr& grid, double t,
                             Eval&& eval) {
    Eigen::MatrixXd vals(space->modes(), grid->node_count());
    for (int j = 0; j < grid->node_count(); ++j) vals.col(j) = eval(t + grid->nodes()(j));
    return HistorySegment(space, grid, std::move(vals));
}

} // namespace

HistorySegment segment_at(const MildPath& path, double t) {
    if (t < 0.0 || t > path.horizon() * (1.0 + 1e-12))
        throw std::domain_error("segment_at: t outside [0, horizon]");
    if (!path.history()) throw structural_error("segment_at: path carries no initial history");
    return build_segment(path.space(), path.history()->grid(), t,
                         [&](double u) { return path.eval(u); });
}

HistorySegment segment_at(const HatExtension& path, double t) {
    if (t < 0.0 || t > path.horizon * (1.0 + 1e-12))
        throw std::domain_error("segment_at: t outside [0, horizon]");
    return build_segment(path.history->space(), path.history->grid(), t,
                         [&](double u) { return path.eval(u); });
}

KmReport check_km_inequality(const MildPath& path, double t, const WeightFunction& w, double p,
                             double tol) {
    if (!path.history()) throw structural_error("check_km_inequality: path carries no history");
    const HistorySegment seg = segment_at(path, t);
    KmReport rep;
    rep.lhs = path.space()->lp_norm(seg.head(), p);
    rep.mid = b_norm(seg, w, p);

    double sup = 0.0;
    for (int i = 0; i < path.node_count(); ++i) {
        if (path.times()(i) > t) break;
        sup = std::max(sup, path.space()->lp_norm(path.values().col(i), p));
    }
    sup = std::max(sup, rep.lhs);
    const double initial = b_norm(*path.history(), w, p);
    rep.rhs = k_fn(t, w, p) * sup + m_fn(t, w, p) * initial;
    rep.pass = (rep.lhs <= rep.mid + tol) && (rep.mid <= rep.rhs + tol);
    return rep;
}

} // namespace delay_spde
