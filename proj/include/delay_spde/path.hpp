#pragma once

#include <Eigen/Dense>
#include <memory>

#include "delay_spde/weights.hpp"

namespace delay_spde {

using HistorySegmentPtr = std::shared_ptr<const HistorySegment>;

/// An adapted solution path on a time grid in [0, horizon], with an attached
/// initial history on (-inf, 0]. Column i holds the coefficients at times(i).
/// Piecewise linear between nodes; delegates to the history below 0.
class MildPath {
public:
    MildPath(SpacePtr space, Eigen::VectorXd times, Eigen::MatrixXd values,
             HistorySegmentPtr history, bool adapted = true);

    /// t -> S(t) phi(0) on a uniform grid with `steps` cells.
    static MildPath semigroup_orbit(const SpacePtr& space, const HistorySegmentPtr& history,
                                    double horizon, int steps);
    static MildPath constant(const SpacePtr& space, const HistorySegmentPtr& history,
                             const Eigen::VectorXd& coeffs, double horizon, int steps);

    const SpacePtr& space() const { return space_; }
    const Eigen::VectorXd& times() const { return times_; }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd& mutable_values() { return values_; }
    const HistorySegmentPtr& history() const { return history_; }
    bool adapted() const { return adapted_; }
    double horizon() const { return times_(times_.size() - 1); }
    int node_count() const { return static_cast<int>(times_.size()); }

    /// Value at any t <= horizon (history below 0; zero if no history attached).
    Eigen::VectorXd eval(double t) const;

    /// Pathwise difference (shared grid required); carries no history.
    static MildPath difference(const MildPath& a, const MildPath& b);

private:
    SpacePtr space_;
    Eigen::VectorXd times_;
    Eigen::MatrixXd values_;
    HistorySegmentPtr history_;
    bool adapted_;
};

/// Extension of a history by zero on (0, horizon]: evaluates to the history at
/// t <= 0 and to the zero field for t > 0 (right-discontinuous at 0).
struct HatExtension {
    HistorySegmentPtr history;
    double horizon;

    Eigen::VectorXd eval(double t) const;
};

/// Glue a path on [0, T] to an initial history Phi on (-inf, 0); requires the
/// path head to match Phi(0) within head_tol (relative).
MildPath extend_tilde(const MildPath& path, const HistorySegmentPtr& history, double head_tol = 1e-9);

HatExtension extend_hat(const HistorySegmentPtr& history, double horizon);

/// Segment phi_t: values[j] = phi(t + theta_j) on the attached history grid.
HistorySegment segment_at(const MildPath& path, double t);
HistorySegment segment_at(const HatExtension& path, double t);

struct KmReport {
    double lhs = 0.0;  // ||phi(t)||
    double mid = 0.0;  // ||(phi_t, phi(t))||_B
    double rhs = 0.0;  // K(t) sup_{[0,t]} ||phi||  +  M(t) ||(phi_0, phi(0))||_B
    bool pass = false;
};

/// Checks the two-sided segment-norm inequality at time t with slack tol.
KmReport check_km_inequality(const MildPath& path, double t, const WeightFunction& w, double p,
                             double tol = 1e-8);

} // namespace delay_spde
