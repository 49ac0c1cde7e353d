#include <doctest.h>

#include <cmath>

#include "delay_spde/vnorms.hpp"

using namespace delay_spde;

namespace {

struct Fixture {
    SpacePtr space = Space::make(1.0, 6, 32);
    HistoryGridPtr grid = HistoryGrid::geometric(24.0, 64, 1.1);

    MildPath constant_path(const Eigen::VectorXd& x, double horizon, int steps) const {
        auto history =
            std::make_shared<const HistorySegment>(HistorySegment::constant(space, grid, x));
        return MildPath::constant(space, history, x, horizon, steps);
    }
};

} // namespace

TEST_CASE("mu_weights: limits, closed-form total, refinement invariance, domain") {
    const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(9, 0.0, 1.0);

    // alpha -> 0: masses are the cell lengths.
    const Eigen::VectorXd flat = mu_weights(1.0, 0.0, times);
    CHECK(flat.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(flat(i) == doctest::Approx(0.125).epsilon(1e-14));

    // t = 1, alpha = 1/4: total mass = t^{1/2} / (1/2) = 2 exactly.
    const Eigen::VectorXd mu = mu_weights(1.0, 0.25, times);
    CHECK(mu.sum() == doctest::Approx(2.0).epsilon(1e-14));

    const Eigen::VectorXd fine_times = Eigen::VectorXd::LinSpaced(33, 0.0, 1.0);
    CHECK(mu_weights(1.0, 0.25, fine_times).sum() == doctest::Approx(mu.sum()).epsilon(1e-14));

    // Interior t uses only the cells below t.
    const Eigen::VectorXd half = mu_weights(0.5, 0.25, times);
    CHECK(half.size() == 4);
    CHECK(half.sum() == doctest::Approx(std::sqrt(0.5) * 2.0).epsilon(1e-14));

    CHECK_THROWS_AS(mu_weights(1.0, 0.5, times), std::domain_error);
    CHECK_THROWS_AS(mu_weights(1.0, 0.7, times), std::domain_error);
    CHECK_THROWS_AS(mu_weights(2.0, 0.25, times), std::domain_error);
}

TEST_CASE("v_norm: zero ensemble, deterministic rank-one closed form, homogeneity") {
    Fixture f;
    VNormConfig cfg;
    cfg.alpha = 0.3;
    cfg.p = 4.0;
    cfg.t_subgrid = 0;
    cfg.gamma_samples = 20000;

    const MildPath zero = f.constant_path(Eigen::VectorXd::Zero(6), 1.0, 16);
    CHECK(v_norm(zero, cfg).value == 0.0);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
    x(0) = 1.3;
    x(2) = -0.4;
    const MildPath path = f.constant_path(x, 1.0, 16);
    const VNormReport rep = v_norm(path, cfg);
    const double nx = f.space->lp_norm(x, cfg.p);
    CHECK(rep.sup_term == doctest::Approx(nx).epsilon(1e-12));
    // Constant path: gamma part peaks at t = T with value
    // T^{1/2 - alpha} (1 - 2 alpha)^{-1/2} ||x||.
    const double closed = std::pow(1.0, 0.5 - cfg.alpha) / std::sqrt(1.0 - 2.0 * cfg.alpha) * nx;
    CHECK(rep.standard_error > 0.0); // inner MC error propagated for singletons
    CHECK(std::abs(rep.gamma_term - closed) <= 3.0 * rep.standard_error + 1e-9);

    MildPath scaled(f.space, path.times(), 3.0 * path.values(), path.history());
    const VNormReport rep3 = v_norm(scaled, cfg);
    CHECK(rep3.value == doctest::Approx(3.0 * rep.value).epsilon(1e-10));
}

TEST_CASE("v_norm: integrated flavor is dominated by T^{1/p} times the sup flavor") {
    Fixture f;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
    x(1) = 0.9;
    const MildPath path = f.constant_path(x, 1.0, 16);

    VNormConfig sup_cfg;
    sup_cfg.alpha = 0.3;
    sup_cfg.p = 4.0;
    sup_cfg.t_subgrid = 0;
    sup_cfg.gamma_samples = 8000;
    VNormConfig int_cfg = sup_cfg;
    int_cfg.flavor = VNormConfig::Flavor::IntegratedInT;

    const double sup = v_norm(path, sup_cfg).gamma_term;
    const double integrated = v_norm(path, int_cfg).gamma_term;
    CHECK(integrated <= std::pow(1.0, 1.0 / int_cfg.p) * sup * 1.02 + 1e-9);

    CHECK(v_norm(path, sup_cfg).value > 0.0);
    VNormConfig bad = sup_cfg;
    bad.alpha = 0.6;
    CHECK_THROWS_AS(v_norm(path, bad), std::domain_error);
}

TEST_CASE("holder_diagnostic: zero deviation for pure orbits, admissibility gate") {
    Fixture f;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(6);
    auto history =
        std::make_shared<const HistorySegment>(HistorySegment::constant(f.space, f.grid, x));
    const MildPath orbit = MildPath::semigroup_orbit(f.space, history, 1.0, 32);

    const HolderReport rep = holder_diagnostic({&orbit}, 0.2, 0.0, 8.0);
    CHECK(rep.value == 0.0);

    // lambda + delta must stay below 1/2 - 1/p (theta_B = 0, theta_F = 0 => cap 0.375).
    CHECK_THROWS_AS(holder_diagnostic({&orbit}, 0.4, 0.0, 8.0), std::domain_error);
    CHECK_THROWS_AS(holder_diagnostic({&orbit}, 0.2, 0.2, 8.0), std::domain_error);
    CHECK_THROWS_AS(holder_diagnostic({&orbit}, -0.1, 0.0, 8.0), std::domain_error);
}
