#include <doctest.h>

#include <cmath>

#include "delay_spde/path.hpp"
#include "delay_spde/rng.hpp"
#include "delay_spde/weights.hpp"

using namespace delay_spde;

namespace {

// Independent Simpson quadrature used as the oracle for the K/M integrals.
double simpson_oracle(const std::function<double(double)>& f, double a, double b, int panels) {
    double acc = 0.0;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h, x1 = x0 + h;
        acc += (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
    }
    return acc;
}

struct Fixture {
    SpacePtr space = Space::make(1.0, 4, 32);
    HistoryGridPtr grid = HistoryGrid::geometric(26.0, 256, 1.03);
    WeightFunction w = WeightFunction::exponential(1.0);
};

} // namespace

TEST_CASE("weight axioms hold for the shipped kernels") {
    const auto exp_rep = verify_weight_axioms(WeightFunction::exponential(1.3), 4000, 1);
    CHECK(exp_rep.pass);
    const auto const_rep = verify_weight_axioms(WeightFunction::constant(), 4000, 2);
    CHECK(const_rep.pass);
    // Polynomial-decay custom kernel: g(theta) = (1-theta)^{-2}, G = 1.
    const auto poly = WeightFunction::custom([](double t) { return std::pow(1.0 - t, -2.0); },
                                             [](double) { return 1.0; }, "poly");
    const auto poly_rep = verify_weight_axioms(poly, 4000, 3);
    CHECK(poly_rep.pass);
}

TEST_CASE("history grid: trapezoid mass approximates the weight integral") {
    Fixture f;
    const double mass = f.grid->weighted_mass(f.w);
    const double exact = 1.0 - std::exp(-f.grid->radius());
    CHECK(std::abs(mass - exact) < 2e-4);
    // Quadrature error shrinks under refinement.
    auto fine = HistoryGrid::geometric(26.0, 1024, 1.0075);
    CHECK(std::abs(fine->weighted_mass(f.w) - exact) < 1e-5);
    CHECK(f.grid->weights().minCoeff() > 0.0);
    // strictly decreasing nodes enforced
    Eigen::VectorXd bad(3);
    bad << 0.0, -1.0, -0.5;
    CHECK_THROWS_AS((void)HistoryGrid(bad), structural_error);
}

TEST_CASE("b_norm: zero tail, analytic exponential tail, homogeneity") {
    Fixture f;
    // (phi, x) with phi = 0 and ||x|| = 1: norm is exactly 1.
    Eigen::VectorXd head = Eigen::VectorXd::Zero(4);
    head(0) = 1.0;
    const HistorySegment zero_tail(f.space, f.grid, Eigen::MatrixXd::Zero(4, f.grid->node_count()),
                                   head);
    CHECK(b_norm(zero_tail, f.w, 2.0) == doctest::Approx(1.0).epsilon(1e-15));

    // phi = c = 1 on one mode, head 1, g = e^theta, p = 2:
    // 1 + (int e^theta)^{1/2} = 2 up to truncated quadrature.
    const HistorySegment constant = HistorySegment::constant(f.space, f.grid, head);
    CHECK(b_norm(constant, f.w, 2.0) == doctest::Approx(2.0).epsilon(5e-5));

    const double one = b_norm(constant, f.w, 2.0);
    CHECK(b_norm(constant.scaled(2.0), f.w, 2.0) == doctest::Approx(2.0 * one).epsilon(1e-12));
}

TEST_CASE("b_norm: triangle inequality and error paths") {
    Fixture f;
    rng::CounterRng gen(11);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd va(4, f.grid->node_count()), vb(4, f.grid->node_count());
        for (int j = 0; j < f.grid->node_count(); ++j)
            for (int k = 0; k < 4; ++k) {
                va(k, j) = gen.normal(trial * 1000 + j, k);
                vb(k, j) = gen.normal(trial * 1000 + j, 10 + k);
            }
        const HistorySegment a(f.space, f.grid, va), b(f.space, f.grid, vb);
        const double lhs = b_norm(a.plus(b), f.w, 3.0);
        const double rhs = b_norm(a, f.w, 3.0) + b_norm(b, f.w, 3.0);
        CHECK(lhs <= rhs + 1e-10);
    }

    auto other_grid = HistoryGrid::uniform(5.0, 16);
    const HistorySegment a(f.space, f.grid, Eigen::MatrixXd::Zero(4, f.grid->node_count()));
    const HistorySegment c(f.space, other_grid, Eigen::MatrixXd::Zero(4, 17));
    CHECK_THROWS_AS(a.plus(c), structural_error);

    Eigen::MatrixXd nan_vals = Eigen::MatrixXd::Zero(4, f.grid->node_count());
    nan_vals(0, 3) = std::nan("");
    CHECK_THROWS_AS(HistorySegment(f.space, f.grid, nan_vals), numeric_error);
    CHECK_THROWS_AS(b_norm(a, f.w, 0.5), std::domain_error);
}

TEST_CASE("K and M: boundary values and quadrature oracles") {
    const WeightFunction w = WeightFunction::exponential(1.0);
    CHECK(k_fn(0.0, w, 2.0) == 1.0);
    CHECK_THROWS_AS(k_fn(-1.0, w, 2.0), std::domain_error);
    CHECK_THROWS_AS(m_fn(-1.0, w, 2.0), std::domain_error);

    // Oracle quadrature of int_{-1}^0 e^theta, then the displayed formulas.
    const double mass = simpson_oracle([](double t) { return std::exp(t); }, -1.0, 0.0, 512);
    CHECK(k_fn(1.0, w, 2.0) == doctest::Approx(1.0 + std::sqrt(mass)).epsilon(1e-10));
    CHECK(std::abs(k_fn(1.0, w, 2.0) - (1.0 + std::sqrt(1.0 - std::exp(-1.0)))) < 1e-10);

    // M(1): the integral branch wins over G(-1)^{1/2} = e^{-1/2}.
    const double branch_a = std::sqrt(1.0 - std::exp(-1.0));
    const double branch_b = std::exp(-0.5);
    CHECK(branch_a > branch_b);
    CHECK(m_fn(1.0, w, 2.0) == doctest::Approx(branch_a).epsilon(1e-10));
    // For small t the companion branch wins: M(t) -> G(0)^{1/2} = 1.
    CHECK(m_fn(0.01, w, 2.0) == doctest::Approx(std::exp(-0.005)).epsilon(1e-12));
}

TEST_CASE("segment_at: identity at zero, constants, pointwise oracle") {
    Fixture f;
    auto history = std::make_shared<const HistorySegment>(
        HistorySegment::exponential(f.space, f.grid, Eigen::VectorXd::Ones(4), 0.8));

    const int steps = 16;
    Eigen::MatrixXd vals(4, steps + 1);
    rng::CounterRng gen(3);
    for (int i = 0; i <= steps; ++i)
        for (int k = 0; k < 4; ++k) vals(k, i) = gen.normal(i, k);
    vals.col(0) = history->head();
    const MildPath path(f.space, Eigen::VectorXd::LinSpaced(steps + 1, 0.0, 1.0), vals, history);

    // t = 0 returns the attached history itself.
    const HistorySegment at0 = segment_at(path, 0.0);
    CHECK((at0.values() - history->values()).cwiseAbs().maxCoeff() < 1e-15);

    // Constant path with constant history: segment is constant.
    Eigen::VectorXd c = Eigen::VectorXd::Constant(4, 0.3);
    auto const_history =
        std::make_shared<const HistorySegment>(HistorySegment::constant(f.space, f.grid, c));
    const MildPath const_path = MildPath::constant(f.space, const_history, c, 1.0, steps);
    const HistorySegment seg = segment_at(const_path, 0.7);
    for (int j = 0; j < f.grid->node_count(); ++j)
        CHECK((seg.values().col(j) - c).cwiseAbs().maxCoeff() < 1e-15);

    // Piecewise-linear pointwise oracle: independent interpolation arithmetic.
    const double t = 0.63;
    const HistorySegment st = segment_at(path, t);
    for (int j = 0; j < f.grid->node_count(); ++j) {
        const double u = t + f.grid->nodes()(j);
        Eigen::VectorXd expected(4);
        if (u >= 0.0) {
            const double pos = u * steps;
            const int lo = std::min(static_cast<int>(pos), steps - 1);
            const double lam = pos - lo;
            expected = (1.0 - lam) * vals.col(lo) + lam * vals.col(lo + 1);
        } else {
            expected = history->eval(u);
        }
        CHECK((st.values().col(j) - expected).cwiseAbs().maxCoeff() < 1e-12);
    }

    CHECK_THROWS_AS(segment_at(path, -0.1), std::domain_error);
    CHECK_THROWS_AS(segment_at(path, 1.5), std::domain_error);
}

TEST_CASE("extensions: hat evaluates to zero forward, tilde glues, heads checked") {
    Fixture f;
    Eigen::VectorXd c = Eigen::VectorXd::Constant(4, 1.1);
    auto history =
        std::make_shared<const HistorySegment>(HistorySegment::constant(f.space, f.grid, c));

    const HatExtension hat = extend_hat(history, 2.0);
    CHECK(hat.eval(0.5).cwiseAbs().maxCoeff() == 0.0);
    CHECK((hat.eval(0.0) - c).cwiseAbs().maxCoeff() == 0.0);
    const HistorySegment back = segment_at(hat, 0.0);
    CHECK((back.values() - history->values()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((back.head() - history->head()).cwiseAbs().maxCoeff() < 1e-15);

    const MildPath cpath = MildPath::constant(f.space, history, c, 1.0, 8);
    const MildPath glued = extend_tilde(cpath, history);
    CHECK((glued.eval(0.4) - c).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((glued.eval(-3.0) - c).cwiseAbs().maxCoeff() < 1e-15);

    Eigen::VectorXd wrong = 2.0 * c;
    const MildPath bad = MildPath::constant(f.space, history, wrong, 1.0, 8);
    CHECK_THROWS_AS(extend_tilde(bad, history), consistency_error);
}

TEST_CASE("KM inequality: zero path, constant-path analytic case") {
    Fixture f;
    auto zero_history = std::make_shared<const HistorySegment>(
        HistorySegment::constant(f.space, f.grid, Eigen::VectorXd::Zero(4)));
    const MildPath zero =
        MildPath::constant(f.space, zero_history, Eigen::VectorXd::Zero(4), 1.0, 8);
    const KmReport zr = check_km_inequality(zero, 1.0, f.w, 2.0);
    CHECK(zr.pass);
    CHECK(zr.lhs == 0.0);
    CHECK(zr.mid == 0.0);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    x(0) = 1.5;
    auto xh = std::make_shared<const HistorySegment>(HistorySegment::constant(f.space, f.grid, x));
    const MildPath cpath = MildPath::constant(f.space, xh, x, 1.0, 8);
    const KmReport cr = check_km_inequality(cpath, 1.0, f.w, 2.0);
    CHECK(cr.pass);
    const double nx = 1.5;
    CHECK(cr.mid == doctest::Approx(2.0 * nx).epsilon(1e-4));
    const double expected_rhs = k_fn(1.0, f.w, 2.0) * nx + m_fn(1.0, f.w, 2.0) * cr.mid;
    CHECK(cr.rhs == doctest::Approx(expected_rhs).epsilon(1e-6));
    CHECK(cr.mid < cr.rhs); // strict inequality for the constant path
}

TEST_CASE("KM inequality: 100 seeded random piecewise-linear paths") {
    Fixture f;
    rng::CounterRng gen(29);
    const int steps = 24;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::MatrixXd vals(4, steps + 1);
        for (int i = 0; i <= steps; ++i)
            for (int k = 0; k < 4; ++k) vals(k, i) = gen.normal(trial * 64 + i, k) / (1.0 + k);
        auto history = std::make_shared<const HistorySegment>(
            HistorySegment::exponential(f.space, f.grid, vals.col(0), 0.6));
        const MildPath path(f.space, Eigen::VectorXd::LinSpaced(steps + 1, 0.0, 1.0), vals,
                            history);
        for (double t : {0.25, 0.5, 1.0}) {
            const KmReport rep = check_km_inequality(path, t, f.w, 2.0, 1e-8);
            CHECK(rep.pass);
        }
    }
}

TEST_CASE("segment extraction is continuous in t") {
    Fixture f;
    rng::CounterRng gen(37);
    const int steps = 32;
    Eigen::MatrixXd vals(4, steps + 1);
    for (int i = 0; i <= steps; ++i)
        for (int k = 0; k < 4; ++k) vals(k, i) = gen.normal(i, k);
    auto history = std::make_shared<const HistorySegment>(
        HistorySegment::exponential(f.space, f.grid, vals.col(0), 1.0));
    const MildPath path(f.space, Eigen::VectorXd::LinSpaced(steps + 1, 0.0, 1.0), vals, history);

    // Deltas below the node spacing 1/32, so the piecewise-linear modulus of
    // continuity (~linear in delta) governs the segment distance.
    const double t = 0.5;
    double prev = -1.0;
    for (double delta : {0.012, 0.006, 0.003, 0.0015}) {
        const HistorySegment a = segment_at(path, t);
        const HistorySegment b = segment_at(path, t + delta);
        const HistorySegment diff(f.space, f.grid, b.values() - a.values());
        const double dist = b_norm(diff, f.w, 2.0);
        if (prev >= 0.0) {
            CHECK(dist < prev);
            CHECK(dist / prev == doctest::Approx(0.5).epsilon(0.35));
        }
        prev = dist;
    }
}

TEST_CASE("truncation radius controls the weighted tail") {
    const WeightFunction w = WeightFunction::exponential(1.0);
    const double r = truncation_radius(w, 1e-10);
    CHECK(std::exp(-r) == doctest::Approx(1e-10).epsilon(1e-6));
    const double r2 = truncation_radius(w, 1e-10, 2.0);
    CHECK(std::exp(-2.0 * r2) / 2.0 == doctest::Approx(1e-10).epsilon(1e-6));
}
