#include <doctest.h>

#include <cmath>

#include "delay_spde/stochastic.hpp"

using namespace delay_spde;

TEST_CASE("noise: reproducibility and moment sanity") {
    const CylindricalNoise a(4, 64, 1.0 / 64, 99, 7);
    const CylindricalNoise b(4, 64, 1.0 / 64, 99, 7);
    CHECK((a.increments() - b.increments()).cwiseAbs().maxCoeff() == 0.0);
    const CylindricalNoise c(4, 64, 1.0 / 64, 100, 7);
    CHECK((a.increments() - c.increments()).cwiseAbs().maxCoeff() > 0.0);
    const CylindricalNoise d(4, 64, 1.0 / 64, 99, 8);
    CHECK((a.increments() - d.increments()).cwiseAbs().maxCoeff() > 0.0);

    // Mean and variance over a larger pool: 4 standard errors.
    const int modes = 16, steps = 256;
    const double dt = 1.0 / steps;
    const CylindricalNoise big(modes, steps, dt, 5, 0);
    const double n = modes * steps;
    const double mean = big.increments().mean();
    const double var = big.increments().array().square().mean() - mean * mean;
    CHECK(std::abs(mean) < 4.0 * std::sqrt(dt / n));
    CHECK(std::abs(var - dt) < 4.0 * dt * std::sqrt(2.0 / n));
}

TEST_CASE("integrate_step: zero process, single-cell indicator identity, linearity") {
    const CylindricalNoise w(2, 8, 0.125, 42, 0);

    std::vector<Eigen::MatrixXd> zero_cells(8, Eigen::MatrixXd::Zero(3, 2));
    const Eigen::MatrixXd zero_path =
        integrate_step(StepProcess::unchecked(std::move(zero_cells), true), w);
    CHECK(zero_path.cwiseAbs().maxCoeff() == 0.0);

    // One cell (a, b] = (t_2, t_5], rank one h (x) x with h = e_1:
    // xi(T) = (W_1(b) - W_1(a)) x exactly.
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    std::vector<Eigen::MatrixXd> cells(8, Eigen::MatrixXd::Zero(3, 2));
    for (int i = 2; i < 5; ++i) cells[i].col(0) = x;
    const StepProcess proc = StepProcess::unchecked(std::move(cells), true);
    const Eigen::MatrixXd xi = integrate_step(proc, w);
    const double wdiff = w.brownian(0, 5) - w.brownian(0, 2);
    CHECK((xi.col(8) - wdiff * x).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(xi.col(0).cwiseAbs().maxCoeff() == 0.0);

    // Linearity in the integrand is exact.
    std::vector<Eigen::MatrixXd> ca, cb, csum;
    for (int i = 0; i < 8; ++i) {
        ca.push_back(Eigen::MatrixXd::Random(3, 2));
        cb.push_back(Eigen::MatrixXd::Random(3, 2));
        csum.push_back(ca.back() + cb.back());
    }
    const Eigen::MatrixXd pa = integrate_step(StepProcess::unchecked(ca, true), w);
    const Eigen::MatrixXd pb = integrate_step(StepProcess::unchecked(cb, true), w);
    const Eigen::MatrixXd ps = integrate_step(StepProcess::unchecked(csum, true), w);
    CHECK((ps - pa - pb).cwiseAbs().maxCoeff() < 1e-12);

    // Grid mismatch is structural.
    const CylindricalNoise w2(2, 4, 0.25, 42, 0);
    CHECK_THROWS_AS(integrate_step(proc, w2), structural_error);
}

TEST_CASE("Ito isometry: Var(int c dW) = c^2 T within 4 SE over 1e4 draws") {
    const int draws = 10000, steps = 16;
    const double T = 1.0, c = 0.7;
    double sum = 0.0, sumsq = 0.0;
    for (int d = 0; d < draws; ++d) {
        const CylindricalNoise w(1, steps, T / steps, 1234, d);
        double acc = 0.0;
        for (int i = 0; i < steps; ++i) acc += c * w.increment(0, i);
        sum += acc;
        sumsq += acc * acc;
    }
    const double mean = sum / draws;
    const double var = (sumsq - draws * mean * mean) / (draws - 1.0);
    const double se = var * std::sqrt(2.0 / (draws - 1.0));
    CHECK(std::abs(var - c * c * T) < 4.0 * se);
}

TEST_CASE("martingale property and anticipating detection") {
    const int paths = 4000, steps = 32;
    double adapted_mean = 0.0, anticipating_mean = 0.0, sd = 0.0;
    std::vector<double> samples(paths);
    for (int d = 0; d < paths; ++d) {
        const CylindricalNoise w(1, steps, 1.0 / steps, 777, d);
        double acc_adapted = 0.0, acc_anticipating = 0.0, wcur = 0.0;
        for (int i = 0; i < steps; ++i) {
            acc_adapted += (wcur >= 0.0 ? 1.0 : -1.0) * w.increment(0, i);
            acc_anticipating += (w.increment(0, i) >= 0.0 ? 1.0 : -1.0) * w.increment(0, i);
            wcur += w.increment(0, i);
        }
        adapted_mean += acc_adapted;
        anticipating_mean += acc_anticipating;
        samples[d] = acc_adapted;
    }
    adapted_mean /= paths;
    anticipating_mean /= paths;
    for (double s : samples) sd += (s - adapted_mean) * (s - adapted_mean);
    sd = std::sqrt(sd / (paths - 1.0));
    const double band = 4.0 * sd / std::sqrt(double(paths));
    CHECK(std::abs(adapted_mean) < band);
    CHECK(std::abs(anticipating_mean) > band); // detection fires
}

TEST_CASE("noise view blocks anticipating reads; coarsening couples refinements") {
    const CylindricalNoise w(2, 8, 0.125, 4, 0);
    int called = 0;
    const StepProcess proc = StepProcess::adapted(w, 1, [&](int cell, const NoiseView& past) {
        ++called;
        double acc = 0.0;
        for (int i = 0; i < cell; ++i) acc += past.increment(0, i);
        if (cell == 3) CHECK_THROWS_AS(past.increment(0, 3), structural_error);
        return Eigen::MatrixXd::Constant(1, 2, acc);
    });
    CHECK(called == 8);
    CHECK(proc.adapted());

    // Cell-constant integrand: integrating coarse sums equals integrating fine.
    const CylindricalNoise fine(2, 8, 0.125, 4, 0);
    const CylindricalNoise coarse = fine.coarsen(2);
    CHECK(coarse.steps() == 4);
    CHECK(coarse.dt() == doctest::Approx(0.25));
    Eigen::MatrixXd cell_val = Eigen::MatrixXd::Random(3, 2);
    const Eigen::MatrixXd pf = integrate_step(
        StepProcess::unchecked(std::vector<Eigen::MatrixXd>(8, cell_val), true), fine);
    const Eigen::MatrixXd pc = integrate_step(
        StepProcess::unchecked(std::vector<Eigen::MatrixXd>(4, cell_val), true), coarse);
    CHECK((pf.col(8) - pc.col(4)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK_THROWS_AS(fine.coarsen(3), structural_error);
}

TEST_CASE("ou_exact_step: deterministic decay, stationary variance, step composition") {
    CHECK(ou_exact_step(2.0, 1.5, 0.0, 0.3, 9.9) ==
          doctest::Approx(2.0 * std::exp(-0.45)).epsilon(1e-15));
    CHECK_THROWS_AS(ou_exact_step(1.0, -1.0, 1.0, 0.1, 0.0), std::domain_error);
    CHECK_THROWS_AS(ou_exact_step(1.0, 1.0, 1.0, -0.1, 0.0), std::domain_error);

    // Stationary variance sigma^2/(2 lambda) = 1/2 within 4 SE over 1e4 paths.
    const int paths = 10000;
    rng::CounterRng gen(31415);
    double sum = 0.0, sumsq = 0.0;
    for (int d = 0; d < paths; ++d) {
        double a = 0.0;
        for (int i = 0; i < 200; ++i) a = ou_exact_step(a, 1.0, 1.0, 0.1, gen.normal(d, i));
        sum += a;
        sumsq += a * a;
    }
    const double mean = sum / paths;
    const double var = (sumsq - paths * mean * mean) / (paths - 1.0);
    const double se = var * std::sqrt(2.0 / (paths - 1.0));
    CHECK(std::abs(var - 0.5) < 4.0 * se);

    // Two half-steps compose to a full step in law: variances add exactly.
    const double lambda = 0.8, dt = 0.4;
    const double vh = (1.0 - std::exp(-2.0 * lambda * dt / 2.0)) / (2.0 * lambda);
    const double composed = std::exp(-lambda * dt) * 0.0 +
                            vh * std::exp(-2.0 * lambda * dt / 2.0) + vh;
    const double direct = (1.0 - std::exp(-2.0 * lambda * dt)) / (2.0 * lambda);
    CHECK(composed == doctest::Approx(direct).epsilon(1e-15));
}
