#include "delay_spde/heatmem.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "delay_spde/gamma.hpp"
#include "delay_spde/rng.hpp"

namespace delay_spde {

namespace {

Eigen::VectorXd memory_kernel_weights(const HistoryGrid& grid) {
    Eigen::VectorXd w(grid.node_count());
    for (int j = 0; j < grid.node_count(); ++j)
        w(j) = grid.weights()(j) * std::exp(grid.nodes()(j));
    return w;
}

double sat_drift(double x, double level) {
    return level > 0.0 ? level * std::tanh(x / level) : x;
}

/// Point values of the history at depth u <= 0, interpolated on the grid.
Eigen::VectorXd history_points_at(const HistoryGrid& grid, const Eigen::MatrixXd& pts, double u) {
    const auto& n = grid.nodes();
    const Eigen::Index m = n.size();
    if (u >= 0.0) return pts.col(0);
    if (u <= n(m - 1)) return pts.col(m - 1);
    Eigen::Index lo = 0, hi = m - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (n(mid) >= u)
            lo = mid;
        else
            hi = mid;
    }
    const double lam = (n(lo) - u) / (n(lo) - n(hi));
    return (1.0 - lam) * pts.col(lo) + lam * pts.col(hi);
}

/// First admissibility integral: int_S int_{-R}^0 (int_0^{min(T,-t)}
/// |Phi(r+t,s)|^2 dr)^{p/2} dt ds, evaluated on precomputed point values.
double first_integral(const Space& space, const HistoryGrid& grid, const Eigen::MatrixXd& pts,
                      double horizon, double p) {
    const int rq = 64;
    Eigen::VectorXd spatial = Eigen::VectorXd::Zero(space.quad_points());
    for (int j = 0; j < grid.node_count(); ++j) {
        const double t = grid.nodes()(j);
        const double span = std::min(horizon, -t);
        Eigen::VectorXd inner = Eigen::VectorXd::Zero(space.quad_points());
        if (span > 0.0) {
            const double h = span / rq;
            for (int i = 0; i <= rq; ++i) {
                const double w = (i == 0 || i == rq) ? 0.5 * h : h;
                inner += w * history_points_at(grid, pts, i * h + t).array().square().matrix();
            }
        }
        spatial += grid.weights()(j) * inner.array().pow(p / 2.0).matrix();
    }
    return space.cell() * spatial.sum();
}

/// Second admissibility integral: int_0^T (int_S int_{-R}^{-r}
/// |Phi(r+t,s)|^p dt ds)^{2/p} dr.
double second_integral(const Space& space, const HistoryGrid& grid, const Eigen::MatrixXd& pts,
                       double horizon, double p) {
    const int rq = 64;
    const double h = horizon / rq;
    double total = 0.0;
    for (int i = 0; i <= rq; ++i) {
        const double r = i * h;
        double inner = 0.0;
        for (int j = 0; j < grid.node_count(); ++j) {
            const double t = grid.nodes()(j);
            if (t > -r) continue;
            const Eigen::VectorXd col = history_points_at(grid, pts, r + t);
            double sp = 0.0;
            for (Eigen::Index q = 0; q < col.size(); ++q) sp += std::pow(std::abs(col(q)), p);
            inner += grid.weights()(j) * space.cell() * sp;
        }
        const double w = (i == 0 || i == rq) ? 0.5 * h : h;
        total += w * std::pow(inner, 2.0 / p);
    }
    return total;
}

} // namespace

HeatmemProblem build_problem(const HeatmemParams& params) {
    if (params.diffusion.kind != MemoryDiffusion::Kind::Zero && params.diffusion.decay_q <= 0.5)
        throw std::domain_error("build_problem: inadmissible diffusion, need q > 1/2");
    if (!(params.p > 2.0)) throw std::domain_error("build_problem: p must exceed 2");
    if (!(params.alpha > 1.0 / params.p && params.alpha < 0.5))
        throw std::domain_error("build_problem: alpha must lie in (1/p, 1/2)");

    HeatmemProblem out;
    auto space = Space::make(params.length, params.modes, params.quad_points);

    // Truncation radius: cover both the history decay and the drift kernel tail.
    double radius = params.history_radius;
    if (radius <= 0.0) {
        const double kernel_r = -std::log(params.eps_tail);
        double history_r = kernel_r;
        if (!params.custom_history && params.history_rate > 0.0) {
            const double num = std::pow(std::abs(params.history_scale), params.p);
            history_r = std::log(std::max(1.0, num / (params.eps_tail * params.p *
                                                      params.history_rate))) /
                        (params.p * params.history_rate);
        }
        radius = std::max(kernel_r, history_r);
    }
    auto grid = HistoryGrid::geometric(radius, params.history_cells, params.history_stretch,
                                       params.eps_tail);

    HistorySegmentPtr history;
    try {
        if (params.custom_history) {
            history = std::make_shared<const HistorySegment>(
                HistorySegment::from_function(space, grid, params.custom_history));
        } else {
            Eigen::VectorXd profile = Eigen::VectorXd::Zero(params.modes);
            profile(0) = params.history_scale * std::sqrt(params.length / 2.0);
            history = std::make_shared<const HistorySegment>(
                HistorySegment::exponential(space, grid, profile, params.history_rate));
        }
    } catch (const numeric_error& e) {
        throw std::domain_error(std::string("build_problem: initial history outside the "
                                            "admissible class (non-finite values): ") +
                                e.what());
    }

    // Admissibility: membership in the product history space plus both
    // mixed-norm integrals. A 2x grid refinement that grows any of them by
    // more than 50% flags a divergent history (the quadratures have converged
    // for admissible ones).
    {
        const WeightFunction plain = WeightFunction::constant();
        const Eigen::MatrixXd pts = space->synthesis() * history->values();
        out.admissibility_first = first_integral(*space, *grid, pts, params.horizon, params.p);
        out.admissibility_second = second_integral(*space, *grid, pts, params.horizon, params.p);
        const double norm_base = g_tail_integral(*history, plain, params.p);

        auto fine_grid = HistoryGrid::geometric(radius, 2 * params.history_cells,
                                                std::sqrt(params.history_stretch), params.eps_tail);
        HistorySegment fine = params.custom_history
                                  ? HistorySegment::from_function(space, fine_grid, params.custom_history)
                                  : HistorySegment::exponential(space, fine_grid, history->values().col(0),
                                                                params.history_rate);
        const Eigen::MatrixXd fine_pts = space->synthesis() * fine.values();
        const double refined = first_integral(*space, *fine_grid, fine_pts, params.horizon, params.p);
        const double norm_fine = g_tail_integral(fine, plain, params.p);

        auto reject = [&](const char* which, double base_value, double fine_value) {
            std::ostringstream msg;
            msg << "build_problem: initial history outside the admissible class; " << which << " "
                << base_value << " grows to " << fine_value << " under grid refinement";
            throw std::domain_error(msg.str());
        };
        if (!std::isfinite(norm_base) || !std::isfinite(norm_fine) ||
            norm_fine > 1.5 * norm_base + 1e-12)
            reject("history norm integral", norm_base, norm_fine);
        if (!std::isfinite(out.admissibility_first) || !std::isfinite(refined) ||
            refined > 1.5 * out.admissibility_first + 1e-12)
            reject("first integral", out.admissibility_first, refined);
        if (!std::isfinite(out.admissibility_second))
            throw std::domain_error("build_problem: second admissibility integral diverges");
    }

    const int noise_modes = params.noise_modes > 0 ? params.noise_modes : params.modes;
    Eigen::VectorXd amplitudes(noise_modes);
    for (int n = 1; n <= noise_modes; ++n)
        amplitudes(n - 1) = params.diffusion.c0 * std::pow(n, -params.diffusion.decay_q);

    const double pdual = params.p / (params.p - 1.0);
    out.kernel_dual_norm = std::pow(1.0 / pdual, 1.0 / pdual);
    out.lipschitz_f = params.drift.gain * out.kernel_dual_norm;
    out.lipschitz_diffusion =
        (params.diffusion.kind == MemoryDiffusion::Kind::Memory)
            ? amplitudes.norm() * out.kernel_dual_norm
            : 0.0;
    out.amplitudes = amplitudes;

    ProblemSpec spec;
    spec.space = space;
    spec.weight = WeightFunction::constant(); // B = L^p((-inf,0] x S) x L^p(S)
    spec.initial_history = history;
    spec.p = params.p;
    spec.alpha = params.alpha;
    spec.type_tau = params.type_tau;
    spec.horizon = params.horizon;
    spec.noise_modes = noise_modes;

    const Eigen::VectorXd kernel = memory_kernel_weights(*grid);
    if (params.drift.gain != 0.0) {
        const double gain = params.drift.gain;
        const double level = params.drift.sat_level;
        spec.drift = [space, kernel, gain, level](double, const HistorySegment& seg,
                                                  Eigen::VectorXd& fout) {
            Eigen::VectorXd c = seg.values() * kernel;
            if (level > 0.0) {
                Eigen::VectorXd pts = space->point_values(c);
                for (Eigen::Index i = 0; i < pts.size(); ++i)
                    pts(i) = gain * sat_drift(pts(i), level);
                fout = space->coefficients(pts);
            } else {
                fout = gain * c;
            }
        };
    }

    switch (params.diffusion.kind) {
        case MemoryDiffusion::Kind::Zero:
            break;
        case MemoryDiffusion::Kind::Additive: {
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(params.modes, noise_modes);
            for (int n = 0; n < std::min(noise_modes, params.modes); ++n) b(n, n) = amplitudes(n);
            spec.diffusion = [b](double, const HistorySegment&, Eigen::MatrixXd& bout) { bout = b; };
            break;
        }
        case MemoryDiffusion::Kind::Memory: {
            const bool saturate = params.diffusion.saturate;
            spec.diffusion = [space, kernel, amplitudes, saturate](double, const HistorySegment& seg,
                                                                   Eigen::MatrixXd& bout) {
                Eigen::VectorXd c = seg.values() * kernel;
                Eigen::VectorXd pts = space->point_values(c);
                if (saturate)
                    for (Eigen::Index i = 0; i < pts.size(); ++i) pts(i) = std::tanh(pts(i));
                const Eigen::VectorXd y = space->coefficients(pts);
                bout.noalias() = y * amplitudes.transpose();
            };
            break;
        }
    }

    out.spec = std::move(spec);
    out.spec.validate();
    return out;
}

LipschitzReport verify_lipschitz(const HeatmemProblem& problem, int trials, std::uint64_t seed,
                                 int gamma_samples, double slack) {
    if (trials < 100) throw std::domain_error("verify_lipschitz: need at least 100 trials");
    const ProblemSpec& spec = problem.spec;
    const Space& space = *spec.space;
    const auto grid = spec.initial_history->grid();
    const double p = spec.p;
    const WeightFunction plain = WeightFunction::constant();
    rng::CounterRng gen(rng::substream(seed, 0x6C697073)); // "lips"

    auto random_segment = [&](std::uint64_t idx, double decay) {
        Eigen::MatrixXd v(space.modes(), grid->node_count());
        const int active = std::min(space.modes(), 6);
        v.setZero();
        for (int k = 0; k < active; ++k) {
            const double amp = gen.normal(idx, 2 * k) / (1.0 + k);
            const double rate = 0.5 + std::abs(gen.normal(idx, 2 * k + 1));
            for (int j = 0; j < grid->node_count(); ++j)
                v(k, j) = amp * std::exp(std::min(30.0, (rate + decay) * grid->nodes()(j)));
        }
        return HistorySegment(spec.space, grid, std::move(v));
    };

    LipschitzReport rep;
    rep.trials = trials;
    rep.drift_bound = problem.lipschitz_f;
    rep.diffusion_bound = problem.lipschitz_diffusion;

    Eigen::VectorXd fa(space.modes()), fb(space.modes());
    const int time_cells = 8;
    const double dt = spec.horizon / time_cells;
    Eigen::VectorXd mu(time_cells);
    for (int i = 0; i < time_cells; ++i) mu(i) = dt; // Lebesgue mu on [0, T]

    for (int trial = 0; trial < trials; ++trial) {
        const HistorySegment a = random_segment(2 * trial, 0.0);
        const HistorySegment b = random_segment(2 * trial + 1, 0.0);
        const HistorySegment diff(spec.space, grid, a.values() - b.values());
        const double denom = b_norm(diff, plain, p) - space.lp_norm(diff.head(), p);
        if (spec.drift && denom > 1e-12) {
            spec.drift(0.0, a, fa);
            spec.drift(0.0, b, fb);
            const double ratio = space.lp_norm(fa - fb, p) / denom;
            rep.drift_ratio = std::max(rep.drift_ratio, ratio);
        }
    }

    // Extremal profile e^{theta/(p-1)} attains the Holder bound for the linear drift.
    if (spec.drift) {
        Eigen::VectorXd profile = Eigen::VectorXd::Zero(space.modes());
        profile(0) = 1.0;
        const HistorySegment ext =
            HistorySegment::exponential(spec.space, grid, profile, 1.0 / (p - 1.0));
        const HistorySegment zero(spec.space, grid,
                                  Eigen::MatrixXd::Zero(space.modes(), grid->node_count()));
        spec.drift(0.0, ext, fa);
        spec.drift(0.0, zero, fb);
        const double denom = b_norm(ext, plain, p) - space.lp_norm(ext.head(), p);
        if (denom > 0.0)
            rep.drift_ratio = std::max(rep.drift_ratio, space.lp_norm(fa - fb, p) / denom);
    }

    if (spec.diffusion && problem.lipschitz_diffusion > 0.0) {
        const int diffusion_trials = std::min(trials, 24);
        Eigen::MatrixXd ba(space.modes(), spec.noise_modes), bb(space.modes(), spec.noise_modes);
        for (int trial = 0; trial < diffusion_trials; ++trial) {
            // Segment-valued paths over the coarse time grid.
            std::vector<HistorySegment> pa, pb, pd;
            for (int i = 0; i < time_cells; ++i) {
                const double wobble = 1.0 + 0.5 * std::sin(2.0 * i);
                HistorySegment sa = random_segment(1000 + 4 * trial, 0.0).scaled(wobble);
                HistorySegment sb = random_segment(1002 + 4 * trial, 0.0).scaled(wobble);
                pd.emplace_back(spec.space, grid, sa.values() - sb.values());
                pa.push_back(std::move(sa));
                pb.push_back(std::move(sb));
            }
            Eigen::MatrixXd cols(space.quad_points(),
                                 static_cast<Eigen::Index>(time_cells) * spec.noise_modes);
            for (int i = 0; i < time_cells; ++i) {
                spec.diffusion(i * dt, pa[i], ba);
                spec.diffusion(i * dt, pb[i], bb);
                cols.middleCols(static_cast<Eigen::Index>(i) * spec.noise_modes, spec.noise_modes) =
                    std::sqrt(mu(i)) * (space.synthesis() * (ba - bb));
            }
            TargetNorm target = TargetNorm::weighted_lp(
                Eigen::VectorXd::Constant(space.quad_points(), space.cell()), p);
            const GammaEstimate numer =
                gamma_norm_mc(GammaOperator(cols, target), std::max(1000, gamma_samples),
                              seed + 17 * trial);

            std::vector<const HistorySegment*> dsegs;
            for (const auto& s : pd) dsegs.push_back(&s);
            const L2GammaEstimate denom =
                l2gamma_norm_segments(dsegs, mu, plain, p, std::max(500, gamma_samples / 2),
                                      seed + 17 * trial + 5);
            if (denom.value > 1e-12)
                rep.diffusion_ratio = std::max(rep.diffusion_ratio, numer.value / denom.value);
        }
    }

    const bool drift_ok = !spec.drift || rep.drift_ratio <= rep.drift_bound * (1.0 + slack);
    const bool diff_ok = !spec.diffusion || rep.diffusion_bound == 0.0 ||
                         rep.diffusion_ratio <= rep.diffusion_bound * (1.0 + slack);
    rep.pass = drift_ok && diff_ok;
    return rep;
}

} // namespace delay_spde
