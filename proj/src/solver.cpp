#include "delay_spde/solver.hpp"

#include <cmath>

#include "delay_spde/expphi.hpp"
#include "delay_spde/rng.hpp"

namespace delay_spde {

namespace {
constexpr std::uint64_t kProbeTag = 0x70726F62; // "prob"

Eigen::VectorXd uniform_times(double horizon, int steps) {
    return Eigen::VectorXd::LinSpaced(steps + 1, 0.0, horizon);
}

double grid_dt(const MildPath& path) {
    const double dt = path.times()(1) - path.times()(0);
    for (int i = 1; i + 1 < path.node_count(); ++i) {
        const double h = path.times()(i + 1) - path.times()(i);
        if (std::abs(h - dt) > 1e-10 * dt)
            throw structural_error("solver: path grid must be uniform");
    }
    return dt;
}

} // namespace

void ProblemSpec::validate() const {
    if (!space) throw structural_error("ProblemSpec: null space");
    if (!initial_history) throw structural_error("ProblemSpec: no initial history");
    if (initial_history->space() != space)
        throw structural_error("ProblemSpec: history lives on a different space");
    if (eta < 0.0 || theta_f < 0.0 || theta_b < 0.0)
        throw std::domain_error("ProblemSpec: exponents must be nonnegative");
    if (!(p > 2.0)) throw std::domain_error("ProblemSpec: p must exceed 2");
    if (!(type_tau > 1.0 && type_tau <= 2.0)) throw std::domain_error("ProblemSpec: tau in (1,2]");
    if (!(eta + theta_f < 1.5 - 1.0 / type_tau))
        throw std::domain_error("ProblemSpec: eta + theta_F violates the smoothing window");
    if (!(eta + theta_b + 1.0 / p < 0.5))
        throw std::domain_error("ProblemSpec: eta + theta_B + 1/p must be below 1/2");
    if (!(alpha > 0.0 && alpha < 0.5)) throw std::domain_error("ProblemSpec: alpha in (0,1/2)");
    if (!(eta + theta_b < alpha - 1.0 / p))
        throw std::domain_error("ProblemSpec: need eta + theta_B < alpha - 1/p");
    if (horizon <= 0.0) throw std::domain_error("ProblemSpec: horizon must be positive");
    if (diffusion && noise_modes < 1)
        throw std::domain_error("ProblemSpec: diffusion given but noise_modes < 1");
}

Eigen::MatrixXd det_convolution(const Space& space, const Eigen::MatrixXd& psi, double dt) {
    const Eigen::Index modes = space.modes();
    if (psi.rows() != modes) throw structural_error("det_convolution: mode count mismatch");
    const Eigen::Index nodes = psi.cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(modes, nodes);
    Eigen::VectorXd decay(modes), w_left(modes), w_slope(modes);
    for (Eigen::Index k = 0; k < modes; ++k) {
        const double z = space.lambda()(k) * dt;
        decay(k) = std::exp(-z);
        w_left(k) = dt * phi1(z);
        w_slope(k) = dt * phi2(z);
    }
    for (Eigen::Index i = 0; i + 1 < nodes; ++i)
        out.col(i + 1) = decay.cwiseProduct(out.col(i)) + w_left.cwiseProduct(psi.col(i)) +
                         w_slope.cwiseProduct(psi.col(i + 1) - psi.col(i));
    return out;
}

Eigen::MatrixXd stoch_convolution(const Space& space, const StepProcess& b,
                                  const CylindricalNoise& noise, int cell_offset, int cells) {
    if (!b.adapted())
        throw structural_error("stoch_convolution: anticipating step process rejected");
    if (b.rows() != space.modes()) throw structural_error("stoch_convolution: mode count mismatch");
    if (b.noise_modes() != noise.modes())
        throw structural_error("stoch_convolution: noise mode count mismatch");
    if (b.cells() != cells || cell_offset + cells > noise.steps())
        throw structural_error("stoch_convolution: cell window does not match noise grid");
    const double dt = noise.dt();
    const double root_dt = std::sqrt(dt);
    const Eigen::Index modes = space.modes();
    Eigen::VectorXd decay(modes), gain(modes);
    for (Eigen::Index k = 0; k < modes; ++k) {
        decay(k) = std::exp(-space.lambda()(k) * dt);
        gain(k) = ou_gain(space.lambda()(k), dt);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(modes, cells + 1);
    for (int i = 0; i < cells; ++i) {
        const Eigen::VectorXd kick = b.cell(i) * noise.increments().col(cell_offset + i) / root_dt;
        out.col(i + 1) = decay.cwiseProduct(out.col(i)) + gain.cwiseProduct(kick);
    }
    return out;
}

namespace {

/// Shared core of the fixed-point map on a window of `cells` uniform steps
/// starting at absolute time t0. Segments come from eval_at (absolute time,
/// single interpolation); the semigroup part propagates `head` from t0.
Eigen::MatrixXd lt_core(const ProblemSpec& spec, double t0, double dt, int cells,
                        const std::function<Eigen::VectorXd(double)>& eval_at,
                        const HistoryGridPtr& seg_grid, const Eigen::VectorXd& head,
                        const CylindricalNoise& noise, int cell_offset, bool adapted) {
    const Space& space = *spec.space;
    Eigen::MatrixXd drift_vals;
    std::vector<Eigen::MatrixXd> b_cells;
    if (spec.drift) drift_vals.setZero(space.modes(), cells + 1);
    if (spec.diffusion) b_cells.reserve(cells);

    Eigen::VectorXd fbuf(space.modes());
    Eigen::MatrixXd bbuf(space.modes(), spec.noise_modes > 0 ? spec.noise_modes : 1);
    Eigen::MatrixXd segvals(space.modes(), seg_grid->node_count());
    for (int i = 0; i <= cells; ++i) {
        if (!spec.drift && !(spec.diffusion && i < cells)) break;
        const double t_abs = t0 + i * dt;
        for (int j = 0; j < seg_grid->node_count(); ++j)
            segvals.col(j) = eval_at(t_abs + seg_grid->nodes()(j));
        const HistorySegment seg(spec.space, seg_grid, segvals);
        if (spec.drift) {
            spec.drift(t_abs, seg, fbuf);
            drift_vals.col(i) = fbuf;
        }
        if (spec.diffusion && i < cells) {
            spec.diffusion(t_abs, seg, bbuf);
            b_cells.push_back(bbuf);
        }
    }

    Eigen::MatrixXd values(space.modes(), cells + 1);
    for (int i = 0; i <= cells; ++i)
        values.col(i) = head.cwiseProduct(semigroup_factors(space, i * dt).matrix());
    if (spec.drift) values += det_convolution(space, drift_vals, dt);
    if (spec.diffusion) {
        const StepProcess b = StepProcess::unchecked(std::move(b_cells), adapted);
        values += stoch_convolution(space, b, noise, cell_offset, cells);
    }
    return values;
}

} // namespace

MildPath apply_LT(const ProblemSpec& spec, const MildPath& phi, const HistorySegmentPtr& history,
                  const CylindricalNoise& noise, int cell_offset, double t_offset) {
    const double dt = grid_dt(phi);
    const int cells = phi.node_count() - 1;
    const MildPath tilde = extend_tilde(phi, history);
    Eigen::MatrixXd values = lt_core(
        spec, t_offset, dt, cells,
        [&](double t_abs) { return tilde.eval(t_abs - t_offset); }, history->grid(),
        history->head(), noise, cell_offset, phi.adapted());
    return MildPath(spec.space, phi.times(), std::move(values), history, phi.adapted());
}

namespace {

/// Deterministic smooth probe perturbation vanishing at t = 0: a ramp and a
/// tent profile with decaying random mode amplitudes.
Eigen::MatrixXd probe_perturbation(const Space& space, const Eigen::VectorXd& times, double scale,
                                   std::uint64_t seed, std::uint64_t index) {
    rng::CounterRng gen(rng::substream(seed, kProbeTag));
    const Eigen::Index modes = space.modes();
    const Eigen::Index nodes = times.size();
    const double T = times(nodes - 1);
    Eigen::VectorXd xi(modes), zeta(modes);
    for (Eigen::Index k = 0; k < modes; ++k) {
        const double damp = scale / (1.0 + static_cast<double>(k));
        xi(k) = damp * gen.normal(index, 2 * k);
        zeta(k) = damp * gen.normal(index, 2 * k + 1);
    }
    Eigen::MatrixXd out(modes, nodes);
    for (Eigen::Index i = 0; i < nodes; ++i) {
        const double u = times(i) / T;
        const double ramp = u;
        const double tent = 1.0 - std::abs(2.0 * u - 1.0);
        out.col(i) = ramp * xi + tent * zeta;
    }
    return out;
}

} // namespace

ContractionEstimate empirical_contraction(const ProblemSpec& spec, double T, int steps,
                                          const CylindricalNoise& noise, int pairs,
                                          std::uint64_t seed, const VNormConfig& vcfg) {
    if (pairs < 1) throw std::domain_error("empirical_contraction: need at least one pair");
    const Eigen::VectorXd times = uniform_times(T, steps);
    const HistorySegmentPtr history = spec.initial_history;
    const MildPath orbit = MildPath::semigroup_orbit(spec.space, history, T, steps);
    const double scale = std::max(1.0, history->head().norm());

    ContractionEstimate est;
    for (int q = 0; q < pairs; ++q) {
        const Eigen::MatrixXd pa = probe_perturbation(*spec.space, times, scale, seed, 2 * q);
        const Eigen::MatrixXd pb = probe_perturbation(*spec.space, times, scale, seed, 2 * q + 1);
        MildPath phi(spec.space, times, orbit.values() + pa, history);
        MildPath psi(spec.space, times, orbit.values() + pb, history);
        const double denom = v_norm(MildPath::difference(phi, psi), vcfg).value;
        if (denom <= 1e-14) {
            ++est.skipped;
            continue;
        }
        const MildPath la = apply_LT(spec, phi, history, noise);
        const MildPath lb = apply_LT(spec, psi, history, noise);
        const double numer = v_norm(MildPath::difference(la, lb), vcfg).value;
        const double ratio = numer / denom;
        est.ratios.push_back(ratio);
        est.max_ratio = std::max(est.max_ratio, ratio);
    }
    return est;
}

PicardResult picard_solve(const ProblemSpec& spec, const CylindricalNoise& noise,
                          const PicardOptions& opts, const VNormConfig& vcfg) {
    spec.validate();
    const int steps = noise.steps();
    const double dt = noise.dt();
    if (std::abs(steps * dt - spec.horizon) > 1e-9 * std::max(1.0, spec.horizon))
        throw structural_error("picard_solve: noise grid does not tile the horizon");

    // Bisection on T until the empirical contraction ratio clears the threshold.
    ConvergenceRecord record;
    int n_sub = opts.force_subintervals > 0 ? opts.force_subintervals : 1;
    for (int b = 0;; ++b) {
        if (steps % n_sub != 0)
            throw solve_error("picard_solve: step count not divisible by the subinterval count");
        const double T = spec.horizon / n_sub;
        const int sub_steps = steps / n_sub;
        const ContractionEstimate ct = empirical_contraction(spec, T, sub_steps, noise,
                                                             opts.contraction_pairs,
                                                             opts.probe_seed, vcfg);
        record.contraction_scan.emplace_back(T, ct.max_ratio);
        record.contraction_horizon = T;
        record.contraction_ratio = ct.max_ratio;
        record.bisections = b;
        if (opts.force_subintervals > 0) break;
        if (ct.max_ratio < opts.contraction_threshold) break;
        if (b >= opts.max_bisections)
            throw solve_error("picard_solve: contraction ratio never fell below the threshold");
        n_sub *= 2;
    }

    const int sub_steps = steps / n_sub;
    const double T = spec.horizon / n_sub;
    const Eigen::VectorXd global_times = uniform_times(spec.horizon, steps);
    const Eigen::VectorXd local_times = uniform_times(T, sub_steps);
    Eigen::MatrixXd global_values(spec.space->modes(), steps + 1);
    global_values.col(0) = spec.initial_history->head();

    // Restart histories are never resampled: each subinterval evaluates its
    // segments through the solved prefix glued to the true initial history,
    // so concatenated solves agree with a single pass up to iteration error.
    bool all_converged = true;
    for (int m = 0; m < n_sub; ++m) {
        SubintervalRecord sub;
        sub.t_start = m * T;
        sub.t_end = (m + 1) * T;
        const int offset = m * sub_steps;
        const Eigen::VectorXd head = global_values.col(offset);

        Eigen::MatrixXd window(spec.space->modes(), sub_steps + 1);
        for (int i = 0; i <= sub_steps; ++i)
            window.col(i) = head.cwiseProduct(semigroup_factors(*spec.space, local_times(i)).matrix());

        auto image_of = [&](const Eigen::MatrixXd& win) {
            Eigen::MatrixXd work_values(spec.space->modes(), offset + sub_steps + 1);
            if (offset > 0) work_values.leftCols(offset) = global_values.leftCols(offset);
            work_values.rightCols(sub_steps + 1) = win;
            const MildPath work(spec.space, global_times.head(offset + sub_steps + 1),
                                std::move(work_values), spec.initial_history);
            return lt_core(spec, m * T, dt, sub_steps,
                           [&](double t_abs) { return work.eval(t_abs); },
                           spec.initial_history->grid(), head, noise, offset, true);
        };
        auto window_norm = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
            return v_norm(MildPath(spec.space, local_times, a - b, nullptr), vcfg).value;
        };

        double prev_residual = -1.0;
        for (int k = 1; k <= opts.max_iter; ++k) {
            Eigen::MatrixXd next = image_of(window);
            const double residual = window_norm(next, window);
            PicardIterate it;
            it.iteration = k;
            it.residual = residual;
            it.ratio = prev_residual > 0.0 ? residual / prev_residual : 0.0;
            sub.iterates.push_back(it);
            window = std::move(next);
            prev_residual = residual;
            if (residual < opts.tol) {
                sub.converged = true;
                break;
            }
        }
        all_converged = all_converged && sub.converged;
        sub.fixed_point_residual = window_norm(image_of(window), window);
        record.subintervals.push_back(std::move(sub));
        global_values.middleCols(offset, sub_steps + 1) = window;
    }

    PicardResult result{MildPath(spec.space, global_times, std::move(global_values),
                                 spec.initial_history),
                        std::move(record), all_converged};
    return result;
}

MildPath step_solve(const ProblemSpec& spec, const CylindricalNoise& noise) {
    spec.validate();
    const Space& space = *spec.space;
    const int steps = noise.steps();
    const double dt = noise.dt();
    if (std::abs(steps * dt - spec.horizon) > 1e-9 * std::max(1.0, spec.horizon))
        throw structural_error("step_solve: noise grid does not tile the horizon");
    const double root_dt = std::sqrt(dt);

    const Eigen::Index modes = space.modes();
    Eigen::VectorXd decay(modes), w_drift(modes), gain(modes);
    for (Eigen::Index k = 0; k < modes; ++k) {
        const double z = space.lambda()(k) * dt;
        decay(k) = std::exp(-z);
        w_drift(k) = dt * phi1(z);
        gain(k) = ou_gain(space.lambda()(k), dt);
    }

    const Eigen::VectorXd times = uniform_times(spec.horizon, steps);
    Eigen::MatrixXd values(modes, steps + 1);
    values.col(0) = spec.initial_history->head();
    const HistoryGridPtr hgrid = spec.initial_history->grid();

    auto eval_past = [&](double u, int filled) -> Eigen::VectorXd {
        if (u < 0.0) return spec.initial_history->eval(u);
        const double pos = u / dt;
        const int lo = std::min(static_cast<int>(pos), filled);
        if (lo >= filled) return values.col(filled);
        const double lam = pos - lo;
        return (1.0 - lam) * values.col(lo) + lam * values.col(lo + 1);
    };

    Eigen::VectorXd fbuf(modes);
    Eigen::MatrixXd bbuf(modes, spec.noise_modes > 0 ? spec.noise_modes : 1);
    for (int i = 0; i < steps; ++i) {
        Eigen::VectorXd next = decay.cwiseProduct(values.col(i));
        if (spec.drift || spec.diffusion) {
            Eigen::MatrixXd segvals(modes, hgrid->node_count());
            for (int j = 0; j < hgrid->node_count(); ++j)
                segvals.col(j) = eval_past(times(i) + hgrid->nodes()(j), i);
            const HistorySegment seg(spec.space, hgrid, std::move(segvals));
            if (spec.drift) {
                spec.drift(times(i), seg, fbuf);
                next += w_drift.cwiseProduct(fbuf);
            }
            if (spec.diffusion) {
                spec.diffusion(times(i), seg, bbuf);
                next += gain.cwiseProduct(bbuf * noise.increments().col(i) / root_dt);
            }
        }
        values.col(i + 1) = next;
    }
    return MildPath(spec.space, times, std::move(values), spec.initial_history);
}

ConvergenceStudy strong_convergence_study(const ProblemSpec& spec, SolveMethod method, int levels,
                                          int base_steps, int paths, std::uint64_t seed,
                                          const PicardOptions& opts, const VNormConfig& vcfg) {
    if (levels < 2) throw std::domain_error("strong_convergence_study: need >= 2 levels");
    // Self-convergence uses consecutive-level differences (level l vs level
    // l+1 on the summed noise); differencing against a single finest reference
    // would bias the slope at the level next to it.
    const bool consecutive = method != SolveMethod::PicardVsStep;
    const int total_levels = consecutive ? levels + 1 : levels;
    const int finest_steps = base_steps << (total_levels - 1);
    const int n_paths = spec.diffusion ? paths : 1;

    ConvergenceStudy study;
    study.dt.resize(levels);
    study.error.assign(levels, 0.0);
    for (int l = 0; l < levels; ++l) study.dt[l] = spec.horizon / (base_steps << l);

    for (int j = 0; j < n_paths; ++j) {
        const CylindricalNoise fine(std::max(1, spec.noise_modes), finest_steps,
                                    spec.horizon / finest_steps, seed, static_cast<std::uint64_t>(j));
        auto value_at = [&](const CylindricalNoise& w, SolveMethod how) -> Eigen::VectorXd {
            if (how == SolveMethod::Picard) return picard_solve(spec, w, opts, vcfg).path.values().rightCols(1);
            return step_solve(spec, w).values().rightCols(1);
        };
        std::vector<Eigen::VectorXd> finals(total_levels);
        for (int l = 0; l < total_levels; ++l) {
            const int level_steps = base_steps << l;
            const CylindricalNoise w = fine.coarsen(finest_steps / level_steps);
            if (method == SolveMethod::PicardVsStep) {
                study.error[l] += spec.space->lp_norm(
                    value_at(w, SolveMethod::Picard) - value_at(w, SolveMethod::Step), spec.p);
            } else {
                finals[l] = value_at(w, method);
            }
        }
        if (consecutive)
            for (int l = 0; l < levels; ++l)
                study.error[l] += spec.space->lp_norm(finals[l] - finals[l + 1], spec.p);
    }
    for (auto& e : study.error) e /= n_paths;

    // Least squares on log2(error) against the level index; order = -slope.
    int used = 0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> xs, ys;
    for (int l = 0; l < levels; ++l) {
        if (study.error[l] <= 0.0) continue;
        const double x = l, y = std::log2(study.error[l]);
        xs.push_back(x);
        ys.push_back(y);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++used;
    }
    if (used >= 2) {
        const double det = used * sxx - sx * sx;
        const double slope = (used * sxy - sx * sy) / det;
        study.order = -slope;
        if (used > 2) {
            const double intercept = (sy - slope * sx) / used;
            double ss = 0.0;
            for (int i = 0; i < used; ++i) {
                const double r = ys[i] - (intercept + slope * xs[i]);
                ss += r * r;
            }
            const double se = std::sqrt(ss / (used - 2) / (sxx - sx * sx / used));
            study.order_halfwidth = 2.0 * se;
        }
    }
    for (int l = 0; l + 1 < levels; ++l)
        if (study.error[l + 1] > study.error[l] * 1.05 && study.error[l + 1] > 1e-12)
            study.monotone = false;
    return study;
}

} // namespace delay_spde
