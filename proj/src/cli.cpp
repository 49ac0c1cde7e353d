#include "delay_spde/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>

#include "delay_spde/csv.hpp"
#include "delay_spde/gamma.hpp"
#include "delay_spde/parallel.hpp"
#include "delay_spde/solver.hpp"

namespace delay_spde {

namespace fs = std::filesystem;

HeatmemParams heatmem_params_from(const RunConfig& cfg) {
    HeatmemParams hp;
    hp.length = cfg.length;
    hp.modes = cfg.modes;
    hp.quad_points = cfg.quad_points;
    hp.p = cfg.p;
    hp.alpha = cfg.alpha;
    hp.horizon = cfg.horizon;
    hp.drift.gain = cfg.kappa_f;
    hp.drift.sat_level = cfg.sat_f;
    hp.diffusion.c0 = cfg.c0;
    hp.diffusion.decay_q = cfg.q;
    hp.diffusion.saturate = cfg.diffusion_saturate;
    hp.diffusion.kind = MemoryDiffusion::Kind::Memory;
    hp.noise_modes = cfg.noise_modes;
    hp.history_rate = cfg.history_rate;
    hp.history_scale = cfg.history_scale;
    hp.history_cells = cfg.history_cells;
    hp.history_stretch = cfg.history_stretch;
    hp.history_radius = cfg.history_radius;
    hp.eps_tail = cfg.eps_tail;

    if (cfg.kind == "custom") {
        if (cfg.custom_drift != "memory") hp.drift.gain = 0.0;
        if (cfg.custom_diffusion == "none")
            hp.diffusion.kind = MemoryDiffusion::Kind::Zero;
        else if (cfg.custom_diffusion == "additive")
            hp.diffusion.kind = MemoryDiffusion::Kind::Additive;
    }
    return hp;
}

HeatmemProblem problem_from(const RunConfig& cfg) {
    HeatmemProblem prob = build_problem(heatmem_params_from(cfg));
    if (cfg.kind == "custom" && cfg.custom_drift == "head") {
        // Undelayed linear drift F(t, phi) = kappa_f * phi(0); the rough head
        // input makes the left-freeze error visible at order ~1/2.
        const double gain = cfg.kappa_f;
        prob.spec.drift = [gain](double, const HistorySegment& seg, Eigen::VectorXd& out) {
            out = gain * seg.head();
        };
        prob.lipschitz_f = gain;
    }
    return prob;
}

VNormConfig vnorm_from(const RunConfig& cfg) {
    VNormConfig v;
    v.alpha = cfg.alpha;
    v.p = cfg.p;
    v.flavor = cfg.flavor == "integrated" ? VNormConfig::Flavor::IntegratedInT
                                          : VNormConfig::Flavor::SupInT;
    v.t_subgrid = cfg.t_subgrid;
    v.gamma_samples = cfg.gamma_samples;
    v.seed = rng::substream(cfg.seed, 0x766E);
    return v;
}

PicardOptions picard_options_from(const RunConfig& cfg) {
    PicardOptions o;
    o.tol = cfg.tol;
    o.max_iter = cfg.max_iter;
    o.probe_seed = rng::substream(cfg.seed, 0x7072);
    return o;
}

namespace {

void write_path_csv(const std::string& file, const MildPath& path) {
    CsvWriter csv(file);
    std::vector<std::string> head{"t"};
    for (int k = 1; k <= path.space()->modes(); ++k) head.push_back("a_" + std::to_string(k));
    csv.header(head);
    for (int i = 0; i < path.node_count(); ++i) {
        std::vector<std::string> row{CsvWriter::num(path.times()(i))};
        for (int k = 0; k < path.space()->modes(); ++k)
            row.push_back(CsvWriter::num(path.values()(k, i)));
        csv.row(row);
    }
}

struct ManifestBuilder {
    std::vector<std::pair<std::string, std::string>> rows;
    std::string dir;

    void meta(const std::string& key, const std::string& value) { rows.emplace_back(key, value); }
    void artifact(const std::string& name) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(dir + "/" + name)));
        rows.emplace_back("artifact:" + name, buf);
    }
    void write() const {
        CsvWriter csv(dir + "/manifest.csv");
        csv.header({"key", "value"});
        for (const auto& [k, v] : rows) csv.row({k, v});
    }
};

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

int cmd_simulate(const RunConfig& cfg) {
    const HeatmemProblem problem = problem_from(cfg);
    const ProblemSpec& spec = problem.spec;
    const VNormConfig vcfg = vnorm_from(cfg);
    const PicardOptions opts = picard_options_from(cfg);

    const int n_paths = spec.diffusion ? cfg.paths : 1;
    const double dt = cfg.horizon / cfg.steps;
    const int noise_modes = std::max(1, spec.noise_modes);

    std::vector<PicardResult> results;
    results.reserve(n_paths);
    for (int j = 0; j < n_paths; ++j)
        results.emplace_back(PicardResult{MildPath::constant(spec.space, spec.initial_history,
                                                             spec.initial_history->head(),
                                                             cfg.horizon, cfg.steps),
                                          {}, false});
    std::vector<std::string> failures(n_paths);
    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t j) {
        try {
            const CylindricalNoise noise(noise_modes, cfg.steps, dt, cfg.seed, j);
            results[j] = picard_solve(spec, noise, opts, vcfg);
        } catch (const std::exception& e) {
            failures[j] = e.what();
        }
    });
    for (int j = 0; j < n_paths; ++j) {
        if (!failures[j].empty()) {
            std::cerr << "simulate: path " << j << " failed: " << failures[j] << "\n";
            return 1;
        }
        if (!results[j].converged) {
            std::cerr << "simulate: path " << j << " did not converge; see convergence record\n";
        }
    }

    fs::create_directories(cfg.directory);
    ManifestBuilder manifest;
    manifest.dir = cfg.directory;
    manifest.meta("version", kVersion);
    manifest.meta("command", "simulate");
    manifest.meta("config_hash", hex64(cfg.hash()));
    manifest.meta("seed", std::to_string(cfg.seed));

    {
        std::ofstream out(cfg.directory + "/config.ini", std::ios::binary);
        out << cfg.serialize();
    }
    manifest.artifact("config.ini");

    const int emit = std::min(cfg.write_paths, n_paths);
    for (int j = 0; j < emit; ++j) {
        const std::string name = "path_" + std::to_string(j) + ".csv";
        write_path_csv(cfg.directory + "/" + name, results[j].path);
        manifest.artifact(name);
    }
    if (n_paths > 1) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(spec.space->modes(), cfg.steps + 1);
        for (const auto& r : results) mean += r.path.values();
        mean /= n_paths;
        const MildPath mean_path(spec.space, results[0].path.times(), std::move(mean),
                                 spec.initial_history);
        write_path_csv(cfg.directory + "/mean_path.csv", mean_path);
        manifest.artifact("mean_path.csv");
    }

    {
        CsvWriter csv(cfg.directory + "/convergence.csv");
        csv.header({"subinterval", "t_start", "t_end", "iteration", "v_residual",
                    "contraction_ratio"});
        const ConvergenceRecord& rec = results[0].record;
        for (std::size_t m = 0; m < rec.subintervals.size(); ++m) {
            const auto& sub = rec.subintervals[m];
            for (const auto& it : sub.iterates)
                csv.row({CsvWriter::num(static_cast<int>(m)), CsvWriter::num(sub.t_start),
                         CsvWriter::num(sub.t_end), CsvWriter::num(it.iteration),
                         CsvWriter::num(it.residual), CsvWriter::num(it.ratio)});
        }
    }
    manifest.artifact("convergence.csv");

    {
        CsvWriter csv(cfg.directory + "/contraction.csv");
        csv.header({"T", "C_T"});
        for (const auto& [T, C] : results[0].record.contraction_scan)
            csv.row({CsvWriter::num(T), CsvWriter::num(C)});
    }
    manifest.artifact("contraction.csv");

    write_segment_csv(cfg.directory + "/history_segment.csv", *spec.initial_history);
    manifest.artifact("history_segment.csv");

    {
        // Solution-norm report over the solved ensemble, both flavors.
        CsvWriter csv(cfg.directory + "/norms.csv");
        csv.header({"flavor", "value", "se", "expectation_budget", "gamma_budget"});
        std::vector<const MildPath*> ensemble;
        for (const auto& r : results) ensemble.push_back(&r.path);
        for (const char* flavor : {"sup", "integrated"}) {
            VNormConfig nv = vcfg;
            nv.flavor = std::string(flavor) == "sup" ? VNormConfig::Flavor::SupInT
                                                     : VNormConfig::Flavor::IntegratedInT;
            const VNormReport rep = v_norm(ensemble, nv);
            csv.row({flavor, CsvWriter::num(rep.value), CsvWriter::num(rep.standard_error),
                     CsvWriter::num(n_paths), CsvWriter::num(nv.gamma_samples)});
        }
    }
    manifest.artifact("norms.csv");
    manifest.write();

    for (const auto& r : results)
        if (!r.converged) return 1;
    return 0;
}

namespace {

/// Single-mode additive-noise problem with lambda = 1 (length pi, one mode).
ProblemSpec single_mode_ou_problem(double sigma, double horizon) {
    ProblemSpec spec;
    spec.space = Space::make(std::numbers::pi, 1, 16);
    spec.weight = WeightFunction::exponential(1.0);
    auto grid = HistoryGrid::geometric(23.0, 32, 1.2);
    spec.initial_history = std::make_shared<const HistorySegment>(
        HistorySegment::constant(spec.space, grid, Eigen::VectorXd::Zero(1)));
    spec.noise_modes = 1;
    spec.diffusion = [sigma](double, const HistorySegment&, Eigen::MatrixXd& b) {
        b.setConstant(sigma);
    };
    spec.horizon = horizon;
    spec.p = 4.0;
    spec.alpha = 0.3;
    return spec;
}

double sample_variance(const std::vector<double>& xs, double& se_out) {
    const std::size_t n = xs.size();
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);
    se_out = var * std::sqrt(2.0 / static_cast<double>(n - 1));
    return var;
}

} // namespace

std::vector<VerifyRow> run_verification(const RunConfig& cfg) {
    std::vector<VerifyRow> rows;
    const double bs = cfg.band_scale;
    auto push = [&](const std::string& name, double measured, double band) {
        rows.push_back({name, measured, band, measured <= band});
    };

    // Weight axioms for the shipped kernels.
    {
        const auto exp_rep = verify_weight_axioms(WeightFunction::exponential(1.0), 4000, cfg.seed);
        push("weight_axioms_exp", exp_rep.max_relative_violation, 1e-12);
        const auto flat_rep = verify_weight_axioms(WeightFunction::constant(), 4000, cfg.seed);
        push("weight_axioms_const", flat_rep.max_relative_violation, 1e-12);
    }

    // Segment-norm inequality sweep: 100 seeded piecewise-linear paths.
    {
        const WeightFunction w = WeightFunction::exponential(1.0);
        auto space = Space::make(1.0, 4, 32);
        auto grid = HistoryGrid::geometric(26.0, 192, 1.05);
        rng::CounterRng gen(rng::substream(cfg.seed, 0x6B6D)); // "km"
        double worst = -1e300;
        const int steps = 24;
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::MatrixXd vals(4, steps + 1);
            for (int i = 0; i <= steps; ++i)
                for (int k = 0; k < 4; ++k)
                    vals(k, i) = gen.normal(trial * 64 + i, k) / (1.0 + k);
            auto history = std::make_shared<const HistorySegment>(
                HistorySegment::exponential(space, grid, vals.col(0), 0.7));
            const MildPath path(space, Eigen::VectorXd::LinSpaced(steps + 1, 0.0, 1.0), vals,
                                history);
            const KmReport rep = check_km_inequality(path, 1.0, w, 2.0, 1e-8);
            worst = std::max(worst, std::max(rep.lhs - rep.mid, rep.mid - rep.rhs));
        }
        push("km_inequality_sweep_excess", worst, 1e-8);
        push("k_of_one_analytic", std::abs(k_fn(1.0, w, 2.0) - (1.0 + std::sqrt(1.0 - std::exp(-1.0)))),
             1e-10);
    }

    // Semigroup identities.
    {
        auto space = Space::make(1.0, 16, 64);
        rng::CounterRng gen(rng::substream(cfg.seed, 0x7367)); // "sg"
        double law = 0.0, contract = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd c(16);
            for (int k = 0; k < 16; ++k) c(k) = gen.normal(trial, k);
            const SpectralField x(space, c);
            const double t = gen.uniform(trial, 100), s = gen.uniform(trial, 101);
            const SpectralField once = semigroup_apply(t, semigroup_apply(s, x));
            const SpectralField both = semigroup_apply(t + s, x);
            law = std::max(law, (once.coeffs - both.coeffs).cwiseAbs().maxCoeff());
            contract = std::max(contract, semigroup_apply(t, x).lp_norm(cfg.p) - x.lp_norm(cfg.p));
        }
        push("semigroup_law_defect", law, 1e-12);
        push("semigroup_contraction_excess", contract, 1e-9);

        std::vector<SpectralField> samples;
        rng::CounterRng gen2(rng::substream(cfg.seed, 0x7363)); // "sc"
        for (int i = 0; i < 6; ++i) {
            Eigen::VectorXd c(16);
            for (int k = 0; k < 16; ++k) c(k) = gen2.normal(i, k);
            samples.emplace_back(space, c);
        }
        const auto coarse =
            analytic_estimate_scan(0.25, log_spaced_grid(1e-4, 1.0, 65), samples, cfg.p);
        const auto fine =
            analytic_estimate_scan(0.25, log_spaced_grid(1e-4, 1.0, 129), samples, cfg.p);
        const double growth = fine.constant / coarse.constant - 1.0;
        push("analytic_scan_refinement_growth", growth, 0.01);
    }

    // Gamma-norm oracles.
    {
        rng::CounterRng gen(rng::substream(cfg.seed, 0x676D)); // "gm"
        double max_dev = 0.0, max_rel_se = 0.0;
        for (int inst = 0; inst < 20; ++inst) {
            Eigen::MatrixXd m(8, 8);
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) m(i, j) = gen.normal(inst * 8 + i, j);
            const GammaOperator op(m, TargetNorm::euclidean(8));
            const GammaEstimate mc = gamma_norm_mc(op, 20000, cfg.seed + inst);
            const double exact = gamma_norm_hilbert(op);
            max_dev = std::max(max_dev, std::abs(mc.value - exact) /
                                            std::max(1e-300, 3.0 * bs * mc.standard_error));
            max_rel_se = std::max(max_rel_se, mc.standard_error / mc.value);
        }
        push("gamma_mc_vs_hilbert_normalized", max_dev, 1.0);
        push("gamma_relative_se", max_rel_se, 0.01);

        Eigen::VectorXd h(6), x(5);
        for (int i = 0; i < 6; ++i) h(i) = gen.normal(1000, i);
        for (int i = 0; i < 5; ++i) x(i) = gen.normal(1001, i);
        const GammaOperator rank_one(x * h.transpose(), TargetNorm::euclidean(5));
        const GammaEstimate mc = gamma_norm_mc(rank_one, 20000, cfg.seed + 77);
        push("gamma_rank_one_normalized",
             std::abs(mc.value - h.norm() * x.norm()) / std::max(1e-300, 3.0 * bs * mc.standard_error),
             1.0);

        Eigen::MatrixXd m(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) m(i, j) = gen.normal(2000 + i, j);
        const GammaOperator base(m, TargetNorm::euclidean(8));
        const GammaOperator rotated(m * random_orthogonal(8, cfg.seed + 5), TargetNorm::euclidean(8));
        const GammaEstimate a = gamma_norm_mc(base, 20000, cfg.seed + 6);
        const GammaEstimate b = gamma_norm_mc(rotated, 20000, cfg.seed + 7);
        const double se = std::hypot(a.standard_error, b.standard_error);
        push("gamma_rotation_invariance_normalized",
             std::abs(a.value - b.value) / std::max(1e-300, 3.0 * bs * se), 1.0);
    }

    // Ito integral checks.
    {
        const int draws = 10000, steps = 16;
        const double T = 1.0, c = 0.7;
        std::vector<double> finals(draws);
        for (int d = 0; d < draws; ++d) {
            const CylindricalNoise w(1, steps, T / steps, cfg.seed + 3, d);
            double acc = 0.0;
            for (int i = 0; i < steps; ++i) acc += c * w.increment(0, i);
            finals[d] = acc;
        }
        double se = 0.0;
        const double var = sample_variance(finals, se);
        push("ito_isometry_dev", std::abs(var - c * c * T), 4.0 * bs * se);

        const CylindricalNoise w(2, 8, 0.125, cfg.seed + 9, 0);
        std::vector<Eigen::MatrixXd> cells(8, Eigen::MatrixXd::Zero(3, 2));
        Eigen::VectorXd xv(3);
        xv << 1.0, -2.0, 0.5;
        for (int i = 2; i < 5; ++i) cells[i].col(0) = xv; // 1_{(a,b]} (x) (e_1 (x) x)
        const StepProcess proc = StepProcess::unchecked(std::move(cells), true);
        const Eigen::MatrixXd xi = integrate_step(proc, w);
        const double wdiff = w.brownian(0, 5) - w.brownian(0, 2);
        push("ito_indicator_identity", (xi.col(8) - wdiff * xv).cwiseAbs().maxCoeff(), 1e-13);

        // Martingale mean-zero check; the anticipating switch flips the sign
        // structure so the mean detectably drifts.
        const int mpaths = 4000, msteps = 32;
        std::vector<double> ends(mpaths);
        for (int d = 0; d < mpaths; ++d) {
            const CylindricalNoise wn(1, msteps, 1.0 / msteps, cfg.seed + 11, d);
            double acc = 0.0, wcur = 0.0;
            for (int i = 0; i < msteps; ++i) {
                const double phi = cfg.anticipating_b ? (wn.increment(0, i) >= 0.0 ? 1.0 : -1.0)
                                                      : (wcur >= 0.0 ? 1.0 : -1.0);
                acc += phi * wn.increment(0, i);
                wcur += wn.increment(0, i);
            }
            ends[d] = acc;
        }
        double mean = 0.0;
        for (double e : ends) mean += e;
        mean /= mpaths;
        double sd = 0.0;
        for (double e : ends) sd += (e - mean) * (e - mean);
        sd = std::sqrt(sd / (mpaths - 1.0));
        push("ito_martingale_mean", std::abs(mean), 4.0 * bs * sd / std::sqrt(double(mpaths)));
    }

    // Ornstein-Uhlenbeck exactness.
    {
        const int paths = 10000;
        std::vector<double> stat(paths), conv(paths), stepv(paths);
        const ProblemSpec ou = single_mode_ou_problem(1.0, 1.0);
        parallel_for(paths, [&](std::size_t d) {
            rng::CounterRng gen(rng::substream(cfg.seed + 21, d));
            double a = 0.0;
            for (int i = 0; i < 200; ++i) a = ou_exact_step(a, 1.0, 1.0, 0.1, gen.normal(i, 0));
            stat[d] = a;

            const CylindricalNoise w(1, 64, 1.0 / 64, cfg.seed + 22, d);
            std::vector<Eigen::MatrixXd> cells(64, Eigen::MatrixXd::Constant(1, 1, 1.0));
            const StepProcess b = StepProcess::unchecked(std::move(cells), true);
            conv[d] = stoch_convolution(*ou.space, b, w, 0, 64)(0, 64);
            stepv[d] = step_solve(ou, w).values()(0, 64);
        });
        double se = 0.0;
        const double var_stat = sample_variance(stat, se);
        push("ou_stationary_var_dev", std::abs(var_stat - 0.5), 4.0 * bs * se);
        const double target = (1.0 - std::exp(-2.0)) / 2.0;
        const double var_conv = sample_variance(conv, se);
        push("stoch_conv_ou_var_dev", std::abs(var_conv - target), 4.0 * bs * se);
        const double var_step = sample_variance(stepv, se);
        push("step_solve_ou_var_dev", std::abs(var_step - target), 4.0 * bs * se);
    }

    // Shipped Nemytskii Lipschitz constants.
    {
        RunConfig small = cfg;
        small.modes = 16;
        small.quad_points = 64;
        small.history_cells = 96;
        small.noise_modes = 16;
        const HeatmemProblem prob = build_problem(heatmem_params_from(small));
        const LipschitzReport rep = verify_lipschitz(prob, 100, cfg.seed + 31, 400);
        push("lipschitz_drift_ratio_over_bound",
             prob.lipschitz_f > 0.0 ? rep.drift_ratio / rep.drift_bound : 0.0, 1.05);
        push("lipschitz_diffusion_ratio_over_bound",
             prob.lipschitz_diffusion > 0.0 ? rep.diffusion_ratio / rep.diffusion_bound : 0.0, 1.05);
    }

    // mu_{t,alpha} closed-form mass.
    {
        const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(65, 0.0, 1.0);
        const Eigen::VectorXd mu = mu_weights(1.0, 0.25, times);
        push("mu_total_mass_defect", std::abs(mu.sum() - 2.0), 1e-12);
    }

    return rows;
}

int cmd_verify(const RunConfig& cfg) {
    const std::vector<VerifyRow> rows = run_verification(cfg);
    bool all = true;
    fs::create_directories(cfg.directory);
    CsvWriter csv(cfg.directory + "/verify.csv");
    csv.header({"check", "measured", "band", "verdict"});
    for (const auto& r : rows) {
        all = all && r.pass;
        std::printf("[%s] %-42s measured=%.6g band=%.6g\n", r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.measured, r.band);
        csv.row({r.name, CsvWriter::num(r.measured), CsvWriter::num(r.band),
                 r.pass ? "pass" : "fail"});
    }
    std::printf("%s\n", all ? "verify: all checks passed" : "verify: FAILURES present");
    return all ? 0 : 1;
}

int cmd_convergence(const RunConfig& cfg, int levels, bool strict, bool spatial) {
    if (levels < 3) {
        std::cerr << "convergence: need at least 3 levels\n";
        return 2;
    }
    const HeatmemProblem problem = problem_from(cfg);
    const VNormConfig vcfg = vnorm_from(cfg);
    PicardOptions opts = picard_options_from(cfg);

    const int denom = 1 << (levels - 1);
    if (cfg.steps % denom != 0 || cfg.steps / denom < 2) {
        std::cerr << "convergence: steps must be divisible by 2^(levels-1) with >= 2 base steps\n";
        return 2;
    }
    const int base_steps = cfg.steps / denom;

    fs::create_directories(cfg.directory);
    CsvWriter table(cfg.directory + "/strong_error.csv");
    table.header({"axis", "level", "h", "error"});

    const ConvergenceStudy study = strong_convergence_study(
        problem.spec, SolveMethod::PicardVsStep, levels, base_steps,
        std::max(1, std::min(cfg.paths, 64)), cfg.seed, opts, vcfg);
    for (int l = 0; l < levels; ++l)
        table.row({"dt", CsvWriter::num(l), CsvWriter::num(study.dt[l]),
                   CsvWriter::num(study.error[l])});

    CsvWriter orders(cfg.directory + "/orders.csv");
    orders.header({"axis", "order", "halfwidth", "monotone"});
    orders.row({"dt", CsvWriter::num(study.order), CsvWriter::num(study.order_halfwidth),
                study.monotone ? "true" : "false"});
    std::printf("dt refinement: order %.3f +- %.3f (monotone: %s)\n", study.order,
                study.order_halfwidth, study.monotone ? "yes" : "no");

    bool monotone = study.monotone;
    if (spatial) {
        // Mode refinement at fixed dt against the configured mode count.
        const int spatial_levels = 3;
        RunConfig fine_cfg = cfg;
        const HeatmemProblem fine = problem_from(fine_cfg);
        const CylindricalNoise noise(std::max(1, fine.spec.noise_modes), cfg.steps,
                                     cfg.horizon / cfg.steps, cfg.seed, 0);
        const Eigen::VectorXd ref =
            fine.spec.space->point_values(picard_solve(fine.spec, noise, opts, vcfg)
                                              .path.values()
                                              .rightCols(1));
        double prev = 0.0;
        for (int l = 0; l < spatial_levels; ++l) {
            RunConfig level_cfg = cfg;
            level_cfg.modes = cfg.modes >> (spatial_levels - l);
            if (level_cfg.modes < 2) continue;
            level_cfg.noise_modes = std::min(std::max(1, cfg.noise_modes), level_cfg.modes);
            const HeatmemProblem lp = problem_from(level_cfg);
            const CylindricalNoise wn(std::max(1, lp.spec.noise_modes), cfg.steps,
                                      cfg.horizon / cfg.steps, cfg.seed, 0);
            const Eigen::VectorXd at =
                lp.spec.space->point_values(picard_solve(lp.spec, wn, opts, vcfg)
                                                .path.values()
                                                .rightCols(1));
            const double err = fine.spec.space->lp_norm_points(at - ref, cfg.p);
            table.row({"modes", CsvWriter::num(l), CsvWriter::num(double(level_cfg.modes)),
                       CsvWriter::num(err)});
            if (l > 0 && err > prev * 1.05 && prev > 0.0) monotone = false;
            prev = err;
        }
    }

    if (!monotone) {
        std::cerr << "convergence: non-monotone error decay flagged\n";
        if (strict) return 1;
    }
    return 0;
}

int cmd_gamma_bench(const RunConfig& cfg) {
    fs::create_directories(cfg.directory);
    CsvWriter csv(cfg.directory + "/gamma_bench.csv");
    csv.header({"rows", "cols", "exact_hs", "mc_value", "mc_se", "samples"});
    rng::CounterRng gen(rng::substream(cfg.seed, 0x6762)); // "gb"
    const int shapes[][2] = {{4, 4}, {8, 8}, {12, 6}};
    for (const auto& s : shapes) {
        Eigen::MatrixXd m(s[0], s[1]);
        for (int i = 0; i < s[0]; ++i)
            for (int j = 0; j < s[1]; ++j) m(i, j) = gen.normal(i + 100 * s[0], j);
        const GammaOperator op(m, TargetNorm::euclidean(s[0]));
        const GammaEstimate mc = gamma_norm_mc(op, 20000, cfg.seed);
        csv.row({CsvWriter::num(s[0]), CsvWriter::num(s[1]),
                 CsvWriter::num(gamma_norm_hilbert(op)), CsvWriter::num(mc.value),
                 CsvWriter::num(mc.standard_error), CsvWriter::num(mc.samples)});
        std::printf("gamma %dx%d: exact %.5f mc %.5f (se %.2g)\n", s[0], s[1],
                    gamma_norm_hilbert(op), mc.value, mc.standard_error);
    }

    // Contraction family bound on one mode: must not exceed 1.
    std::vector<Eigen::MatrixXd> family;
    for (int i = 1; i <= 8; ++i)
        family.push_back(Eigen::MatrixXd::Constant(1, 1, std::exp(-0.25 * i)));
    const GammaBoundEstimate bound =
        gamma_bound_estimate(family, TargetNorm::euclidean(1), TargetNorm::euclidean(1), 64, 4000,
                             cfg.seed);
    std::printf("semigroup family bound: %.6f (se %.2g)\n", bound.bound, bound.standard_error);
    return 0;
}

} // namespace delay_spde
