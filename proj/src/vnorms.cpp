#include "delay_spde/vnorms.hpp"

#include <algorithm>
#include <cmath>

#include "delay_spde/rng.hpp"

namespace delay_spde {

namespace {
constexpr std::uint64_t kVnormTag = 0x766E726D; // "vnrm"

std::vector<int> t_indices(int nodes, int subgrid) {
    std::vector<int> idx;
    const int last = nodes - 1;
    if (subgrid <= 0 || subgrid >= last) {
        for (int i = 1; i <= last; ++i) idx.push_back(i);
        return idx;
    }
    for (int k = 1; k <= subgrid; ++k)
        idx.push_back(static_cast<int>(std::llround(static_cast<double>(k) * last / subgrid)));
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

/// gamma(L^2(0,t,mu_{t,alpha}), E)-norm of one grid path; columns sampled at
/// cell-left nodes, the node s = t excluded, masses exact per cell. se_out
/// receives the delta-method MC error of the returned value.
double gamma_norm_at(const MildPath& path, int it, double alpha, double p, int samples,
                     const rng::CounterRng& gen, std::uint64_t stream, double& se_out) {
    const double t = path.times()(it);
    const Eigen::VectorXd mu = mu_weights(t, alpha, path.times());
    const Eigen::VectorXd root = mu.cwiseSqrt();
    const auto& space = *path.space();
    Eigen::VectorXd c(space.modes());
    double acc = 0.0, accsq = 0.0;
    for (int m = 0; m < samples; ++m) {
        c.setZero();
        for (int i = 0; i < it; ++i)
            c += (root(i) * gen.normal((stream << 24) | static_cast<std::uint64_t>(m), i)) *
                 path.values().col(i);
        const double nrm = space.lp_norm(c, p);
        acc += nrm * nrm;
        accsq += nrm * nrm * nrm * nrm;
    }
    acc /= samples;
    const double var = std::max(0.0, (accsq - samples * acc * acc) / (samples - 1.0)) / samples;
    const double value = std::sqrt(acc);
    se_out = value > 0.0 ? std::sqrt(var) / (2.0 * value) : 0.0;
    return value;
}

} // namespace

void VNormConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) throw std::domain_error("VNormConfig: alpha must be in (0, 1/2)");
    if (p < 1.0) throw std::domain_error("VNormConfig: p must be >= 1");
    if (gamma_samples < 1) throw std::domain_error("VNormConfig: gamma_samples must be positive");
}

Eigen::VectorXd mu_weights(double t, double alpha, const Eigen::VectorXd& times) {
    if (alpha >= 0.5) throw std::domain_error("mu_weights: alpha must be < 1/2");
    if (alpha < 0.0) throw std::domain_error("mu_weights: alpha must be nonnegative");
    if (t <= 0.0 || t > times(times.size() - 1) * (1.0 + 1e-12))
        throw std::domain_error("mu_weights: t outside the grid span");
    const double q = 1.0 - 2.0 * alpha;
    std::vector<double> masses;
    for (Eigen::Index i = 0; i + 1 < times.size() && times(i) < t; ++i) {
        const double hi = std::min(times(i + 1), t);
        masses.push_back((std::pow(t - times(i), q) - std::pow(t - hi, q)) / q);
    }
    return Eigen::Map<Eigen::VectorXd>(masses.data(), static_cast<Eigen::Index>(masses.size()));
}

VNormReport v_norm(const std::vector<const MildPath*>& ensemble, const VNormConfig& cfg) {
    cfg.validate();
    if (ensemble.empty()) throw structural_error("v_norm: empty ensemble");
    const MildPath& first = *ensemble.front();
    for (const auto* path : ensemble)
        if (path->space() != first.space() || path->node_count() != first.node_count())
            throw structural_error("v_norm: ensemble paths on mixed grids");

    const auto& space = *first.space();
    const double p = cfg.p;
    const std::size_t n = ensemble.size();

    // (E ||phi||_C^p)^{1/p} over grid nodes, with the SE of the p-th moments.
    double mom = 0.0, momsq = 0.0;
    for (const auto* path : ensemble) {
        double sup = 0.0;
        for (int i = 0; i < path->node_count(); ++i)
            sup = std::max(sup, space.lp_norm(path->values().col(i), p));
        const double u = std::pow(sup, p);
        mom += u;
        momsq += u * u;
    }
    mom /= static_cast<double>(n);
    VNormReport rep;
    rep.sup_term = std::pow(mom, 1.0 / p);
    double se_sup = 0.0;
    if (n > 1 && mom > 0.0) {
        const double var = std::max(0.0, (momsq - n * mom * mom) / (n - 1.0)) / n;
        se_sup = std::sqrt(var) / (p * std::pow(mom, 1.0 - 1.0 / p));
    }

    const rng::CounterRng gen(rng::substream(cfg.seed, kVnormTag));
    const std::vector<int> idx = t_indices(first.node_count(), cfg.t_subgrid);
    double gamma_term = 0.0;
    double integral = 0.0;
    double prev_t = 0.0;
    double se_gamma = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        double acc = 0.0, accsq = 0.0, inner_se = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double se_j = 0.0;
            const double g = gamma_norm_at(*ensemble[j], idx[k], cfg.alpha, p, cfg.gamma_samples,
                                           gen, (k << 10) | j, se_j);
            const double u = std::pow(g, p);
            acc += u;
            accsq += u * u;
            inner_se += se_j;
        }
        acc /= static_cast<double>(n);
        inner_se /= static_cast<double>(n);
        const double level = std::pow(acc, 1.0 / p);
        if (cfg.flavor == VNormConfig::Flavor::SupInT) {
            if (level > gamma_term) {
                gamma_term = level;
                double spread = 0.0;
                if (n > 1 && acc > 0.0) {
                    const double var = std::max(0.0, (accsq - n * acc * acc) / (n - 1.0)) / n;
                    spread = std::sqrt(var) / (p * std::pow(acc, 1.0 - 1.0 / p));
                }
                se_gamma = std::hypot(spread, inner_se / std::sqrt(static_cast<double>(n)));
            }
        } else {
            const double t = first.times()(idx[k]);
            integral += acc * (t - prev_t);
            prev_t = t;
        }
    }
    if (cfg.flavor == VNormConfig::Flavor::IntegratedInT) gamma_term = std::pow(integral, 1.0 / p);

    rep.gamma_term = gamma_term;
    rep.value = rep.sup_term + rep.gamma_term;
    rep.standard_error = std::sqrt(se_sup * se_sup + se_gamma * se_gamma);
    return rep;
}

VNormReport v_norm(const MildPath& path, const VNormConfig& cfg) {
    return v_norm(std::vector<const MildPath*>{&path}, cfg);
}

HolderReport holder_diagnostic(const std::vector<const MildPath*>& ensemble, double lambda,
                               double delta, double p, double eta, double theta_f, double theta_b) {
    if (ensemble.empty()) throw structural_error("holder_diagnostic: empty ensemble");
    if (lambda < 0.0 || delta < eta)
        throw std::domain_error("holder_diagnostic: need lambda >= 0 and delta >= eta");
    const double cap = std::min(0.5 - 1.0 / p - theta_b, 1.0 - theta_f);
    if (!(lambda + delta < cap))
        throw std::domain_error("holder_diagnostic: (lambda, delta) outside the admissible region");

    const auto& space = *ensemble.front()->space();
    const Eigen::VectorXd frac = space.lambda().array().pow(delta);
    double mom = 0.0;
    for (const auto* path : ensemble) {
        if (!path->history()) throw structural_error("holder_diagnostic: path carries no history");
        const int nodes = path->node_count();
        Eigen::MatrixXd devs(space.modes(), nodes);
        const Eigen::VectorXd head = path->history()->head();
        for (int i = 0; i < nodes; ++i)
            devs.col(i) = path->values().col(i) -
                          head.cwiseProduct(semigroup_factors(space, path->times()(i)).matrix());
        const Eigen::MatrixXd pts = space.synthesis() * devs;
        const Eigen::MatrixXd pts_frac = space.synthesis() * frac.asDiagonal() * devs;
        double sup = 0.0;
        for (int i = 0; i < nodes; ++i)
            for (int j = i + 1; j < nodes; ++j) {
                const double dtp = std::pow(path->times()(j) - path->times()(i), lambda);
                const double nrm = space.lp_norm_points(pts.col(j) - pts.col(i), p) +
                                   space.lp_norm_points(pts_frac.col(j) - pts_frac.col(i), p);
                sup = std::max(sup, nrm / dtp);
            }
        mom += std::pow(sup, p);
    }
    HolderReport rep;
    rep.lambda = lambda;
    rep.delta = delta;
    rep.value = std::pow(mom / static_cast<double>(ensemble.size()), 1.0 / p);
    return rep;
}

} // namespace delay_spde
