#include "delay_spde/gamma.hpp"

#include <cmath>

namespace delay_spde {

namespace {
constexpr std::uint64_t kGammaTag = 0x67616D6D;  // "gamm"
constexpr std::uint64_t kBoundTag = 0x676D6264;  // "gmbd"
constexpr std::uint64_t kOrthoTag = 0x6F727468;  // "orth"

double weighted_lp_of(const Eigen::VectorXd& v, Eigen::Index offset, const Eigen::VectorXd& w,
                      double p) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) acc += w(i) * std::pow(std::abs(v(offset + i)), p);
    return std::pow(acc, 1.0 / p);
}

struct MeanVar {
    double mean = 0.0, se = 0.0;
};

/// Mean and standard error of f(sample index) over n samples.
template <typename F>
MeanVar mc_mean(int n, F&& f) {
    double sum = 0.0, sumsq = 0.0;
    for (int m = 0; m < n; ++m) {
        const double u = f(m);
        sum += u;
        sumsq += u * u;
    }
    MeanVar out;
    out.mean = sum / n;
    const double var = std::max(0.0, (sumsq - n * out.mean * out.mean) / (n - 1.0));
    out.se = std::sqrt(var / n);
    return out;
}

GammaEstimate estimate_from_sq(const MeanVar& mv, int samples) {
    GammaEstimate est;
    est.sq_mean = mv.mean;
    est.sq_standard_error = mv.se;
    est.samples = samples;
    est.value = std::sqrt(std::max(0.0, mv.mean));
    est.standard_error = est.value > 0.0 ? mv.se / (2.0 * est.value) : std::sqrt(mv.se);
    return est;
}

} // namespace

TargetNorm TargetNorm::euclidean(int dim) {
    TargetNorm t;
    t.kind = Kind::Euclidean;
    t.euclidean_dim = dim;
    return t;
}

TargetNorm TargetNorm::weighted_lp(Eigen::VectorXd weights, double p) {
    TargetNorm t;
    t.kind = Kind::Composite;
    t.p = p;
    t.head_weights = std::move(weights);
    return t;
}

TargetNorm TargetNorm::block_lp(Eigen::VectorXd block_weights, Eigen::VectorXd inner_weights,
                                double p) {
    TargetNorm t;
    t.kind = Kind::Composite;
    t.p = p;
    t.block_weights = std::move(block_weights);
    t.inner_weights = std::move(inner_weights);
    t.block_dim = static_cast<int>(t.inner_weights.size());
    return t;
}

TargetNorm TargetNorm::history_product(Eigen::VectorXd head_weights, Eigen::VectorXd block_weights,
                                       Eigen::VectorXd inner_weights, double p) {
    TargetNorm t = block_lp(std::move(block_weights), std::move(inner_weights), p);
    t.head_weights = std::move(head_weights);
    return t;
}

int TargetNorm::dim() const {
    if (kind == Kind::Euclidean) return euclidean_dim;
    return static_cast<int>(head_weights.size()) + static_cast<int>(block_weights.size()) * block_dim;
}

double TargetNorm::operator()(const Eigen::VectorXd& v) const {
    if (kind == Kind::Euclidean) return v.norm();
    double out = 0.0;
    Eigen::Index offset = 0;
    if (head_weights.size() > 0) {
        out += weighted_lp_of(v, 0, head_weights, p);
        offset = head_weights.size();
    }
    if (block_weights.size() > 0) {
        double acc = 0.0;
        for (Eigen::Index b = 0; b < block_weights.size(); ++b) {
            const double inner = weighted_lp_of(v, offset + b * block_dim, inner_weights, p);
            acc += block_weights(b) * std::pow(inner, p);
        }
        out += std::pow(acc, 1.0 / p);
    }
    return out;
}

GammaOperator::GammaOperator(Eigen::MatrixXd m, TargetNorm t) : matrix(std::move(m)), target(std::move(t)) {
    if (!matrix.allFinite()) throw numeric_error("GammaOperator: non-finite entries");
    if (matrix.rows() != target.dim())
        throw structural_error("GammaOperator: target descriptor does not match row dimension");
}

GammaEstimate gamma_norm_mc(const GammaOperator& op, int samples, std::uint64_t seed) {
    if (samples < 1000) throw std::domain_error("gamma_norm_mc: sample budget must be >= 1000");
    rng::CounterRng gen(rng::substream(seed, kGammaTag));
    const int dh = op.hilbert_dim();
    Eigen::VectorXd g(dh), y(op.matrix.rows());
    const MeanVar mv = mc_mean(samples, [&](int m) {
        for (int j = 0; j < dh; ++j) g(j) = gen.normal(m, j);
        y.noalias() = op.matrix * g;
        const double nrm = op.target(y);
        return nrm * nrm;
    });
    return estimate_from_sq(mv, samples);
}

double gamma_norm_hilbert(const GammaOperator& op) {
    if (op.target.kind != TargetNorm::Kind::Euclidean)
        throw structural_error("gamma_norm_hilbert: supported only for Euclidean targets");
    return op.matrix.norm();
}

GammaOperator gamma_fubini_forward(const std::vector<Eigen::MatrixXd>& blocks,
                                   Eigen::VectorXd block_weights, Eigen::VectorXd inner_weights,
                                   double p, const Eigen::MatrixXd* head,
                                   const Eigen::VectorXd* head_weights) {
    if (blocks.empty()) throw structural_error("gamma_fubini_forward: no blocks");
    if (static_cast<Eigen::Index>(blocks.size()) != block_weights.size())
        throw structural_error("gamma_fubini_forward: block/weight count mismatch");
    const Eigen::Index bd = blocks[0].rows();
    const Eigen::Index dh = blocks[0].cols();
    if (bd != inner_weights.size())
        throw structural_error("gamma_fubini_forward: inner weights do not match block rows");
    for (const auto& b : blocks)
        if (b.rows() != bd || b.cols() != dh)
            throw structural_error("gamma_fubini_forward: inconsistent block shapes");
    const Eigen::Index hd = head ? head->rows() : 0;
    if (head && (!head_weights || head_weights->size() != hd || head->cols() != dh))
        throw structural_error("gamma_fubini_forward: bad head block");

    Eigen::MatrixXd stacked(hd + bd * static_cast<Eigen::Index>(blocks.size()), dh);
    if (head) stacked.topRows(hd) = *head;
    for (std::size_t b = 0; b < blocks.size(); ++b)
        stacked.middleRows(hd + static_cast<Eigen::Index>(b) * bd, bd) = blocks[b];

    TargetNorm target = head ? TargetNorm::history_product(*head_weights, std::move(block_weights),
                                                           std::move(inner_weights), p)
                             : TargetNorm::block_lp(std::move(block_weights), std::move(inner_weights), p);
    return GammaOperator(std::move(stacked), std::move(target));
}

L2GammaEstimate l2gamma_norm_fields(const Space& space, const Eigen::MatrixXd& columns,
                                    const Eigen::VectorXd& mu, double p, int samples,
                                    std::uint64_t seed) {
    if (columns.cols() != mu.size())
        throw structural_error("l2gamma_norm_fields: column/mass count mismatch");
    if (mu.minCoeff() < 0.0) throw std::domain_error("l2gamma_norm_fields: negative masses");
    L2GammaEstimate out;
    out.samples = samples;
    if (columns.size() == 0 || columns.cwiseAbs().maxCoeff() == 0.0) return out;

    const Eigen::VectorXd root = mu.cwiseSqrt();
    rng::CounterRng gen(rng::substream(seed, kGammaTag));
    Eigen::VectorXd g(mu.size()), c(columns.rows());
    const MeanVar mv = mc_mean(samples, [&](int m) {
        for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = root(i) * gen.normal(m, i);
        c.noalias() = columns * g;
        const double nrm = space.lp_norm(c, p);
        return nrm * nrm;
    });
    const GammaEstimate ge = estimate_from_sq(mv, samples);
    out.gamma_part = ge.value;
    out.gamma_se = ge.standard_error;

    double acc = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        const double nrm = space.lp_norm(columns.col(i), p);
        acc += mu(i) * nrm * nrm;
    }
    out.l2_part = std::sqrt(acc);
    out.value = out.gamma_part + out.l2_part;
    return out;
}

L2GammaEstimate l2gamma_norm_segments(const std::vector<const HistorySegment*>& segments,
                                      const Eigen::VectorXd& mu, const WeightFunction& w, double p,
                                      int samples, std::uint64_t seed) {
    if (static_cast<Eigen::Index>(segments.size()) != mu.size())
        throw structural_error("l2gamma_norm_segments: segment/mass count mismatch");
    L2GammaEstimate out;
    out.samples = samples;
    if (segments.empty()) return out;
    const auto& space = segments[0]->space();
    const auto& grid = segments[0]->grid();
    for (const auto* s : segments)
        if (s->space() != space || s->grid() != grid)
            throw structural_error("l2gamma_norm_segments: segments on mixed grids");

    const Eigen::VectorXd root = mu.cwiseSqrt();
    rng::CounterRng gen(rng::substream(seed, kGammaTag));
    Eigen::MatrixXd comb(space->modes(), grid->node_count());
    const MeanVar mv = mc_mean(samples, [&](int m) {
        comb.setZero();
        for (std::size_t i = 0; i < segments.size(); ++i)
            comb += (root(static_cast<Eigen::Index>(i)) * gen.normal(m, i)) * segments[i]->values();
        const double nrm = b_norm(HistorySegment(space, grid, comb), w, p);
        return nrm * nrm;
    });
    const GammaEstimate ge = estimate_from_sq(mv, samples);
    out.gamma_part = ge.value;
    out.gamma_se = ge.standard_error;

    double acc = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const double nrm = b_norm(*segments[i], w, p);
        acc += mu(static_cast<Eigen::Index>(i)) * nrm * nrm;
    }
    out.l2_part = std::sqrt(acc);
    out.value = out.gamma_part + out.l2_part;
    return out;
}

namespace {

/// E||sum_n gamma_n v_n||^2 for fixed vectors v_n under a norm; exact for
/// Euclidean, MC otherwise.
MeanVar gaussian_sum_sq(const std::vector<Eigen::VectorXd>& vecs, const TargetNorm& norm,
                        int samples, rng::CounterRng& gen, std::uint64_t stream) {
    MeanVar mv;
    if (norm.kind == TargetNorm::Kind::Euclidean) {
        for (const auto& v : vecs) mv.mean += v.squaredNorm();
        return mv;
    }
    Eigen::VectorXd y(vecs[0].size());
    return mc_mean(samples, [&](int m) {
        y.setZero();
        for (std::size_t n = 0; n < vecs.size(); ++n)
            y += gen.normal((stream << 20) | m, n) * vecs[n];
        const double nrm = norm(y);
        return nrm * nrm;
    });
}

} // namespace

GammaBoundEstimate gamma_bound_estimate(const std::vector<Eigen::MatrixXd>& family,
                                        const TargetNorm& source, const TargetNorm& target,
                                        int trials, int samples, std::uint64_t seed) {
    if (family.empty()) throw structural_error("gamma_bound_estimate: empty family");
    const Eigen::Index dim = family[0].cols();
    for (const auto& m : family)
        if (m.cols() != dim || m.rows() != target.dim() || dim != source.dim())
            throw structural_error("gamma_bound_estimate: inconsistent operator shapes");

    rng::CounterRng gen(rng::substream(seed, kBoundTag));
    GammaBoundEstimate best;
    best.trials = trials;

    auto consider = [&](const std::vector<Eigen::VectorXd>& xs,
                        const std::vector<const Eigen::MatrixXd*>& ops, std::uint64_t stream) {
        std::vector<Eigen::VectorXd> ys(xs.size());
        for (std::size_t n = 0; n < xs.size(); ++n) ys[n] = *ops[n] * xs[n];
        const MeanVar num = gaussian_sum_sq(ys, target, samples, gen, 2 * stream);
        const MeanVar den = gaussian_sum_sq(xs, source, samples, gen, 2 * stream + 1);
        if (den.mean <= 0.0) return;
        const double ratio = std::sqrt(num.mean / den.mean);
        if (ratio > best.bound) {
            best.bound = ratio;
            const double rel = 0.25 * (num.se * num.se / (num.mean * num.mean) +
                                       den.se * den.se / (den.mean * den.mean));
            best.standard_error = ratio * std::sqrt(rel);
        }
    };

    // Singleton candidates aligned with each operator's top singular direction.
    for (std::size_t f = 0; f < family.size(); ++f) {
        Eigen::VectorXd x = Eigen::VectorXd::Ones(dim).normalized();
        for (int it = 0; it < 30; ++it) {
            Eigen::VectorXd next = family[f].transpose() * (family[f] * x);
            const double nrm = next.norm();
            if (nrm == 0.0) break;
            x = next / nrm;
        }
        consider({x}, {&family[f]}, 1000 + f);
    }

    for (int t = 0; t < trials; ++t) {
        const std::uint64_t pick_stream = 0xFFFF000000ull + static_cast<std::uint64_t>(t);
        const int len = 1 + static_cast<int>(gen.uniform(pick_stream, 0) * 4.0);
        std::vector<Eigen::VectorXd> xs(len);
        std::vector<const Eigen::MatrixXd*> ops(len);
        for (int n = 0; n < len; ++n) {
            xs[n].resize(dim);
            for (Eigen::Index j = 0; j < dim; ++j)
                xs[n](j) = gen.normal((static_cast<std::uint64_t>(t) << 8) | n, j);
            const auto pick = static_cast<std::size_t>(gen.uniform(pick_stream, 100 + n) * family.size());
            ops[n] = &family[std::min(pick, family.size() - 1)];
        }
        consider(xs, ops, 2000 + static_cast<std::uint64_t>(t));
    }
    return best;
}

MultiplierReport check_multiplier_inequality(const std::function<Eigen::MatrixXd(double)>& multiplier,
                                             const std::vector<double>& cell_left, double dt,
                                             const StepProcess& psi, const TargetNorm& source,
                                             const TargetNorm& target, int samples,
                                             std::uint64_t seed) {
    if (static_cast<int>(cell_left.size()) != psi.cells())
        throw structural_error("check_multiplier_inequality: cell count mismatch");
    const int cells = psi.cells();
    const int modes = psi.noise_modes();
    const double root_dt = std::sqrt(dt);

    Eigen::MatrixXd plain(psi.rows(), static_cast<Eigen::Index>(cells) * modes);
    Eigen::MatrixXd mult(target.dim(), static_cast<Eigen::Index>(cells) * modes);
    std::vector<Eigen::MatrixXd> family;
    family.reserve(cells);
    for (int i = 0; i < cells; ++i) {
        const Eigen::MatrixXd mi = multiplier(cell_left[i]);
        family.push_back(mi);
        plain.middleCols(static_cast<Eigen::Index>(i) * modes, modes) = root_dt * psi.cell(i);
        mult.middleCols(static_cast<Eigen::Index>(i) * modes, modes) = root_dt * (mi * psi.cell(i));
    }

    const GammaEstimate rhs = gamma_norm_mc(GammaOperator(plain, source), samples, seed);
    const GammaEstimate lhs = gamma_norm_mc(GammaOperator(mult, target), samples, seed + 1);
    const GammaBoundEstimate bound = gamma_bound_estimate(family, source, target, 64, 4000, seed + 2);

    MultiplierReport rep;
    rep.lhs = lhs.value;
    rep.rhs = rhs.value;
    rep.bound = bound.bound;
    rep.margin = 3.0 * bound.standard_error;
    const double tol = 3.0 * (lhs.standard_error + (rep.bound + rep.margin) * rhs.standard_error);
    rep.pass = rep.lhs <= (rep.bound + rep.margin) * rep.rhs + tol + 1e-12;
    return rep;
}

Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed) {
    rng::CounterRng gen(rng::substream(seed, kOrthoTag));
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = gen.normal(i, j);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    // Fix signs so the distribution is Haar rather than QR-convention biased.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

} // namespace delay_spde
