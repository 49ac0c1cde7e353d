#include "delay_spde/stochastic.hpp"

#include <cmath>

#include "delay_spde/expphi.hpp"

namespace delay_spde {

namespace {
constexpr std::uint64_t kNoiseTag = 0x6E6F6973; // "nois"
}

CylindricalNoise::CylindricalNoise(int noise_modes, int steps, double dt, std::uint64_t seed,
                                   std::uint64_t path_id)
    : dt_(dt), seed_(seed), path_id_(path_id) {
    if (noise_modes < 1 || steps < 1) throw std::domain_error("CylindricalNoise: bad shape");
    if (dt <= 0.0) throw std::domain_error("CylindricalNoise: dt must be positive");
    rng::CounterRng gen(rng::substream(seed, kNoiseTag));
    increments_.resize(noise_modes, steps);
    const double scale = std::sqrt(dt);
    for (int n = 0; n < noise_modes; ++n) {
        const std::uint64_t hi = (static_cast<std::uint64_t>(n) << 32);
        for (int i = 0; i < steps; ++i)
            increments_(n, i) = scale * gen.normal(path_id, hi | static_cast<std::uint32_t>(i));
    }
}

CylindricalNoise::CylindricalNoise(Eigen::MatrixXd increments, double dt, std::uint64_t seed,
                                   std::uint64_t path_id)
    : increments_(std::move(increments)), dt_(dt), seed_(seed), path_id_(path_id) {}

double CylindricalNoise::brownian(int mode, int node) const {
    double acc = 0.0;
    for (int i = 0; i < node; ++i) acc += increments_(mode, i);
    return acc;
}

CylindricalNoise CylindricalNoise::from_increments(Eigen::MatrixXd increments, double dt) {
    if (increments.size() == 0 || dt <= 0.0)
        throw structural_error("CylindricalNoise::from_increments: bad shape or dt");
    return CylindricalNoise(std::move(increments), dt, 0, 0);
}

CylindricalNoise CylindricalNoise::coarsen(int factor) const {
    if (factor < 1 || steps() % factor != 0)
        throw structural_error("CylindricalNoise::coarsen: factor must divide the step count");
    const int coarse = steps() / factor;
    Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(modes(), coarse);
    for (int i = 0; i < coarse; ++i)
        for (int f = 0; f < factor; ++f) inc.col(i) += increments_.col(i * factor + f);
    return CylindricalNoise(std::move(inc), dt_ * factor, seed_, path_id_);
}

StepProcess::StepProcess(std::vector<Eigen::MatrixXd> cells, bool adapted)
    : cells_(std::move(cells)), adapted_(adapted) {
    if (cells_.empty()) throw structural_error("StepProcess: no cells");
    rows_ = static_cast<int>(cells_[0].rows());
    cols_ = static_cast<int>(cells_[0].cols());
    for (const auto& c : cells_)
        if (c.rows() != rows_ || c.cols() != cols_)
            throw structural_error("StepProcess: inconsistent cell shapes");
}

StepProcess StepProcess::adapted(const CylindricalNoise& noise, int rows, const Builder& builder) {
    std::vector<Eigen::MatrixXd> cells;
    cells.reserve(noise.steps());
    for (int i = 0; i < noise.steps(); ++i) {
        NoiseView past(noise, i);
        Eigen::MatrixXd m = builder(i, past);
        if (m.rows() != rows || m.cols() != noise.modes())
            throw structural_error("StepProcess::adapted: builder returned wrong shape");
        cells.push_back(std::move(m));
    }
    return StepProcess(std::move(cells), true);
}

StepProcess StepProcess::unchecked(std::vector<Eigen::MatrixXd> cells, bool adapted) {
    return StepProcess(std::move(cells), adapted);
}

Eigen::MatrixXd integrate_step(const StepProcess& process, const CylindricalNoise& noise) {
    if (process.cells() != noise.steps() || process.noise_modes() != noise.modes())
        throw structural_error("integrate_step: process and noise grids do not match");
    Eigen::MatrixXd path = Eigen::MatrixXd::Zero(process.rows(), noise.steps() + 1);
    for (int i = 0; i < noise.steps(); ++i)
        path.col(i + 1) = path.col(i) + process.cell(i) * noise.increments().col(i);
    return path;
}

double ou_exact_step(double a, double lambda, double sigma, double dt, double xi) {
    if (lambda <= 0.0) throw std::domain_error("ou_exact_step: lambda must be positive");
    if (dt <= 0.0) throw std::domain_error("ou_exact_step: dt must be positive");
    return std::exp(-lambda * dt) * a + sigma * ou_gain(lambda, dt) * xi;
}

} // namespace delay_spde
