#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace delay_spde {

/// One experiment as data: every module knob in a sectioned text config that
/// round-trips losslessly through serialize -> parse.
struct RunConfig {
    // [problem]
    std::string kind = "heatmem"; // heatmem | custom

    // [custom] (only read when kind = custom)
    std::string custom_drift = "none";     // none | memory | head
    std::string custom_diffusion = "none"; // none | additive | memory

    // [heatmem]
    double length = 1.0;
    double kappa_f = 0.5;
    double sat_f = 0.0; // 0 => linear drift
    double c0 = 0.1;
    double q = 1.0;
    bool diffusion_saturate = true;
    double history_rate = 1.0;
    double history_scale = 1.0;

    // [discretization]
    int modes = 64;
    int quad_points = 512;
    int steps = 256;
    int history_cells = 256;
    double history_radius = 0.0; // 0 => automatic from eps_tail
    double history_stretch = 1.03;
    double eps_tail = 1e-10;

    // [stochastics]
    std::uint64_t seed = 12345;
    int paths = 1;
    int noise_modes = 0; // 0 => modes

    // [solver]
    double tol = 1e-6;
    int max_iter = 60;
    double alpha = 0.3;
    double p = 4.0;
    std::string flavor = "sup"; // sup | integrated
    double horizon = 1.0;

    // [vnorm]
    int t_subgrid = 12;
    int gamma_samples = 512;

    // [verify]
    double band_scale = 1.0;
    bool anticipating_b = false;

    // [outputs]
    std::string directory = "out";
    int write_paths = 1; // how many per-path CSVs to emit

    std::string serialize() const;
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);

    /// FNV-1a hash of the canonical serialization.
    std::uint64_t hash() const;

    /// Cross-field admissibility checks (mirrors the module preconditions).
    void validate() const;
};

struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace delay_spde
