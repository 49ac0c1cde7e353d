#pragma once

#include <string>
#include <vector>

#include "delay_spde/config.hpp"
#include "delay_spde/heatmem.hpp"
#include "delay_spde/vnorms.hpp"

namespace delay_spde {

inline constexpr const char* kVersion = "0.1.0";

/// Materialize the configured problem (heatmem or the custom switches).
HeatmemProblem problem_from(const RunConfig& cfg);
HeatmemParams heatmem_params_from(const RunConfig& cfg);
VNormConfig vnorm_from(const RunConfig& cfg);
PicardOptions picard_options_from(const RunConfig& cfg);

struct VerifyRow {
    std::string name;
    double measured = 0.0;
    double band = 0.0;
    bool pass = false;
};

/// The invariant suites behind `verify`: returns one row per check.
std::vector<VerifyRow> run_verification(const RunConfig& cfg);

int cmd_simulate(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);
int cmd_convergence(const RunConfig& cfg, int levels, bool strict, bool spatial);
int cmd_gamma_bench(const RunConfig& cfg);

} // namespace delay_spde
