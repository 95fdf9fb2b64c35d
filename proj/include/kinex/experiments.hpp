#pragma once

// Experiment runners behind the CLI: each takes a validated Scenario, writes
// its CSV/JSON artifacts under scenario.output_dir, and reports the produced
// files.  The verification batteries double as the `verify` subcommands.

#include "kinex/kinetic.hpp"
#include "kinex/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kinex {

struct RunResult {
    int exit_code = 0;  // 0 ok, 2 numerical failure (diagnostic JSON written)
    std::vector<std::string> outputs;
};

// Dispatch on scenario.experiment.  Numerical failures inside the run are
// caught, described in <output_dir>/error.json, and returned as exit code 2;
// config-level errors keep throwing.
RunResult run_scenario(const Scenario& scn);

struct CheckLine {
    std::string name;
    double tolerance = 0.0;
    double measured = 0.0;
    bool pass = false;
};

std::vector<CheckLine> verify_thermo(std::uint64_t seed = 12345);
std::vector<CheckLine> verify_collision(std::uint64_t seed = 12345);
std::vector<CheckLine> verify_kinetic(std::uint64_t seed = 12345);

void write_check_report(const std::string& path, const std::string& suite,
                        const std::vector<CheckLine>& checks);

// Relaxation-system run against its diffusive-limit companion on a shared
// smooth periodic profile; errors are cellwise mean absolute differences of
// the recovered fields at t_end.
struct TwoScaleConfig {
    MassLaw law = MassLaw::from_table(2, {1.0, 1.0});
    double eps = 2e-2;
    int cells = 192;
    int N_v = 20;
    double v_max = 6.0;
    double x_min = 0.0;
    double x_max = 1.0;
    double t_end = 0.05;
    double dt = 0.0;  // 0: derived from the advective and diffusive bounds
    double rho0 = 1.0, drho = 0.2;
    double u0 = 0.0, du = 0.1;
    double Theta0 = 1.0, dTheta = 0.0;
    double beta0 = 0.0, dbeta = 0.3;
    // start the kinetic run on the first-order expansion state instead of the
    // local equilibrium, suppressing the initial relaxation layer
    bool prepared = true;
    AdvectionScheme scheme = AdvectionScheme::unlimited;
};

struct TwoScaleResult {
    double err_rho = 0.0;
    double err_u = 0.0;
    double err_Theta = 0.0;
    double err_beta = 0.0;
    double err_total = 0.0;
    double dt = 0.0;
    int steps = 0;
    std::vector<MacroFields> kinetic_fields;
    std::vector<MacroFields> fluid_fields;
};

TwoScaleResult bgkme_vs_nsme(const TwoScaleConfig& cfg);

} // namespace kinex
