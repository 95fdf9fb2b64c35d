#pragma once

// Scenario configs: one JSON document per run, parsed into a fully validated
// Scenario with every default materialized into the echoed config.  Unknown
// keys are rejected with their path so typos fail loudly instead of silently
// running defaults.

#include "kinex/collision.hpp"
#include "kinex/fluid.hpp"
#include "kinex/kinetic.hpp"
#include "kinex/mass_law.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace kinex {

struct Scenario {
    std::string experiment;
    MassLaw law;
    Kernel kernel;

    // spatial grid
    int cells = 200;
    double x_min = 0.0;
    double x_max = 1.0;
    BoundaryKind bc = BoundaryKind::periodic;

    // velocity grid
    int N_v = 16;
    double v_max = 6.0;
    int N_omega = 16;

    // ensemble
    int particles = 100000;
    int shards = 1;
    double weight = 1.0;

    // stepping
    double cfl = 0.45;
    double eps = 0.0;
    double dt = 0.0;  // 0: derive from the CFL bound
    double t_end = 0.1;
    int steps = 0;    // 0: derive from t_end and dt
    int output_every = 0;
    bool second_order = true;
    bool limit = true;
    AdvectionScheme scheme = AdvectionScheme::minmod;

    std::uint64_t seed = 1;
    int workers = 0;
    std::string output_dir = "out";

    nlohmann::json ic;    // experiment-specific initial condition block
    nlohmann::json echo;  // resolved config with every default filled in
};

// Parse and validate a scenario document.  Errors carry the offending key
// path; file-level syntax errors keep the parser's line information.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_json(const nlohmann::json& doc);

// Config fragments shared with the CLI.
MassLaw mass_law_from_json(const nlohmann::json& j, const std::string& path);
Kernel kernel_from_json(const nlohmann::json& j, const std::string& path);

} // namespace kinex
