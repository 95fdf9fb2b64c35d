// Command-line front end: `kinex run` executes a scenario config, `kinex
// verify` runs one of the built-in check batteries, `kinex demo collide`
// resolves a single collision pair on the terminal.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
// (a diagnostic error.json is left in the output directory).

#include "kinex/dsmc.hpp"
#include "kinex/experiments.hpp"
#include "kinex/rng.hpp"
#include "kinex/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

int cmd_run(const std::string& config_path, int workers_override,
            const std::string& outdir_override) {
    kinex::Scenario scn;
    try {
        scn = kinex::parse_scenario(config_path);
        if (workers_override >= 0) {
            scn.workers = workers_override;
            scn.echo["workers"] = scn.workers;
        }
        if (!outdir_override.empty()) {
            scn.output_dir = outdir_override;
            scn.echo["output_dir"] = scn.output_dir;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }

    kinex::RunResult res;
    try {
        res = kinex::run_scenario(scn);
    } catch (const std::exception& ex) {
        // configuration problems surfaced while dispatching the experiment
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    for (const std::string& p : res.outputs) std::cout << "wrote " << p << "\n";
    if (res.exit_code != 0)
        std::cerr << "numerical failure; diagnostics in " << scn.output_dir << "/error.json\n";
    return res.exit_code;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& report) {
    std::vector<kinex::CheckLine> checks;
    if (suite == "thermo")
        checks = kinex::verify_thermo(seed);
    else if (suite == "collision")
        checks = kinex::verify_collision(seed);
    else
        checks = kinex::verify_kinetic(seed);

    bool all = true;
    for (const kinex::CheckLine& c : checks) {
        std::printf("%-38s  measured %11.4e  tolerance %11.4e  %s\n", c.name.c_str(),
                    c.measured, c.tolerance, c.pass ? "pass" : "FAIL");
        all = all && c.pass;
    }
    if (!report.empty()) {
        try {
            kinex::write_check_report(report, suite, checks);
            std::cout << "wrote " << report << "\n";
        } catch (const std::exception& ex) {
            std::cerr << "error: " << ex.what() << "\n";
            return 1;
        }
    }
    std::printf("%zu checks, %s\n", checks.size(), all ? "all passed" : "FAILURES above");
    return all ? 0 : 2;
}

kinex::Vec3 vec_from(const std::vector<double>& comps, int n, const kinex::Vec3& fb) {
    if (comps.empty()) return fb;
    kinex::Vec3 v{};
    for (std::size_t i = 0; i < comps.size() && i < 3; ++i)
        v[static_cast<int>(i)] = comps[i];
    for (int i = n; i < 3; ++i)
        if (v[i] != 0.0) throw std::domain_error("velocity component beyond dimension " +
                                                 std::to_string(n) + " must be zero");
    return v;
}

int cmd_demo_collide(int n, int M_max, std::vector<double> gamma, int m, int m1,
                     const std::vector<double>& v_in, const std::vector<double>& v1_in,
                     int count, std::uint64_t seed) {
    try {
        kinex::MassLaw law = gamma.empty()
                                 ? kinex::MassLaw::from_table(
                                       n, std::vector<double>(static_cast<std::size_t>(M_max), 1.0))
                                 : kinex::MassLaw::from_table(n, gamma);
        if (m < 1 || m > law.M_max || m1 < 1 || m1 > law.M_max)
            throw std::domain_error("masses must lie on the ladder 1.." +
                                    std::to_string(law.M_max));
        kinex::Particle p{m, vec_from(v_in, n, kinex::Vec3{1.0, 0.0, 0.0})};
        kinex::Particle q{m1, vec_from(v1_in, n, kinex::Vec3{-1.0, 0.0, 0.0})};
        kinex::Vec3 g = p.v - q.v;
        if (kinex::norm(g) == 0.0) throw std::domain_error("v and v1 must differ");

        std::printf("pair: m=%d v=(%g, %g, %g)  m1=%d v1=(%g, %g, %g)\n", p.m, p.v[0], p.v[1],
                    p.v[2], q.m, q.v[0], q.v[1], q.v[2]);
        std::printf("reduced energy %.6g, allowed channels:", kinex::reduced_energy(p, q));
        for (int mo : kinex::allowed_channels(law, m, m1)) std::printf(" %d", mo);
        std::printf("\n\n%-4s %-5s %-28s %-34s %-10s %-10s\n", "s", "m_out", "omega",
                    "outgoing velocities", "|dP|", "|dE|");

        kinex::Philox rng(seed, 11);
        for (int mo : kinex::allowed_channels(law, m, m1)) {
            for (int s = 0; s < count; ++s) {
                kinex::Vec3 omega = kinex::sample_omega(rng, g, n);
                auto [pa, pb] = kinex::collide_forward(p, q, kinex::CollisionChannel{mo, omega});
                kinex::Vec3 dP = static_cast<double>(m) * p.v +
                                 static_cast<double>(m1) * q.v -
                                 static_cast<double>(pa.m) * pa.v -
                                 static_cast<double>(pb.m) * pb.v;
                double dE = m * kinex::norm2(p.v) + m1 * kinex::norm2(q.v) -
                            pa.m * kinex::norm2(pa.v) - pb.m * kinex::norm2(pb.v);
                std::printf("%-4d %-5d (%6.3f,%6.3f,%6.3f)  m=%d (%6.3f,%6.3f,%6.3f) m=%d "
                            "(%6.3f,%6.3f,%6.3f) %9.2e %9.2e\n",
                            s, mo, omega[0], omega[1], omega[2], pa.m, pa.v[0], pa.v[1],
                            pa.v[2], pb.m, pb.v[0], pb.v[1], pb.v[2], kinex::norm(dP),
                            std::abs(dE));
            }
        }
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinex: exchange-gas kinetics and moment hierarchy toolkit"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute a JSON scenario config");
    std::string config_path;
    run->add_option("config", config_path, "path to the scenario file")->required();
    int workers = -1;
    run->add_option("--workers", workers,
                    "worker threads; overrides the config (0 reads KINEX_THREADS)");
    std::string outdir;
    run->add_option("--output-dir", outdir, "overrides the config output directory");

    auto* verify = app.add_subcommand("verify", "run a built-in verification battery");
    std::string suite;
    verify->add_option("suite", suite, "thermo, collision or kinetic")
        ->required()
        ->check(CLI::IsMember({"thermo", "collision", "kinetic"}));
    std::uint64_t vseed = 12345;
    verify->add_option("--seed", vseed, "battery RNG seed");
    std::string report;
    verify->add_option("--report", report, "also write the JSON report to this path");

    auto* demo = app.add_subcommand("demo", "terminal demonstrations");
    demo->require_subcommand(1);
    auto* collide = demo->add_subcommand("collide", "resolve one collision pair");
    int n = 3, M_max = 3, m = 1, m1 = 1, count = 4;
    std::uint64_t dseed = 1;
    std::vector<double> gamma, v_in, v1_in;
    collide->add_option("--n", n, "velocity dimension")->check(CLI::Range(1, 3));
    collide->add_option("--M-max", M_max, "mass ladder height")->check(CLI::Range(1, 64));
    collide->add_option("--gamma", gamma, "rate coefficients, comma separated")
        ->delimiter(',');
    collide->add_option("--m", m, "first incoming mass");
    collide->add_option("--m1", m1, "second incoming mass");
    collide->add_option("--v", v_in, "first velocity, comma separated")->delimiter(',');
    collide->add_option("--v1", v1_in, "second velocity, comma separated")->delimiter(',');
    collide->add_option("--count", count, "scattering directions per channel")
        ->check(CLI::PositiveNumber);
    collide->add_option("--seed", dseed, "direction sampler seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (run->parsed()) return cmd_run(config_path, workers, outdir);
    if (verify->parsed()) return cmd_verify(suite, vseed, report);
    if (collide->parsed())
        return cmd_demo_collide(n, M_max, gamma, m, m1, v_in, v1_in, count, dseed);
    return 1;
}
