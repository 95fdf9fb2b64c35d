#include "kinex/scenario.hpp"
#include "kinex/experiments.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

using namespace kinex;
using nlohmann::json;

namespace {

std::string error_text(const json& doc) {
    try {
        parse_scenario_json(doc);
    } catch (const std::domain_error& e) {
        return e.what();
    }
    return {};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("minimal config fills every default") {
    Scenario scn = parse_scenario_json(json{{"experiment", "relax_bgk"}});
    CHECK(scn.experiment == "relax_bgk");
    CHECK(scn.law.M_max == 2);
    CHECK(scn.law.n == 3);
    CHECK(scn.cells == 200);
    CHECK(scn.N_v == 16);
    CHECK(scn.v_max == 6.0);
    CHECK(scn.cfl == 0.45);
    CHECK(scn.seed == 1);
    CHECK(scn.output_dir == "out");
    CHECK(scn.scheme == AdvectionScheme::minmod);
    CHECK(scn.bc == BoundaryKind::periodic);

    // the echo materializes the defaults explicitly
    const json& e = scn.echo;
    CHECK(e.at("grid").at("cells").get<int>() == 200);
    CHECK(e.at("velocity").at("N_v").get<int>() == 16);
    CHECK(e.at("velocity").at("N_omega").get<int>() == 16);
    CHECK(e.at("law").at("M_max").get<int>() == 2);
    CHECK(e.at("ensemble").at("particles").get<int>() == 100000);
    CHECK(e.at("scheme").get<std::string>() == "minmod");
    CHECK(e.at("cfl").get<double>() == 0.45);
    CHECK(e.at("seed").get<std::uint64_t>() == 1);

    // feeding the echo back reproduces it unchanged
    Scenario again = parse_scenario_json(e);
    CHECK(again.echo == e);
}

TEST_CASE("unknown keys are rejected by path") {
    std::string top = error_text(json{{"experiment", "relax_bgk"}, {"bogus", 1}});
    CHECK(top.find("scenario config:") != std::string::npos);
    CHECK(top.find("bogus") != std::string::npos);
    CHECK(top.find("unknown key") != std::string::npos);

    std::string nested =
        error_text(json{{"experiment", "relax_bgk"}, {"grid", {{"cellz", 3}}}});
    CHECK(nested.find("grid") != std::string::npos);
    CHECK(nested.find("cellz") != std::string::npos);
    CHECK(nested.find("unknown key") != std::string::npos);

    std::string missing = error_text(json::object());
    CHECK(missing.find("experiment") != std::string::npos);

    std::string badexp = error_text(json{{"experiment", "warp_drive"}});
    CHECK(badexp.find("warp_drive") != std::string::npos);
}

TEST_CASE("mass law fragment") {
    Scenario unit = parse_scenario_json(
        json{{"experiment", "relax_bgk"}, {"law", {{"M_max", 4}, {"n", 2}}}});
    CHECK(unit.law.M_max == 4);
    CHECK(unit.law.n == 2);
    for (int m = 1; m <= 4; ++m) CHECK(unit.law.gamma_of(m) == 1.0);

    Scenario fam = parse_scenario_json(
        json{{"experiment", "relax_bgk"},
             {"law", {{"M_max", 3}, {"n", 2},
                      {"family", {{"a", 0.5}, {"b", -0.2}, {"c", 1.1}}}}}});
    for (int m = 1; m <= 3; ++m) {
        double want = 1.1 * std::pow(m, 0.5) * std::exp(-0.2 * m);
        CHECK(std::abs(fam.law.gamma_of(m) - want) <= 1e-14 * want);
    }

    Scenario tab = parse_scenario_json(
        json{{"experiment", "relax_bgk"}, {"law", {{"n", 2}, {"table", {1.0, 0.7, 1.9}}}}});
    CHECK(tab.law.M_max == 3);
    CHECK(tab.law.gamma_of(2) == 0.7);

    std::string mismatch = error_text(
        json{{"experiment", "relax_bgk"},
             {"law", {{"M_max", 3}, {"n", 2}, {"table", {1.0, 1.0}}}}});
    CHECK(mismatch.find("table length must equal M_max") != std::string::npos);

    std::string both = error_text(
        json{{"experiment", "relax_bgk"},
             {"law", {{"M_max", 2}, {"n", 2}, {"table", {1.0, 1.0}},
                      {"family", {{"a", 0.0}, {"b", 0.0}, {"c", 1.0}}}}}});
    CHECK(both.find("not both") != std::string::npos);
}

TEST_CASE("kernel, scheme and bounds validation") {
    Scenario pw = parse_scenario_json(
        json{{"experiment", "relax_bgk"},
             {"kernel", {{"kind", "power_law"}, {"C_B", 2.0}, {"omega_exp", 0.25}}}});
    CHECK(pw.kernel.kind == Kernel::Kind::power_law);
    CHECK(pw.kernel.C_B == 2.0);
    CHECK(pw.kernel.omega_exp == 0.25);

    CHECK(error_text(json{{"experiment", "relax_bgk"}, {"kernel", {{"kind", "soft"}}}})
              .find("maxwell or power_law") != std::string::npos);
    CHECK(!error_text(json{{"experiment", "relax_bgk"}, {"scheme", "warp"}}).empty());
    CHECK(parse_scenario_json(json{{"experiment", "relax_bgk"}, {"scheme", "unlimited"}})
              .scheme == AdvectionScheme::unlimited);
    CHECK(parse_scenario_json(
              json{{"experiment", "relax_bgk"}, {"grid", {{"bc", "outflow"}}}})
              .bc == BoundaryKind::outflow);
    CHECK(!error_text(json{{"experiment", "relax_bgk"}, {"grid", {{"bc", "wall"}}}}).empty());
    CHECK(!error_text(json{{"experiment", "relax_bgk"}, {"cfl", 0.0}}).empty());
    CHECK(!error_text(json{{"experiment", "relax_bgk"}, {"cfl", 1.2}}).empty());
    CHECK(!error_text(json{{"experiment", "relax_bgk"}, {"velocity", {{"N_v", 7}}}}).empty());
    CHECK(!error_text(json{{"experiment", "relax_bgk"}, {"velocity", {{"v_max", -1.0}}}})
               .empty());
    CHECK(!error_text(json{{"experiment", "relax_bgk"}, {"ensemble", {{"particles", 1}}}})
               .empty());
    CHECK(!error_text(json{{"experiment", "relax_bgk"}, {"grid", {{"cells", 0}}}}).empty());
}

TEST_CASE("syntax errors keep the parser's position") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "kinex_scn_syntax";
    fs::create_directories(dir);
    fs::path file = dir / "broken.json";
    {
        std::ofstream out(file);
        out << "{\n  \"experiment\": \"relax_bgk\",\n  \"cells\": oops\n}\n";
    }
    bool threw = false;
    try {
        parse_scenario(file.string());
    } catch (const std::exception& e) {
        threw = true;
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    CHECK(threw);
    CHECK_THROWS(parse_scenario((dir / "missing.json").string()));
    fs::remove_all(dir);
}

TEST_CASE("runs are reproducible for a fixed seed") {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "kinex_scn_repro";
    fs::remove_all(base);

    auto make_doc = [&](const std::string& dir, std::uint64_t seed) {
        return json{{"experiment", "relax_dsmc"},
                    {"law", {{"M_max", 3}, {"n", 2}}},
                    {"ensemble", {{"particles", 2000}}},
                    {"steps", 5},
                    {"seed", seed},
                    {"output_dir", (base / dir).string()}};
    };

    RunResult a = run_scenario(parse_scenario_json(make_doc("a", 9)));
    RunResult b = run_scenario(parse_scenario_json(make_doc("b", 9)));
    RunResult c = run_scenario(parse_scenario_json(make_doc("c", 10)));
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    REQUIRE(c.exit_code == 0);
    REQUIRE(!a.outputs.empty());

    std::map<std::string, std::string> contents_a, contents_b, contents_c;
    for (const std::string& p : a.outputs)
        if (p.size() > 4 && p.substr(p.size() - 4) == ".csv")
            contents_a[fs::path(p).filename().string()] = slurp(p);
    for (const std::string& p : b.outputs)
        if (p.size() > 4 && p.substr(p.size() - 4) == ".csv")
            contents_b[fs::path(p).filename().string()] = slurp(p);
    for (const std::string& p : c.outputs)
        if (p.size() > 4 && p.substr(p.size() - 4) == ".csv")
            contents_c[fs::path(p).filename().string()] = slurp(p);

    REQUIRE(!contents_a.empty());
    CHECK(contents_a == contents_b);  // byte-identical artifacts
    bool any_diff = false;
    for (const auto& [name, body] : contents_a) {
        auto it = contents_c.find(name);
        if (it == contents_c.end() || it->second != body) any_diff = true;
    }
    CHECK(any_diff);  // a different seed must actually change the draw

    fs::remove_all(base);
}

TEST_CASE("pair demonstration writes its artifacts") {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "kinex_scn_demo";
    fs::remove_all(base);
    json doc{{"experiment", "collide_demo"},
             {"law", {{"M_max", 4}, {"n", 3}}},
             {"seed", 3},
             {"output_dir", (base / "demo").string()}};
    RunResult r = run_scenario(parse_scenario_json(doc));
    CHECK(r.exit_code == 0);
    REQUIRE(!r.outputs.empty());
    for (const std::string& p : r.outputs) CHECK(fs::exists(p));
    fs::remove_all(base);
}
