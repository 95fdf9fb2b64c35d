#include "kinex/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinex {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw std::domain_error("scenario config: " + path + ": " + msg);
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = std::any_of(allowed.begin(), allowed.end(),
                                 [&](const char* k) { return it.key() == k; });
        if (!known) fail(path + "/" + it.key(), "unknown key");
    }
}

double get_double(const json& j, const std::string& path, const char* key, double def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number()) fail(path + "/" + key, "expected a number");
    return v.get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(path + "/" + key, "expected an integer");
    return v.get<int>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(path + "/" + key, "expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_string()) fail(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

std::uint64_t get_u64(const json& j, const std::string& path, const char* key,
                      std::uint64_t def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(path + "/" + key, "expected an integer");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    auto s = v.get<std::int64_t>();
    if (s < 0) fail(path + "/" + key, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(s);
}

const char* const kExperiments[] = {"collide_demo", "qeval",   "relax_dsmc",
                                    "relax_bgk",    "euler_1d", "nsme_1d",
                                    "chapman_enskog", "thermo_verify"};

} // namespace

MassLaw mass_law_from_json(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"M_max", "n", "family", "table"});
    int n = get_int(j, path, "n", 3);
    if (j.contains("family") && j.contains("table"))
        fail(path, "give either family or table, not both");
    try {
        if (j.contains("table")) {
            const json& t = j.at("table");
            if (!t.is_array() || t.empty()) fail(path + "/table", "expected a non-empty array");
            std::vector<double> gamma;
            for (const json& g : t) {
                if (!g.is_number()) fail(path + "/table", "expected numbers");
                gamma.push_back(g.get<double>());
            }
            if (j.contains("M_max") &&
                get_int(j, path, "M_max", 0) != static_cast<int>(gamma.size()))
                fail(path, "table length must equal M_max");
            return MassLaw::from_table(n, std::move(gamma));
        }
        if (j.contains("family")) {
            const json& f = j.at("family");
            require_object(f, path + "/family");
            check_keys(f, path + "/family", {"a", "b", "c"});
            if (!j.contains("M_max")) fail(path, "family law requires M_max");
            return MassLaw::from_family(n, get_int(j, path, "M_max", 0),
                                        get_double(f, path + "/family", "a", 0.0),
                                        get_double(f, path + "/family", "b", 0.0),
                                        get_double(f, path + "/family", "c", 1.0));
        }
        // bare {M_max, n}: unit coefficients
        int M = get_int(j, path, "M_max", 2);
        return MassLaw::from_table(n, std::vector<double>(static_cast<std::size_t>(M), 1.0));
    } catch (const std::domain_error& e) {
        std::string w = e.what();
        if (w.rfind("scenario config:", 0) == 0) throw;
        fail(path, w);
    }
}

Kernel kernel_from_json(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"kind", "C_B", "omega_exp"});
    Kernel k;
    std::string kind = get_string(j, path, "kind", "maxwell");
    if (kind == "maxwell")
        k.kind = Kernel::Kind::maxwell;
    else if (kind == "power_law")
        k.kind = Kernel::Kind::power_law;
    else
        fail(path + "/kind", "expected maxwell or power_law");
    k.C_B = get_double(j, path, "C_B", 1.0);
    k.omega_exp = get_double(j, path, "omega_exp", 0.0);
    try {
        k.validate();
    } catch (const std::domain_error& e) {
        fail(path, e.what());
    }
    return k;
}

Scenario parse_scenario_json(const json& doc) {
    require_object(doc, "/");
    check_keys(doc, "", {"experiment", "law", "kernel", "grid", "velocity", "ensemble",
                         "fluid", "scheme", "eps", "dt", "cfl", "t_end", "steps",
                         "output_every", "seed", "workers", "output_dir", "ic"});

    Scenario s;
    if (!doc.contains("experiment")) fail("/experiment", "required");
    s.experiment = get_string(doc, "", "experiment", "");
    if (std::none_of(std::begin(kExperiments), std::end(kExperiments),
                     [&](const char* e) { return s.experiment == e; }))
        fail("/experiment", "unknown experiment '" + s.experiment + "'");

    if (doc.contains("law"))
        s.law = mass_law_from_json(doc.at("law"), "/law");
    else
        s.law = MassLaw::from_table(3, {1.0, 1.0});
    s.kernel = doc.contains("kernel") ? kernel_from_json(doc.at("kernel"), "/kernel") : Kernel{};

    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        require_object(g, "/grid");
        check_keys(g, "/grid", {"cells", "x_min", "x_max", "bc"});
        s.cells = get_int(g, "/grid", "cells", s.cells);
        s.x_min = get_double(g, "/grid", "x_min", s.x_min);
        s.x_max = get_double(g, "/grid", "x_max", s.x_max);
        std::string bc = get_string(g, "/grid", "bc", "periodic");
        if (bc == "periodic")
            s.bc = BoundaryKind::periodic;
        else if (bc == "outflow")
            s.bc = BoundaryKind::outflow;
        else
            fail("/grid/bc", "expected periodic or outflow");
    }
    if (s.cells < 1) fail("/grid/cells", "must be >= 1");
    if (!(s.x_max > s.x_min)) fail("/grid", "x_max must exceed x_min");

    if (doc.contains("velocity")) {
        const json& v = doc.at("velocity");
        require_object(v, "/velocity");
        check_keys(v, "/velocity", {"N_v", "v_max", "N_omega"});
        s.N_v = get_int(v, "/velocity", "N_v", s.N_v);
        s.v_max = get_double(v, "/velocity", "v_max", s.v_max);
        s.N_omega = get_int(v, "/velocity", "N_omega", s.N_omega);
    }
    if (s.N_v < 2 || s.N_v % 2 != 0) fail("/velocity/N_v", "must be even and >= 2");
    if (!(s.v_max > 0.0)) fail("/velocity/v_max", "must be positive");
    if (s.N_omega < 1) fail("/velocity/N_omega", "must be >= 1");

    if (doc.contains("ensemble")) {
        const json& e = doc.at("ensemble");
        require_object(e, "/ensemble");
        check_keys(e, "/ensemble", {"particles", "shards", "weight"});
        s.particles = get_int(e, "/ensemble", "particles", s.particles);
        s.shards = get_int(e, "/ensemble", "shards", s.shards);
        s.weight = get_double(e, "/ensemble", "weight", s.weight);
    }
    if (s.particles < 2) fail("/ensemble/particles", "must be >= 2");
    if (s.shards < 1) fail("/ensemble/shards", "must be >= 1");
    if (!(s.weight > 0.0)) fail("/ensemble/weight", "must be positive");

    if (doc.contains("fluid")) {
        const json& f = doc.at("fluid");
        require_object(f, "/fluid");
        check_keys(f, "/fluid", {"second_order", "limit"});
        s.second_order = get_bool(f, "/fluid", "second_order", s.second_order);
        s.limit = get_bool(f, "/fluid", "limit", s.limit);
    }

    std::string scheme = get_string(doc, "", "scheme", "minmod");
    if (scheme == "first_order")
        s.scheme = AdvectionScheme::first_order;
    else if (scheme == "minmod")
        s.scheme = AdvectionScheme::minmod;
    else if (scheme == "unlimited")
        s.scheme = AdvectionScheme::unlimited;
    else
        fail("/scheme", "expected first_order, minmod, or unlimited");

    s.eps = get_double(doc, "", "eps", s.eps);
    s.dt = get_double(doc, "", "dt", s.dt);
    s.cfl = get_double(doc, "", "cfl", s.cfl);
    s.t_end = get_double(doc, "", "t_end", s.t_end);
    s.steps = get_int(doc, "", "steps", s.steps);
    s.output_every = get_int(doc, "", "output_every", s.output_every);
    s.seed = get_u64(doc, "", "seed", s.seed);
    s.workers = get_int(doc, "", "workers", s.workers);
    s.output_dir = get_string(doc, "", "output_dir", s.output_dir);
    if (!(s.eps >= 0.0)) fail("/eps", "must be >= 0");
    if (!(s.dt >= 0.0)) fail("/dt", "must be >= 0");
    if (!(s.cfl > 0.0 && s.cfl <= 1.0)) fail("/cfl", "must lie in (0, 1]");
    if (!(s.t_end >= 0.0)) fail("/t_end", "must be >= 0");
    if (s.steps < 0) fail("/steps", "must be >= 0");
    if (s.output_every < 0) fail("/output_every", "must be >= 0");
    if (s.workers < 0) fail("/workers", "must be >= 0");
    if (s.output_dir.empty()) fail("/output_dir", "must not be empty");

    s.ic = doc.contains("ic") ? doc.at("ic") : json::object();
    if (!s.ic.is_object()) fail("/ic", "expected an object");

    json echo;
    echo["experiment"] = s.experiment;
    echo["law"] = {{"M_max", s.law.M_max}, {"n", s.law.n}, {"table", s.law.gamma}};
    echo["kernel"] = {
        {"kind", s.kernel.kind == Kernel::Kind::maxwell ? "maxwell" : "power_law"},
        {"C_B", s.kernel.C_B},
        {"omega_exp", s.kernel.omega_exp}};
    echo["grid"] = {{"cells", s.cells},
                    {"x_min", s.x_min},
                    {"x_max", s.x_max},
                    {"bc", s.bc == BoundaryKind::periodic ? "periodic" : "outflow"}};
    echo["velocity"] = {{"N_v", s.N_v}, {"v_max", s.v_max}, {"N_omega", s.N_omega}};
    echo["ensemble"] = {{"particles", s.particles}, {"shards", s.shards}, {"weight", s.weight}};
    echo["fluid"] = {{"second_order", s.second_order}, {"limit", s.limit}};
    echo["scheme"] = scheme;
    echo["eps"] = s.eps;
    echo["dt"] = s.dt;
    echo["cfl"] = s.cfl;
    echo["t_end"] = s.t_end;
    echo["steps"] = s.steps;
    echo["output_every"] = s.output_every;
    echo["seed"] = s.seed;
    echo["workers"] = s.workers;
    echo["output_dir"] = s.output_dir;
    echo["ic"] = s.ic;
    s.echo = std::move(echo);
    return s;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t upto = std::min(e.byte, text.size());
        line += static_cast<std::size_t>(std::count(text.begin(),
                                                    text.begin() + static_cast<long>(upto), '\n'));
        std::ostringstream os;
        os << "scenario config: " << path << ": line " << line << ": " << e.what();
        throw std::runtime_error(os.str());
    }
    return parse_scenario_json(doc);
}

} // namespace kinex
