#include "pfem/scenario.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pfem {

const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::hydrostatic: return "hydrostatic";
        case ScenarioKind::sloshing: return "sloshing";
        case ScenarioKind::vortex_box_bubble: return "vortex_box_bubble";
        case ScenarioKind::vortex_box_hole: return "vortex_box_hole";
        case ScenarioKind::rising_bubble: return "rising_bubble";
        case ScenarioKind::falling_drop: return "falling_drop";
        case ScenarioKind::dam_break_dry: return "dam_break_dry";
        case ScenarioKind::dam_break_wet: return "dam_break_wet";
    }
    return "?";
}

const char* to_string(CflPolicy p) { return p == CflPolicy::error ? "error" : "clamp"; }

double ScenarioConfig::geom(const std::string& key) const {
    const auto it = geometry.find(key);
    if (it == geometry.end()) throw ConfigError("missing geometry key '" + key + "'");
    return it->second;
}

namespace {

std::optional<ScenarioKind> scenario_from(const std::string& s) {
    for (ScenarioKind k : {ScenarioKind::hydrostatic, ScenarioKind::sloshing,
                           ScenarioKind::vortex_box_bubble, ScenarioKind::vortex_box_hole,
                           ScenarioKind::rising_bubble, ScenarioKind::falling_drop,
                           ScenarioKind::dam_break_dry, ScenarioKind::dam_break_wet})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

double parse_number(const std::string& value, int line) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + value + "'", line);
    }
    while (used < value.size() && std::isspace(static_cast<unsigned char>(value[used]))) ++used;
    if (used != value.size())
        throw ConfigError("trailing characters after number '" + value + "'", line);
    return out;
}

bool parse_flag(const std::string& value, int line) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    throw ConfigError("expected on/off, got '" + value + "'", line);
}

// scenario defaults; geometry keys double as the per-scenario whitelist
void apply_scenario_defaults(ScenarioConfig& cfg) {
    auto g = [&](const char* key, double value) { cfg.geometry.emplace(key, value); };
    switch (cfg.scenario) {
        case ScenarioKind::hydrostatic:
            g("width", 1.0);
            g("depth", 1.0);
            g("wall_height", 1.4);
            cfg.h_fs = 0.05;
            cfg.h_max = 0.15;
            cfg.dt = 0.005;
            cfg.t_end = 0.25;
            cfg.phys.rho = 1000.0;
            cfg.phys.mu = 1.0e-3;
            break;
        case ScenarioKind::sloshing:
            g("container_length", 1.0);
            g("fluid_depth", 1.0);
            g("eta0", 0.01);
            g("wall_height", 1.2);
            cfg.h_fs = 0.025;
            cfg.h_max = 0.1;
            cfg.dt = 5e-4;
            cfg.t_end = 3.4;
            cfg.phys.rho = 1000.0;
            cfg.phys.mu = 0.0;
            cfg.eta_probe_x = 0.0;
            break;
        case ScenarioKind::vortex_box_bubble:
        case ScenarioKind::vortex_box_hole:
            g("disk_r", 0.15);
            g("disk_cx", 0.5);
            g("disk_cy", 0.75);
            g("period", 5.0);
            cfg.h_fs = 0.02;
            cfg.h_max = 0.08;
            cfg.dt = 0.01;
            cfg.t_end = 5.0;
            cfg.phys.gravity = {0.0, 0.0};
            break;
        case ScenarioKind::rising_bubble:
            g("domain_w", 1.0);
            g("domain_h", 2.0);
            g("bubble_cx", 0.5);
            g("bubble_cy", 0.5);
            g("bubble_r", 0.25);
            cfg.h_fs = 0.02;
            cfg.h_max = 0.08;
            cfg.dt = 0.0015;
            cfg.t_end = 3.0;
            cfg.phys.rho = 1000.0;
            cfg.phys.mu = 10.0;
            cfg.phys.rho_cavity = 100.0;
            cfg.phys.sigma_st = 24.5;
            cfg.phys.gravity = {0.0, -0.98};
            break;
        case ScenarioKind::falling_drop:
            g("bulk_width", 0.3);
            g("bulk_depth", 0.12);
            g("wall_height", 0.3);
            g("drop_d", 0.05);
            g("drop_cx", 0.15);
            g("drop_gap", 0.02);
            g("drop_speed", 1.172);  // v rho D / mu = 586 with the defaults
            cfg.h_fs = 0.008;
            cfg.h_max = 0.03;
            cfg.dt = 1e-3;
            cfg.t_end = 0.3;
            cfg.phys.rho = 1000.0;
            cfg.phys.mu = 0.1;
            break;
        case ScenarioKind::dam_break_dry:
        case ScenarioKind::dam_break_wet:
            g("tank_length", 1.61);
            g("column_width", 0.6);
            g("column_height", 0.6);
            g("wall_height", 0.8);
            if (cfg.scenario == ScenarioKind::dam_break_wet) g("layer_depth", 0.05);
            cfg.h_fs = 0.015;
            cfg.h_max = 0.05;
            cfg.dt = 1e-3;
            cfg.t_end = 1.8;
            cfg.phys.rho = 1000.0;
            cfg.phys.mu = 855e-6;
            break;
    }
}

struct RawLine {
    std::string key;
    std::string value;
    int line;
};

std::vector<RawLine> tokenize(const std::string& text) {
    std::vector<RawLine> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", lineno);
        out.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
    }
    return out;
}

} // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    const auto lines = tokenize(text);

    // the scenario decides the defaults and the geometry whitelist
    ScenarioConfig cfg;
    bool have_scenario = false;
    for (const RawLine& rl : lines) {
        if (rl.key != "scenario") continue;
        const auto k = scenario_from(rl.value);
        if (!k) throw ConfigError("unknown scenario '" + rl.value + "'", rl.line);
        cfg.scenario = *k;
        have_scenario = true;
    }
    if (!have_scenario) throw ConfigError("missing required key 'scenario'");
    apply_scenario_defaults(cfg);

    for (const RawLine& rl : lines) {
        const std::string& k = rl.key;
        const std::string& v = rl.value;
        if (k == "scenario") continue;
        if (k == "h_fs") cfg.h_fs = parse_number(v, rl.line);
        else if (k == "h_max") cfg.h_max = parse_number(v, rl.line);
        else if (k == "gradation") cfg.gradation = parse_number(v, rl.line);
        else if (k == "alpha_threshold") cfg.alpha_threshold = parse_number(v, rl.line);
        else if (k == "dt") cfg.dt = parse_number(v, rl.line);
        else if (k == "t_end") cfg.t_end = parse_number(v, rl.line);
        else if (k == "cfl_policy") {
            if (v == "error") cfg.cfl_policy = CflPolicy::error;
            else if (v == "clamp") cfg.cfl_policy = CflPolicy::clamp;
            else throw ConfigError("cfl_policy must be error or clamp", rl.line);
        } else if (k == "out_dir") cfg.out_dir = v;
        else if (k == "output_every") cfg.output_every = static_cast<int>(parse_number(v, rl.line));
        else if (k == "adapt") cfg.adapt_enabled = parse_flag(v, rl.line);
        else if (k == "write_meshes") cfg.write_meshes = parse_flag(v, rl.line);
        else if (k == "rho") cfg.phys.rho = parse_number(v, rl.line);
        else if (k == "mu") cfg.phys.mu = parse_number(v, rl.line);
        else if (k == "gravity_x") cfg.phys.gravity.x = parse_number(v, rl.line);
        else if (k == "gravity_y") cfg.phys.gravity.y = parse_number(v, rl.line);
        else if (k == "sigma") cfg.phys.sigma_st = parse_number(v, rl.line);
        else if (k == "rho_cavity") cfg.phys.rho_cavity = parse_number(v, rl.line);
        else if (k == "p_ext") cfg.phys.p_ext = parse_number(v, rl.line);
        else if (k == "surface_tension_external")
            cfg.phys.surface_tension_external = parse_flag(v, rl.line);
        else if (k == "wall_no_slip") cfg.phys.wall_no_slip = parse_flag(v, rl.line);
        else if (k == "gamma_min") cfg.refine.gamma_min = parse_number(v, rl.line);
        else if (k == "size_ratio") cfg.refine.size_ratio = parse_number(v, rl.line);
        else if (k == "collapse_ratio") cfg.refine.collapse_ratio = parse_number(v, rl.line);
        else if (k == "r_min_exempt") cfg.refine.r_min_exempt = parse_number(v, rl.line);
        else if (k == "eta_probe_x") cfg.eta_probe_x = parse_number(v, rl.line);
        else if (k == "sweep_beta") cfg.sweep_beta = parse_number(v, rl.line);
        else if (k == "probe") {
            std::istringstream ps(v);
            Probe pr;
            if (!(ps >> pr.name >> pr.location.x >> pr.location.y))
                throw ConfigError("probe expects '<name> <x> <y>'", rl.line);
            std::string rest;
            if (ps >> rest) throw ConfigError("probe expects '<name> <x> <y>'", rl.line);
            cfg.probes.push_back(pr);
        } else if (cfg.geometry.count(k)) {
            cfg.geometry[k] = parse_number(v, rl.line);
        } else {
            throw ConfigError("unknown key '" + k + "'", rl.line);
        }
    }

    if (cfg.scenario == ScenarioKind::vortex_box_bubble ||
        cfg.scenario == ScenarioKind::vortex_box_hole)
        cfg.vortex_period = cfg.geom("period");

    // validation
    if (!(cfg.h_fs > 0) || !(cfg.h_max >= cfg.h_fs))
        throw ConfigError("size field requires 0 < h_fs <= h_max");
    if (!(cfg.dt > 0) || !(cfg.t_end > 0)) throw ConfigError("dt and t_end must be positive");
    if (!(cfg.alpha_threshold > 1.0)) throw ConfigError("alpha_threshold must exceed 1");
    if (cfg.output_every < 1) throw ConfigError("output_every must be >= 1");
    cfg.refine.alpha_band = cfg.alpha_threshold;
    if (cfg.probes.empty()) {
        if (cfg.scenario == ScenarioKind::hydrostatic)
            cfg.probes.push_back({"bottom", {cfg.geom("width") / 2.0, 0.0}});
        if (cfg.scenario == ScenarioKind::dam_break_dry ||
            cfg.scenario == ScenarioKind::dam_break_wet) {
            const double L = cfg.geom("tank_length");
            cfg.probes.push_back({"p03", {L, 0.03}});
            cfg.probes.push_back({"p08", {L, 0.08}});
        }
    }
    for (const auto& [key, value] : cfg.geometry)
        if (!(value > 0) && key != "layer_depth" && !(key == "drop_gap" && value >= 0))
            throw ConfigError("geometry value '" + key + "' must be positive");
    return cfg;
}

ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_echo(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "scenario = " << to_string(cfg.scenario) << "\n";
    os << "h_fs = " << cfg.h_fs << "\n";
    os << "h_max = " << cfg.h_max << "\n";
    os << "gradation = " << cfg.gradation << "\n";
    os << "alpha_threshold = " << cfg.alpha_threshold << "\n";
    os << "dt = " << cfg.dt << "\n";
    os << "t_end = " << cfg.t_end << "\n";
    os << "cfl_policy = " << to_string(cfg.cfl_policy) << "\n";
    os << "out_dir = " << cfg.out_dir << "\n";
    os << "output_every = " << cfg.output_every << "\n";
    os << "adapt = " << (cfg.adapt_enabled ? "on" : "off") << "\n";
    os << "write_meshes = " << (cfg.write_meshes ? "on" : "off") << "\n";
    os << "rho = " << cfg.phys.rho << "\n";
    os << "mu = " << cfg.phys.mu << "\n";
    os << "gravity_x = " << cfg.phys.gravity.x << "\n";
    os << "gravity_y = " << cfg.phys.gravity.y << "\n";
    os << "sigma = " << cfg.phys.sigma_st << "\n";
    os << "rho_cavity = " << cfg.phys.rho_cavity << "\n";
    os << "p_ext = " << cfg.phys.p_ext << "\n";
    os << "surface_tension_external = " << (cfg.phys.surface_tension_external ? "on" : "off")
       << "\n";
    os << "wall_no_slip = " << (cfg.phys.wall_no_slip ? "on" : "off") << "\n";
    os << "gamma_min = " << cfg.refine.gamma_min << "\n";
    os << "size_ratio = " << cfg.refine.size_ratio << "\n";
    os << "collapse_ratio = " << cfg.refine.collapse_ratio << "\n";
    os << "r_min_exempt = " << cfg.refine.r_min_exempt << "\n";
    os << "eta_probe_x = " << cfg.eta_probe_x << "\n";
    os << "sweep_beta = " << cfg.sweep_beta << "\n";
    for (const auto& [key, value] : cfg.geometry) os << key << " = " << value << "\n";
    for (const Probe& p : cfg.probes)
        os << "probe = " << p.name << ' ' << p.location.x << ' ' << p.location.y << "\n";
    return os.str();
}

} // namespace pfem
