#pragma once
// Run configuration: one JSON document, unknown keys rejected. Every field
// has a default, so "{}" is a valid config.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "io.hpp"
#include "simulation.hpp"

namespace vnl {

inline const std::vector<std::string>& known_suites() {
    static const std::vector<std::string> s{"geometry", "symmetries", "weights", "transport", "energies", "ks",
                                            "charge",   "floor",      "residuals", "decay"};
    return s;
}

struct DecayConfig {
    std::string source = "dipole";  // dipole | coulomb | checkpoints
    std::vector<std::string> checkpoints;  // files or directories
    std::vector<RaySpec> rays;             // empty: built-in rays for the source
    int min_points = 8;
    double min_decades = 1.5;
};

struct RunConfig {
    std::string scenario = "neutral-pair";  // neutral-pair | zero | custom
    unsigned seed = 2024;
    bool quick = false;
    std::vector<std::string> suites{"all"};
    std::string out = "vnl-out";
    bool allow_nonneutral = false;

    int cells = 48;
    double half_width = 28.0;
    double dt = 0.0;
    double cfl_safety = 0.5;
    double horizon = 20.0;
    int diag_stride = 1;
    int checkpoint_stride = 20;  // 0 writes only the first and last state

    double eps = 1e-4;         // model-field size for the velocity-floor study
    double amplitude = 1e-3;   // neutral-pair amplitude
    DensitySpec density;       // used when scenario == custom (components) and for quadrature settings

    DecayConfig decay;

    // Expanded suite list; "all" maps to every suite.
    std::vector<std::string> suite_list() const {
        std::vector<std::string> out;
        for (const auto& s : suites) {
            if (s == "all") return known_suites();
            out.push_back(s);
        }
        return out;
    }

    SimulationConfig simulation() const {
        SimulationConfig c;
        c.cells = cells;
        c.half_width = half_width;
        c.dt = dt;
        c.cfl_safety = cfl_safety;
        c.horizon = horizon;
        c.diag_stride = diag_stride;
        c.density = density;
        c.density.allow_nonneutral = allow_nonneutral;
        c.poisson.allow_nonneutral = allow_nonneutral;
        if (scenario == "neutral-pair") {
            const auto pair = default_neutral_density();
            c.density.components = pair.components;
            for (auto& comp : c.density.components) comp.amplitude = comp.amplitude > 0 ? amplitude : -amplitude;
        } else if (scenario == "zero") {
            c.density.components.clear();
        }
        return c;
    }
};

namespace detail {

// Pulls keys out of one JSON object and reports whatever is left over.
class StrictObject {
public:
    StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }
    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    std::string path(const char* key) const { return where_ + "." + key; }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown key '" + where_ + "." + k + "'");
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

inline Vec3 vec3_of(const std::array<double, 3>& a) { return {{a[0], a[1], a[2]}}; }

inline DensityComponent parse_component(const json& j, const std::string& where) {
    StrictObject o(j, where);
    DensityComponent c;
    std::array<double, 3> xc = c.x_center.c, xw = c.x_width.c, tilt = c.v_tilt.c;
    o.get("amplitude", c.amplitude);
    o.get("x_center", xc);
    o.get("x_width", xw);
    o.get("v_shell", c.v_shell);
    o.get("v_width", c.v_width);
    o.get("v_tilt", tilt);
    o.finish();
    c.x_center = vec3_of(xc);
    c.x_width = vec3_of(xw);
    c.v_tilt = vec3_of(tilt);
    for (double w : c.x_width.c)
        if (!(w > 0.0)) throw ConfigError(where + ".x_width must be positive");
    if (!(c.v_width > 0.0) || !(c.v_shell > 0.0)) throw ConfigError(where + ": v_shell and v_width must be positive");
    return c;
}

inline RaySpec parse_ray(const json& j, const std::string& where) {
    StrictObject o(j, where);
    RaySpec r;
    std::array<double, 3> d = r.direction.c;
    o.get("u", r.u);
    o.get("direction", d);
    o.get("r_min", r.r_min);
    o.get("r_max", r.r_max);
    o.get("samples", r.samples);
    o.finish();
    r.direction = vec3_of(d);
    if (!(norm(r.direction) > 0.0)) throw ConfigError(where + ".direction must be nonzero");
    if (!(r.r_min > 0.0) || !(r.r_max > r.r_min) || r.samples < 2) throw ConfigError(where + ": need 0 < r_min < r_max, samples >= 2");
    return r;
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
    detail::StrictObject o(j, "config");
    RunConfig c;
    o.get("scenario", c.scenario);
    o.get("seed", c.seed);
    o.get("quick", c.quick);
    o.get("suites", c.suites);
    o.get("out", c.out);
    o.get("allow_nonneutral", c.allow_nonneutral);
    o.get("dt", c.dt);
    o.get("cfl_safety", c.cfl_safety);
    o.get("horizon", c.horizon);
    o.get("diag_stride", c.diag_stride);
    o.get("checkpoint_stride", c.checkpoint_stride);
    o.get("eps", c.eps);
    if (const json* g = o.child("grid")) {
        detail::StrictObject go(*g, o.path("grid"));
        go.get("cells", c.cells);
        go.get("half_width", c.half_width);
        go.finish();
    }
    if (const json* d = o.child("data")) {
        detail::StrictObject dd(*d, o.path("data"));
        dd.get("amplitude", c.amplitude);
        dd.get("v_min", c.density.v_min);
        dd.get("v_ramp", c.density.v_ramp);
        dd.get("x_nodes", c.density.x_nodes);
        dd.get("x_extent", c.density.x_extent);
        dd.get("v_radial", c.density.v_radial);
        dd.get("v_degree", c.density.v_degree);
        dd.get("v_extent", c.density.v_extent);
        if (const json* comps = dd.child("components")) {
            if (!comps->is_array()) throw ConfigError("config.data.components: expected an array");
            for (std::size_t k = 0; k < comps->size(); ++k)
                c.density.components.push_back(
                    detail::parse_component((*comps)[k], "config.data.components[" + std::to_string(k) + "]"));
        }
        dd.finish();
    }
    if (const json* d = o.child("decay")) {
        detail::StrictObject dd(*d, o.path("decay"));
        dd.get("source", c.decay.source);
        if (const json* cp = dd.child("checkpoints")) {
            if (cp->is_string()) c.decay.checkpoints = {cp->get<std::string>()};
            else {
                try {
                    c.decay.checkpoints = cp->get<std::vector<std::string>>();
                } catch (const json::exception& e) {
                    throw ConfigError(std::string("config.decay.checkpoints: ") + e.what());
                }
            }
        }
        if (const json* rays = dd.child("rays")) {
            if (!rays->is_array()) throw ConfigError("config.decay.rays: expected an array");
            for (std::size_t k = 0; k < rays->size(); ++k)
                c.decay.rays.push_back(detail::parse_ray((*rays)[k], "config.decay.rays[" + std::to_string(k) + "]"));
        }
        dd.get("min_points", c.decay.min_points);
        dd.get("min_decades", c.decay.min_decades);
        dd.finish();
    }
    o.finish();

    if (c.scenario != "neutral-pair" && c.scenario != "zero" && c.scenario != "custom")
        throw ConfigError("config.scenario must be one of neutral-pair, zero, custom (got '" + c.scenario + "')");
    if (c.scenario == "custom" && c.density.components.empty())
        throw ConfigError("config.scenario custom needs config.data.components");
    if (c.scenario != "custom" && !c.density.components.empty())
        throw ConfigError("config.data.components only applies to scenario custom");
    for (const auto& s : c.suites)
        if (s != "all" && std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
            throw ConfigError("unknown suite '" + s + "'");
    if (c.decay.source != "dipole" && c.decay.source != "coulomb" && c.decay.source != "checkpoints")
        throw ConfigError("config.decay.source must be dipole, coulomb or checkpoints");
    if (c.decay.source == "checkpoints" && c.decay.checkpoints.empty())
        throw ConfigError("config.decay.source checkpoints needs config.decay.checkpoints");
    if (c.cells < 4) throw ConfigError("config.grid.cells must be >= 4");
    if (!(c.half_width > 0.0)) throw ConfigError("config.grid.half_width must be positive");
    if (!(c.horizon >= 0.0) || c.dt < 0.0 || !(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0))
        throw ConfigError("need horizon >= 0, dt >= 0 and 0 < cfl_safety <= 1");
    if (c.diag_stride < 1 || c.checkpoint_stride < 0) throw ConfigError("diag_stride >= 1 and checkpoint_stride >= 0");
    if (!(c.eps > 0.0)) throw ConfigError("config.eps must be positive");
    if (c.decay.min_points < 3 || !(c.decay.min_decades > 0.0)) throw ConfigError("config.decay: min_points >= 3, min_decades > 0");
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& p) { return parse_run_config(read_json(p)); }

// Effective configuration, written into every report.
inline json to_json(const RunConfig& c) {
    json comps = json::array();
    for (const auto& k : c.density.components)
        comps.push_back({{"amplitude", k.amplitude},
                         {"x_center", k.x_center.c},
                         {"x_width", k.x_width.c},
                         {"v_shell", k.v_shell},
                         {"v_width", k.v_width},
                         {"v_tilt", k.v_tilt.c}});
    json rays = json::array();
    for (const auto& r : c.decay.rays)
        rays.push_back({{"u", r.u}, {"direction", r.direction.c}, {"r_min", r.r_min}, {"r_max", r.r_max}, {"samples", r.samples}});
    json data{{"amplitude", c.amplitude},       {"v_min", c.density.v_min},       {"v_ramp", c.density.v_ramp},
              {"x_nodes", c.density.x_nodes},   {"x_extent", c.density.x_extent}, {"v_radial", c.density.v_radial},
              {"v_degree", c.density.v_degree}, {"v_extent", c.density.v_extent}};
    if (!comps.empty()) data["components"] = comps;
    return {{"scenario", c.scenario},
            {"seed", c.seed},
            {"quick", c.quick},
            {"suites", c.suites},
            {"out", c.out},
            {"allow_nonneutral", c.allow_nonneutral},
            {"dt", c.dt},
            {"cfl_safety", c.cfl_safety},
            {"horizon", c.horizon},
            {"diag_stride", c.diag_stride},
            {"checkpoint_stride", c.checkpoint_stride},
            {"eps", c.eps},
            {"grid", {{"cells", c.cells}, {"half_width", c.half_width}}},
            {"data", data},
            {"decay",
             {{"source", c.decay.source},
              {"checkpoints", c.decay.checkpoints},
              {"rays", rays},
              {"min_points", c.decay.min_points},
              {"min_decades", c.decay.min_decades}}}};
}

}  // namespace vnl
