// vnl: verification suites, PIC runs, decay fits and report aggregation.
//
// Exit codes: 0 pass, 1 assertion failure, 2 configuration error,
// 3 internal error. Reports are written even when a run stops early.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vnl/config.hpp"
#include "vnl/criteria.hpp"
#include "vnl/io.hpp"
#include "vnl/simulation.hpp"

namespace fs = std::filesystem;
using vnl::json;

namespace {

enum Exit : int { kPass = 0, kFail = 1, kConfig = 2, kInternal = 3 };

struct CommonFlags {
    std::string config;
    std::vector<std::string> suites;
    bool quick = false;
    std::string out;
    std::optional<unsigned> seed;
    bool allow_nonneutral = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON run configuration");
    cmd->add_option("--suite", f.suites, "suite name (repeatable)");
    cmd->add_flag("--quick", f.quick, "reduced sample counts");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_flag("--allow-nonneutral", f.allow_nonneutral, "waive the zero-total-charge requirement");
}

vnl::RunConfig resolve(const CommonFlags& f) {
    vnl::RunConfig c = f.config.empty() ? vnl::parse_run_config(json::object()) : vnl::load_run_config(f.config);
    if (!f.suites.empty()) {
        for (const auto& s : f.suites)
            if (s != "all" && std::find(vnl::known_suites().begin(), vnl::known_suites().end(), s) == vnl::known_suites().end())
                throw vnl::ConfigError("unknown suite '" + s + "'");
        c.suites = f.suites;
    }
    if (f.quick) c.quick = true;
    if (!f.out.empty()) c.out = f.out;
    if (f.seed) c.seed = *f.seed;
    if (f.allow_nonneutral) c.allow_nonneutral = true;
    return c;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Deterministic report body plus a metadata block for everything that varies run to run.
class Report {
public:
    Report(std::string command, const vnl::RunConfig& cfg, fs::path path) : path_(std::move(path)) {
        json c = vnl::to_json(cfg);
        const std::string out = c["out"];
        c.erase("out");  // where results go does not change what they are
        const std::string hash = vnl::config_hash(c);
        c["out"] = out;
        body_ = {{"command", std::move(command)},
                 {"version", vnl::code_version()},
                 {"config", c},
                 {"config_hash", hash},
                 {"tolerances", json::object()},
                 {"status", "running"}};
        meta_ = {{"started_utc", utc_now()}, {"threads", vnl::thread_budget()}};
        t0_ = std::chrono::steady_clock::now();
    }
    json& body() { return body_; }
    json& meta() { return meta_; }
    void finish(const std::string& status, int code) {
        body_["status"] = status;
        body_["exit_code"] = code;
        meta_["finished_utc"] = utc_now();
        meta_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        flush();
    }
    void flush() const { vnl::write_json(path_, {{"report", body_}, {"metadata", meta_}}); }

private:
    fs::path path_;
    json body_, meta_;
    std::chrono::steady_clock::time_point t0_;
};

// Records the failure in the report before the exit code is decided upstream.
template <class Body>
int guarded(Report& rep, Body&& body) {
    try {
        return body();
    } catch (const vnl::ConfigError& e) {
        rep.body()["error"] = e.what();
        rep.finish("config-error", kConfig);
        throw;
    } catch (const std::exception& e) {
        rep.body()["error"] = e.what();
        rep.finish("internal-error", kInternal);
        throw;
    }
}

// ---------------------------------------------------------------------------

int cmd_verify(const vnl::RunConfig& cfg) {
    Report rep("verify", cfg, fs::path(cfg.out) / "verify.json");
    const auto suites = cfg.suite_list();
    rep.body()["suites"] = suites;
    rep.body()["criteria"] = json::array();
    rep.meta()["runtimes"] = json::object();
    rep.flush();
    vnl::CriterionOptions opt{cfg.quick, cfg.seed};
    bool all_pass = true;
    for (const auto& e : vnl::criteria()) {
        if (std::find(suites.begin(), suites.end(), e.suite) == suites.end()) continue;
        std::cout << "suite " << e.suite << " ... " << std::flush;
        vnl::CriterionResult r;
        try {
            r = vnl::run_timed(e, opt);
        } catch (const vnl::ConfigError& ex) {
            rep.body()["criteria"].push_back({{"id", e.id}, {"suite", e.suite}, {"error", ex.what()}});
            std::cout << "config error: " << ex.what() << "\n";
            rep.finish("config-error", kConfig);
            return kConfig;
        } catch (const std::exception& ex) {
            rep.body()["criteria"].push_back({{"id", e.id}, {"suite", e.suite}, {"error", ex.what()}});
            std::cout << "internal error: " << ex.what() << "\n";
            rep.finish("internal-error", kInternal);
            return kInternal;
        }
        all_pass = all_pass && r.pass;
        rep.body()["criteria"].push_back(r.deterministic_json());
        rep.body()["tolerances"][e.suite] = r.tolerances;
        rep.meta()["runtimes"][e.suite] = {{"seconds", r.runtime}, {"budget", r.budget}, {"within_budget", r.within_budget()}};
        rep.flush();
        std::cout << (r.pass ? "pass" : "FAIL") << " (" << std::fixed << std::setprecision(1) << r.runtime << " s)\n";
    }
    rep.body()["pass"] = all_pass;
    rep.finish(all_pass ? "pass" : "fail", all_pass ? kPass : kFail);
    return all_pass ? kPass : kFail;
}

// ---------------------------------------------------------------------------

int run_simulate(const vnl::RunConfig& cfg, Report& rep) {
    const fs::path out(cfg.out);
    vnl::SimulationConfig sc = cfg.simulation();
    rep.body()["waivers"] = cfg.allow_nonneutral ? json::array({"allow-nonneutral"}) : json::array();
    rep.body()["tolerances"] = {{"charge_drift", vnl::tol::charge_drift}, {"deposition_relative", vnl::tol::deposition}};
    vnl::validate(sc);  // CFL and domain refusals happen before anything runs
    rep.flush();

    vnl::CsvWriter csv(out / "series.csv",
                       {"step", "time", "ensemble_charge", "deposited_charge", "enclosed_charge", "gauss_max", "gauss_l2",
                        "div_B_max", "field_energy", "vlasov_spatial_energy", "outside"});
    const json cj = vnl::to_json(cfg);
    const std::string spec_hash = vnl::config_hash({{"scenario", cj["scenario"]}, {"data", cj["data"]}});
    json checkpoints = json::array();
    auto write_checkpoint = [&](int step, const vnl::FieldGrid& f, const vnl::Ensemble& ens) {
        char name[64];
        std::snprintf(name, sizeof name, "field_%06d.vnlf", step);
        vnl::write_field_checkpoint(out / "checkpoints" / name, f);
        std::string fname = name;
        std::snprintf(name, sizeof name, "ensemble_%06d.vnlp", step);
        vnl::write_ensemble_checkpoint(out / "checkpoints" / name, ens, spec_hash);
        checkpoints.push_back({{"step", step}, {"time", f.time}, {"field", "checkpoints/" + fname}, {"ensemble", std::string("checkpoints/") + name}});
    };
    int last_written = -1;
    auto on_sample = [&](int step, const vnl::SimulationSample& s, const vnl::FieldGrid& f, const vnl::Ensemble& ens) {
        csv.row({double(step), s.time, s.ensemble_charge, s.deposited_charge, s.enclosed_charge, s.gauss_max, s.gauss_l2,
                 s.div_B_max, s.field_energy, s.ensemble_l1, double(s.outside)});
        if (step == 0 || (cfg.checkpoint_stride > 0 && step % cfg.checkpoint_stride == 0)) {
            write_checkpoint(step, f, ens);
            last_written = step;
        }
    };
    vnl::SimulationResult res;
    try {
        res = vnl::run_simulation(sc, on_sample);
    } catch (...) {
        rep.body()["checkpoints"] = checkpoints;  // partial output stays discoverable
        throw;
    }
    if (last_written != res.steps) write_checkpoint(res.steps, res.final_field, res.final_ensemble);
    const double l1 = res.series.empty() ? 0.0 : res.series.front().ensemble_l1;
    const double dep_tol = vnl::tol::deposition * std::max(1.0, l1);
    const bool ok = res.charge_drift() <= vnl::tol::charge_drift && res.deposition_gap() <= dep_tol;
    rep.body()["checkpoints"] = checkpoints;
    rep.body()["summary"] = {{"dt", res.dt},
                             {"h", res.h},
                             {"steps", res.steps},
                             {"particles", res.particles},
                             {"initial_charge", res.series.empty() ? 0.0 : res.series.front().ensemble_charge},
                             {"initial_l1", l1},
                             {"charge_drift", res.charge_drift()},
                             {"deposition_gap", res.deposition_gap()},
                             {"final_field_energy", res.series.empty() ? 0.0 : res.series.back().field_energy}};
    rep.body()["tolerances"]["deposition"] = dep_tol;
    rep.body()["pass"] = ok;
    rep.finish(ok ? "pass" : "fail", ok ? kPass : kFail);
    std::cout << "simulate: " << res.steps << " steps, charge drift " << res.charge_drift() << ", deposition gap "
              << res.deposition_gap() << (ok ? " (pass)\n" : " (FAIL)\n");
    return ok ? kPass : kFail;
}

int cmd_simulate(const vnl::RunConfig& cfg) {
    Report rep("simulate", cfg, fs::path(cfg.out) / "simulate.json");
    return guarded(rep, [&] { return run_simulate(cfg, rep); });
}

// ---------------------------------------------------------------------------

std::vector<vnl::RaySpec> default_rays() {
    std::vector<vnl::RaySpec> rays{vnl::detail::reference_ray()};
    vnl::RaySpec b = rays[0];
    b.u = -2.0;
    b.direction = {{-0.3, 1.0, 0.1}};
    rays.push_back(b);
    vnl::RaySpec c = rays[0];
    c.u = 3.0;
    c.direction = {{0.2, -0.4, -1.0}};
    rays.push_back(c);
    return rays;
}

std::vector<fs::path> expand_checkpoints(const std::vector<std::string>& items) {
    std::vector<fs::path> files;
    for (const auto& it : items) {
        const fs::path p(it);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p))
                if (e.path().extension() == ".vnlf") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::exists(p)) {
            files.push_back(p);
        } else {
            throw vnl::ConfigError("checkpoint not found: " + it);
        }
    }
    if (files.empty()) throw vnl::ConfigError("empty checkpoint set");
    return files;
}

int run_decay_fit(const vnl::RunConfig& cfg, Report& rep) {
    const fs::path out(cfg.out);
    const auto& dc = cfg.decay;
    const auto rays = dc.rays.empty() ? default_rays() : dc.rays;
    std::vector<vnl::DecayExpectation> expect = vnl::dipole_expectations();
    if (dc.source == "coulomb") expect = {{vnl::NullComponent::rho, -2.0, vnl::tol::slope_coulomb, false}};

    std::vector<vnl::FieldGrid> grids;
    if (dc.source == "checkpoints") {
        for (const auto& p : expand_checkpoints(dc.checkpoints)) grids.push_back(vnl::read_field_checkpoint(p));
        std::sort(grids.begin(), grids.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    }
    json tols = json::object();
    for (const auto& e : expect)
        tols[std::string(vnl::component_name(e.comp))] = {{"predicted", e.predicted}, {"tol", e.tol}, {"upper_bound_only", e.upper_only}};
    rep.body()["tolerances"] = tols;
    rep.body()["fits"] = json::array();

    // Checkpoint series: along u = const, one sample per stored time.
    auto fit_series = [&](const vnl::RaySpec& ray, const vnl::DecayExpectation& e) {
        vnl::DecayFitReport r;
        r.component = e.comp;
        r.predicted = e.predicted;
        r.tol = e.tol;
        r.upper_bound_only = e.upper_only;
        const vnl::Vec3 n = ray.direction / vnl::norm(ray.direction);
        r.ray = "u=" + std::to_string(ray.u) + " dir=(" + std::to_string(n[0]) + "," + std::to_string(n[1]) + "," +
                std::to_string(n[2]) + ")";
        for (const auto& g : grids) {
            const double rad = g.time - ray.u;
            if (rad < std::max(ray.r_min, 2.0 * g.geom.h) || rad > ray.r_max) continue;
            try {
                const vnl::Vec3 x = n * rad;
                r.r.push_back(rad);
                r.values.push_back(vnl::component_magnitude(vnl::null_decompose(g.sample(x), vnl::SpacetimePoint{g.time, x}), e.comp));
            } catch (const vnl::DomainError&) {
                r.r.pop_back();
            }
        }
        r.fit = vnl::fit_loglog(r.r, r.values, dc.min_points, dc.min_decades);
        r.pass = e.upper_only ? r.fit.slope <= e.predicted + e.tol : std::abs(r.fit.slope - e.predicted) <= e.tol;
        return r;
    };

    int errors = 0, fits = 0;
    bool all_pass = true;
    for (std::size_t k = 0; k < rays.size(); ++k) {
        bool ray_failed = true;
        for (const auto& e : expect) {
            const std::string stem = dc.source + "_ray" + std::to_string(k) + "_" + std::string(vnl::component_name(e.comp));
            try {
                vnl::DecayFitReport r;
                if (dc.source == "dipole") r = vnl::fit_decay_exponent(vnl::detail::reference_dipole(), rays[k], e.comp, e.predicted, e.tol, e.upper_only);
                else if (dc.source == "coulomb") r = vnl::fit_decay_exponent(vnl::CoulombExterior{}, rays[k], e.comp, e.predicted, e.tol, e.upper_only);
                else r = fit_series(rays[k], e);
                json j = vnl::decay_fit_json(r);
                j["svg"] = "decay/" + stem + ".svg";
                rep.body()["fits"].push_back(j);
                vnl::SvgSeries s{r.r, r.values, r.fit.slope, r.fit.intercept / std::log(10.0),
                                 stem + " (predicted " + std::to_string(e.predicted) + ")"};
                vnl::write_text(out / "decay" / (stem + ".svg"), vnl::loglog_svg(s));
                all_pass = all_pass && r.pass;
                ray_failed = false;
                ++fits;
            } catch (const vnl::DomainError& ex) {
                rep.body()["fits"].push_back({{"ray", k}, {"component", vnl::component_name(e.comp)}, {"error", ex.what()}});
            }
        }
        errors += ray_failed;
        rep.flush();
    }
    rep.body()["rays"] = rays.size();
    rep.body()["failed_rays"] = errors;
    const bool ok = errors < int(rays.size()) && all_pass;
    rep.body()["pass"] = ok;
    rep.finish(ok ? "pass" : "fail", ok ? kPass : kFail);
    std::cout << "decay-fit: " << fits << " fits, " << errors << " of " << rays.size() << " rays without a usable fit"
              << (ok ? " (pass)\n" : " (FAIL)\n");
    return ok ? kPass : kFail;
}

int cmd_decay_fit(const vnl::RunConfig& cfg) {
    Report rep("decay-fit", cfg, fs::path(cfg.out) / "decay_fit.json");
    return guarded(rep, [&] { return run_decay_fit(cfg, rep); });
}

// ---------------------------------------------------------------------------

int cmd_report(const vnl::RunConfig& cfg) {
    const fs::path out(cfg.out);
    json summary = json::object();
    std::string md = "# vnl summary\n\n| report | status | detail |\n|---|---|---|\n";
    bool any = false, all_pass = true;
    for (const char* name : {"verify", "simulate", "decay_fit"}) {
        const fs::path p = out / (std::string(name) + ".json");
        if (!fs::exists(p)) continue;
        any = true;
        const json r = vnl::read_json(p).at("report");
        const std::string status = r.value("status", "unknown");
        all_pass = all_pass && status == "pass";
        json entry{{"status", status}, {"config_hash", r.value("config_hash", "")}, {"version", r.value("version", "")}};
        std::string detail;
        if (r.contains("criteria"))
            for (const auto& c : r["criteria"]) {
                const bool ok = c.value("pass", false);
                entry["criteria"][c.value("suite", "?")] = c.contains("error") ? json("error") : json(ok ? "pass" : "fail");
                detail += c.value("suite", "?") + (c.contains("error") ? ":error " : ok ? ":pass " : ":FAIL ");
            }
        if (r.contains("summary")) detail = "charge drift " + vnl::CsvWriter::format(r["summary"].value("charge_drift", 0.0));
        if (r.contains("fits")) detail = std::to_string(r["fits"].size()) + " fits";
        summary[name] = entry;
        md += "| " + std::string(name) + " | " + status + " | " + detail + " |\n";
    }
    if (!any) throw vnl::ConfigError("no reports found in " + out.string());
    summary["pass"] = all_pass;
    vnl::write_json(out / "summary.json", summary);
    vnl::write_text(out / "summary.md", md);
    std::cout << md;
    return all_pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vnl: Vlasov-Maxwell verification toolkit"};
    app.set_version_flag("--version", vnl::code_version());
    app.require_subcommand(1);
    CommonFlags flags;
    auto* verify = app.add_subcommand("verify", "run verification suites");
    auto* simulate = app.add_subcommand("simulate", "particle-in-cell run with checkpoints and series");
    auto* decay = app.add_subcommand("decay-fit", "log-log decay fits with SVG plots");
    auto* report = app.add_subcommand("report", "aggregate reports found in --out");
    for (auto* c : {verify, simulate, decay, report}) add_common(c, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kPass : kConfig;
    }
    try {
        const vnl::RunConfig cfg = resolve(flags);
        if (verify->parsed()) return cmd_verify(cfg);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (decay->parsed()) return cmd_decay_fit(cfg);
        return cmd_report(cfg);
    } catch (const vnl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
