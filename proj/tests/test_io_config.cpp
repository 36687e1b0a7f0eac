#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "vnl/config.hpp"
#include "vnl/io.hpp"

using namespace vnl;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "vnl_unit";
    fs::create_directories(d);
    return d / name;
}
}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
    const RunConfig c = parse_run_config(json::object());
    EXPECT_EQ(c.scenario, "neutral-pair");
    EXPECT_EQ(c.cells, 48);
    EXPECT_EQ(c.suite_list().size(), known_suites().size());
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
    EXPECT_THROW(parse_run_config(json::parse(R"({"cels": 4})")), ConfigError);
    EXPECT_THROW(parse_run_config(json::parse(R"({"grid": {"cells": 8, "h": 1}})")), ConfigError);
    EXPECT_THROW(parse_run_config(json::parse(R"({"decay": {"rays": [{"u": 0, "dir": [1,0,0]}]}})")), ConfigError);
    EXPECT_THROW(parse_run_config(json::parse(R"({"grid": 3})")), ConfigError);
}

TEST(Config, ValueChecks) {
    EXPECT_THROW(parse_run_config(json::parse(R"({"suites": ["nope"]})")), ConfigError);
    EXPECT_THROW(parse_run_config(json::parse(R"({"scenario": "custom"})")), ConfigError);
    EXPECT_THROW(parse_run_config(json::parse(R"({"cfl_safety": 1.5})")), ConfigError);
    EXPECT_THROW(parse_run_config(json::parse(R"({"seed": "x"})")), ConfigError);
    EXPECT_THROW(parse_run_config(json::parse(R"({"decay": {"source": "checkpoints"}})")), ConfigError);
}

TEST(Config, JsonRoundTrip) {
    const json in = json::parse(R"({"scenario": "custom", "grid": {"cells": 16, "half_width": 9},
        "data": {"components": [{"amplitude": 1, "x_center": [1, 0, 0]}, {"amplitude": -1, "x_center": [-1, 0, 0]}]},
        "decay": {"source": "coulomb", "rays": [{"u": 1, "direction": [0, 1, 0], "r_min": 5, "r_max": 500}]}})");
    const RunConfig a = parse_run_config(in);
    const json out = to_json(a);
    const RunConfig b = parse_run_config(out);
    EXPECT_EQ(to_json(b), out);
    EXPECT_EQ(b.density.components.size(), 2u);
    EXPECT_EQ(b.decay.rays.size(), 1u);
    EXPECT_EQ(config_hash(out), config_hash(to_json(b)));
}

TEST(Config, SimulationScenarios) {
    RunConfig c;
    c.amplitude = 0.5;
    const auto s = c.simulation();
    ASSERT_EQ(s.density.components.size(), 2u);
    EXPECT_EQ(s.density.components[0].amplitude + s.density.components[1].amplitude, 0.0);
    c.scenario = "zero";
    EXPECT_TRUE(c.simulation().density.components.empty());
}

TEST(Hash, StableAndSensitive) {
    EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
    EXPECT_EQ(config_hash(json::parse(R"({"a":1,"b":2})")), config_hash(json::parse(R"({"b":2,"a":1})")));
    EXPECT_NE(config_hash(json::parse(R"({"a":1})")), config_hash(json::parse(R"({"a":2})")));
}

TEST(Csv, FullPrecision) {
    EXPECT_EQ(CsvWriter::format(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(CsvWriter::format(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Checkpoint, FieldRoundTrip) {
    const GridGeometry g = GridGeometry::centered(5, 2.5);
    FieldGrid f(g);
    f.time = 1.25;
    for (int c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < f.E[c].size(); ++k) {
            f.E[c].data()[k] = 0.1 * c + 1e-3 * k;
            f.B[c].data()[k] = -0.2 * c + 1e-4 * k;
        }
    const auto p = scratch("field.vnlf");
    write_field_checkpoint(p, f);
    const FieldGrid r = read_field_checkpoint(p);
    EXPECT_EQ(r.geom, g);
    EXPECT_EQ(r.time, 1.25);
    for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(r.E[c].data(), f.E[c].data());
        EXPECT_EQ(r.B[c].data(), f.B[c].data());
    }
}

TEST(Checkpoint, EnsembleRoundTrip) {
    Ensemble e;
    e.time = 3.0;
    e.particles = {{{{1, 2, 3}}, {{4, 5, 6}}, 0.5, -2.0}, {{{-1, 0, 1}}, {{0, 0, 1}}, 0.25, 1.0}};
    const auto p = scratch("parts.vnlp");
    write_ensemble_checkpoint(p, e);
    const Ensemble r = read_ensemble_checkpoint(p);
    ASSERT_EQ(r.particles.size(), 2u);
    EXPECT_EQ(r.time, 3.0);
    EXPECT_EQ(r.particles[0].V[2], 6.0);
    EXPECT_EQ(r.particles[1].f0, 1.0);
}

TEST(Checkpoint, BadFilesAreConfigErrors) {
    const auto empty = scratch("empty.vnlf");
    std::ofstream(empty).close();
    EXPECT_THROW(read_field_checkpoint(empty), ConfigError);
    EXPECT_THROW(read_field_checkpoint(scratch("missing.vnlf")), ConfigError);
    const auto junk = scratch("junk.vnlf");
    std::ofstream(junk) << "VNLFIELD garbage";
    EXPECT_THROW(read_field_checkpoint(junk), ConfigError);

    FieldGrid f(GridGeometry::centered(4, 1.0));
    const auto cut = scratch("cut.vnlf");
    write_field_checkpoint(cut, f);
    fs::resize_file(cut, fs::file_size(cut) - 8);
    EXPECT_THROW(read_field_checkpoint(cut), ConfigError);
}

TEST(Svg, ContainsPointsAndTitle) {
    SvgSeries s;
    s.x = {1, 10, 100};
    s.y = {1, 0.1, 0.01};
    s.slope = -1.0;
    s.intercept = 0.0;
    s.title = "rho <ray>";
    const std::string svg = loglog_svg(s);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("rho &lt;ray&gt;"), std::string::npos);
    EXPECT_EQ(svg, loglog_svg(s));
}
