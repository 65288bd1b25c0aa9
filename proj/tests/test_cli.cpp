#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nhrch/cli.hpp"
#include "nhrch/scenario.hpp"

using namespace nhrch;
using namespace nhrch::cli;

namespace {

std::string fixture(const std::string& name) { return std::string(NHRCH_FIXTURES) + "/" + name; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int invoke(const std::string& command, const std::string& config, const std::string& out) {
    std::vector<std::string> args = {"nhrch", command, "--config", config, "--out", out};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("nhrch_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("shortest round-trip formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-300) == "-2.5e-300");
    for (double x : {1.0 / 3.0, M_PI, 1e-17, 123456.789}) {
        const std::string s = format_double(x);
        double back = 0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == x);
    }
}

TEST_CASE("trajectory CSV header") {
    Trajectory t;
    t.times = {0.0};
    t.states = {{Vec::Zero(3), Vec::Ones(3)}};
    t.energy = {1.5};
    t.constraint = {0.0};
    t.momentum = {Vec::Ones(2)};
    const ChartSpec c{{"x", "y", "theta"}, {false, false, true}};
    CHECK(trajectory_csv(t, c, {"x", "y"}) ==
          "t,q_x,q_y,q_theta,p_x,p_y,p_theta,H,constraint_resid,J_x,J_y\n0,0,0,0,1,1,1,1.5,0,1,1\n");
}

TEST_CASE("config validation") {
    using Json = nlohmann::json;
    CHECK_THROWS_AS(parse_config(Json{{"system", "knife_edge"}, {"gama", "heading"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(Json{{"system", "unicycle"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(Json{{"system", "knife_edge"}, {"mu", {1, 0}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(Json{{"system", "knife_edge"}, {"symmetry", {"z"}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(Json{{"system", {{"catalog", "knife_edge"}, {"params", {{"mass", "heavy"}}}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(Json{{"system", "knife_edge"}, {"gamma", "heading(c=)"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(Json{{"system", "knife_edge"}, {"initial", {{"q", {0, 0}}, {"p", {1, 0, 0}}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(Json{{"scenarios", {{{"name", "a"}, {"system", "knife_edge"}},
                                                     {{"name", "a"}, {"system", "knife_edge"}}}}}),
                    ConfigError);
    const auto ok = parse_config(Json{{"system", {{"catalog", "knife_edge"}, {"params", {{"mass", 2}}}}},
                                      {"initial", {{"q", {0, 0, 0}}, {"v", {1, 0, 0.5}}}}},
                                 Overrides{1e-3, 9});
    REQUIRE(ok.size() == 1);
    CHECK(ok[0].tolerance == 1e-3);
    CHECK(ok[0].seed == 9);
    CHECK(ok[0].initial->p[0] == 2.0);
}

TEST_CASE("free particle simulation has constant momentum columns") {
    const auto scenarios = parse_config(nlohmann::json::parse(slurp(fixture("free_particle_sim.json"))));
    const RunResult r = run_scenario(scenarios[0], Command::simulate);
    CHECK(r.pass);
    REQUIRE(r.artifacts.size() == 1);
    std::istringstream csv(r.artifacts[0].second);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,q_x,q_y,p_x,p_y,H,constraint_resid");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        CHECK(line.find(",1,-0.5,") != std::string::npos);
        ++rows;
    }
    CHECK(rows == 1001);
}

TEST_CASE("knife edge point and orbit reductions agree") {
    const auto scenarios = parse_config(nlohmann::json::parse(slurp(fixture("knife_reduce.json"))));
    const RunResult r = run_scenario(scenarios[0], Command::reduce);
    bool found = false;
    for (const auto& c : r.report["checks"])
        if (c["name"] == "point_orbit_agreement") {
            found = true;
            CHECK(c["residual"].get<double>() < 1e-10);
        }
    CHECK(found);
    CHECK(r.pass);
}

TEST_CASE("heading one-form passes hj-verify") {
    const auto scenarios = parse_config(nlohmann::json::parse(slurp(fixture("knife_hj.json"))));
    const RunResult r = run_scenario(scenarios[0], Command::hj_verify);
    CHECK(r.pass);
    for (const auto& c : r.report["checks"])
        if (c["name"] == "type1.base") CHECK(c["residual"].get<double>() < 1e-6);
}

TEST_CASE("every requested check appears exactly once") {
    const auto scenarios = parse_config(nlohmann::json::parse(slurp(fixture("knife_hj.json"))));
    const RunResult r = run_scenario(scenarios[0], Command::hj_verify);
    std::set<std::string> names;
    for (const auto& c : r.report["checks"]) CHECK(names.insert(c["name"].get<std::string>()).second);
    CHECK(names.size() == r.timings["seconds"].size());
}

TEST_CASE("exit codes over fixture configs") {
    struct Case {
        const char* command;
        const char* file;
        int code;
    };
    const Case cases[] = {
        {"hj-verify", "knife_hj.json", 0},
        {"hj-verify", "knife_hj_perturbed.json", 1},
        {"reduce", "knife_reduce.json", 0},
        {"simulate", "free_particle_sim.json", 0},
        {"check", "catalog_check.json", 0},
        {"check", "bad_unknown_key.json", 2},
        {"check", "bad_system.json", 2},
        {"simulate", "bad_initial.json", 2},
        {"reduce", "sleigh_reduce.json", 2},
        {"check", "missing_file.json", 2},
        {"reduce", "free_particle_sim.json", 2},
        {"simulate", "knife_hj.json", 2},
    };
    for (const auto& c : cases) {
        CAPTURE(c.file);
        CAPTURE(c.command);
        CHECK(invoke(c.command, fixture(c.file), scratch("exit").string()) == c.code);
    }
}

TEST_CASE("identical configs produce byte-identical outputs") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    for (const auto& dir : {a, b}) {
        CHECK(invoke("simulate", fixture("knife_sim.json"), dir.string()) == 0);
        CHECK(invoke("check", fixture("catalog_check.json"), dir.string()) == 0);
    }
    std::size_t compared = 0;
    for (const auto& entry : std::filesystem::directory_iterator(a)) {
        const auto name = entry.path().filename().string();
        if (name.find("timings") != std::string::npos) continue;
        CHECK(slurp(entry.path()) == slurp(b / name));
        ++compared;
    }
    CHECK(compared >= 4);
}
