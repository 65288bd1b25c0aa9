#include "nhrch/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nhrch/parallel.hpp"
#include "nhrch/scenario.hpp"

namespace nhrch::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("failed writing " + path.string());
}

Json read_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

struct Outcome {
    RunResult result;
    std::string config_error;
};

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Nonholonomic controlled Hamiltonian systems: checks, simulation, Hamilton-Jacobi verification and reduction"};
    std::string command, config_path, out_dir = "nhrch_out";
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "check | simulate | hj-verify | reduce")
        ->required()
        ->check(CLI::IsMember({"check", "simulate", "hj-verify", "reduce"}));
    app.add_option("--config", config_path, "scenario or batch config (JSON)")->required();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--tol", tol, "override the verification tolerance");
    app.add_option("--seed", seed, "override the sampling seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::vector<Scenario> scenarios;
    const Command cmd = parse_command(command);
    try {
        scenarios = parse_config(read_config(config_path), Overrides{tol, seed});
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    std::vector<Outcome> outcomes(scenarios.size());
    parallel_for(scenarios.size(), [&](std::size_t i) {
        try {
            outcomes[i].result = run_scenario(scenarios[i], cmd);
        } catch (const ConfigError& e) {
            outcomes[i].config_error = e.what();
        } catch (const Unsupported& e) {
            outcomes[i].config_error = e.what();
        }
    });

    bool config_failed = false, verify_failed = false;
    Json summary = {{"command", command}, {"scenarios", Json::array()}};
    try {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            const std::string& name = scenarios[i].name;
            const Outcome& o = outcomes[i];
            if (!o.config_error.empty()) {
                std::cerr << "config error in " << name << ": " << o.config_error << "\n";
                summary["scenarios"].push_back({{"scenario", name}, {"config_error", o.config_error}});
                config_failed = true;
                continue;
            }
            const std::string stem = name + "." + command;
            write_file(dir / (stem + ".json"), o.result.report.dump(2) + "\n");
            write_file(dir / (stem + ".timings.json"), o.result.timings.dump(2) + "\n");
            for (const auto& [file, content] : o.result.artifacts) write_file(dir / file, content);
            for (const auto& c : o.result.report["checks"]) {
                std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << name << " " << c["name"].get<std::string>()
                          << " residual=" << format_double(c["residual"].get<double>());
                if (c["kind"] == "report") std::cout << " (report)";
                std::cout << "\n";
            }
            for (const auto& f : o.result.report["failing"])
                std::cerr << "verification failed: " << name << " " << f["check"].get<std::string>()
                          << " residual=" << format_double(f["residual"].get<double>())
                          << " tolerance=" << format_double(f["tolerance"].get<double>()) << "\n";
            verify_failed = verify_failed || !o.result.pass;
            summary["scenarios"].push_back(
                {{"scenario", name}, {"report", stem + ".json"}, {"pass", o.result.pass}});
        }
        if (scenarios.size() > 1) write_file(dir / ("summary." + command + ".json"), summary.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (config_failed) return 2;
    return verify_failed ? 1 : 0;
}

}  // namespace nhrch::cli
