#ifndef NHRCH_SCENARIO_HPP
#define NHRCH_SCENARIO_HPP

#include <optional>

#include "nhrch/catalog.hpp"
#include "nhrch/integrator.hpp"

namespace nhrch::cli {

using Json = nlohmann::json;

enum class Command { check, simulate, hj_verify, reduce };

Command parse_command(const std::string& name);
std::string to_string(Command c);

struct NamedMap {
    Json description;
    SymplecticMapSpec map;
};

struct Scenario {
    std::string name = "scenario";
    std::string system_name;
    NonholonomicRCHSpec spec;
    bool reduction_supported = true;
    std::optional<SymmetrySpec> symmetry;
    std::optional<Vec> mu;
    std::optional<OneFormField> gamma;
    Json gamma_description;
    std::vector<NamedMap> epsilons;
    std::optional<PhasePoint> initial;
    IntegrationConfig integration;
    GridSpec grid;
    std::size_t samples = 50;
    double tolerance = 1e-6;
    double trajectory_tolerance = 1e-5;
    int max_depth = 3;
    std::uint64_t seed = 0;
};

struct Overrides {
    std::optional<double> tolerance;
    std::optional<std::uint64_t> seed;
};

// A config is one scenario object or {"scenarios": [...]}. Throws ConfigError.
std::vector<Scenario> parse_config(const Json& config, const Overrides& overrides = {});
Scenario parse_scenario(const Json& j, const Overrides& overrides = {});

struct RunResult {
    Json report;   // deterministic content
    Json timings;  // wall-clock seconds per check
    std::vector<std::pair<std::string, std::string>> artifacts;  // file name, content
    bool pass = false;
};

RunResult run_scenario(const Scenario& scenario, Command command);

// Shortest round-trip decimal.
std::string format_double(double x);
std::string trajectory_csv(const Trajectory& traj, const ChartSpec& chart, const std::vector<std::string>& momentum_names);

}  // namespace nhrch::cli

#endif
