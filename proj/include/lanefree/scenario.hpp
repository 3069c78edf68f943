#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lanefree/macro.hpp"
#include "lanefree/microsim.hpp"

namespace lanefree {

// Parse or semantic failure in a scenario file.  `line` is 1-based, 0 when
// the failure is not tied to a single line.
class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                      : what),
          line(line) {}
    int line;
};

struct MicroScenario {
    FleetModel model;
    ControlLaw law;
    IntegratorConfig integrator;
    double wheelbase = 2.5;
    // Initial condition: either seeded (deterministic generator) or explicit
    // per-vehicle rows.
    bool seeded = true;
    std::uint64_t seed = 1;
    double gap_min = 0.0, gap_max = 0.0;
    std::vector<std::array<double, 4>> vehicles; // x y theta v

    // Builds the initial fleet; `seed_override` replaces the file seed.
    // Throws ScenarioError when an explicit initial condition is
    // inadmissible.
    FleetState build_initial(std::optional<std::uint64_t> seed_override = {}) const;
};

struct MacroScenario {
    MacroParams params;
    MacroFamily family = MacroFamily::pseudo_relativistic;
    bool transformed_form = false; // step in (rho, w) instead of (rho, v)
    GridSpec grid;
    ProfileSpec profile;
    double dt = 0.0; // <= 0: derived from the CFL ceiling at each step
    double t_end = 0.0;
    std::vector<double> snapshot_times;
};

struct CompareScenario {
    MacroParams params;
    GridSpec grid;
    ProfileSpec profile;
    CompareConfig config;
};

enum class ScenarioKind { micro, macro, compare };

struct Scenario {
    ScenarioKind kind = ScenarioKind::micro;
    std::string name; // file stem, used in output metadata
    std::variant<MicroScenario, MacroScenario, CompareScenario> detail;

    const MicroScenario& micro() const { return std::get<MicroScenario>(detail); }
    const MacroScenario& macro() const { return std::get<MacroScenario>(detail); }
    const CompareScenario& compare() const { return std::get<CompareScenario>(detail); }
};

// Text format: one "section.key = value" per line, '#' comments, blank lines
// ignored.  Unknown keys, duplicate keys (except init.vehicle), missing
// required keys and out-of-range values all throw ScenarioError with the
// offending line where possible.  Semantic validation (model feasibility,
// suite axioms, grid sanity) runs before returning.
Scenario parse_scenario(std::istream& in, const std::string& name);
Scenario load_scenario(const std::string& path);

} // namespace lanefree
