#include "lanefree/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace lanefree {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

// Parsed key/value table with consumption tracking: every key a kind does
// not ask for is reported as unknown.
class KeyTable {
public:
    void insert(const std::string& key, const std::string& value, int line) {
        if (key == "init.vehicle") {
            vehicles_.push_back({value, line});
            return;
        }
        auto [it, fresh] = entries_.try_emplace(key, RawEntry{value, line});
        if (!fresh)
            throw ScenarioError("duplicate key '" + key + "' (first on line " +
                                    std::to_string(it->second.line) + ")",
                                line);
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    double number(const std::string& key) {
        RawEntry& e = require(key);
        return parse_number(e.value, key, e.line);
    }

    double number_or(const std::string& key, double fallback) {
        RawEntry* e = find(key);
        return e ? parse_number(e->value, key, e->line) : fallback;
    }

    long long integer(const std::string& key) {
        RawEntry& e = require(key);
        return parse_integer(e.value, key, e.line);
    }

    long long integer_or(const std::string& key, long long fallback) {
        RawEntry* e = find(key);
        return e ? parse_integer(e->value, key, e->line) : fallback;
    }

    std::uint64_t uint_or(const std::string& key, std::uint64_t fallback) {
        RawEntry* e = find(key);
        if (!e) return fallback;
        errno = 0;
        char* end = nullptr;
        unsigned long long u = std::strtoull(e->value.c_str(), &end, 10);
        // strtoull wraps negative input instead of failing; reject it here.
        if (errno != 0 || end != e->value.c_str() + e->value.size() ||
            e->value.empty() || e->value[0] == '-')
            throw ScenarioError("key '" + key + "' needs an unsigned integer",
                                e->line);
        return u;
    }

    // Enumerated string: value must be one of the given choices; returns its
    // index.
    int choice(const std::string& key,
               std::initializer_list<const char*> choices,
               int fallback_index) {
        RawEntry* e = find(key);
        if (!e) return fallback_index;
        int idx = 0;
        for (const char* c : choices) {
            if (e->value == c) return idx;
            ++idx;
        }
        std::string msg = "key '" + key + "' must be one of {";
        bool first = true;
        for (const char* c : choices) {
            if (!first) msg += ", ";
            msg += c;
            first = false;
        }
        throw ScenarioError(msg + "}", e->line);
    }

    std::vector<double> list(const std::string& key) {
        RawEntry& e = require(key);
        return parse_list(e.value, key, e.line);
    }

    std::vector<double> list_or(const std::string& key,
                                std::vector<double> fallback) {
        RawEntry* e = find(key);
        return e ? parse_list(e->value, key, e->line) : std::move(fallback);
    }

    const std::vector<std::pair<std::string, int>>& vehicles() {
        vehicles_used_ = true;
        return vehicles_;
    }

    // First key nobody consumed is an error; catches typos and keys from the
    // wrong scenario kind.
    void finish() const {
        int line = 0;
        std::string key;
        for (const auto& [k, e] : entries_)
            if (!e.used && (line == 0 || e.line < line)) {
                line = e.line;
                key = k;
            }
        if (!vehicles_used_ && !vehicles_.empty() &&
            (line == 0 || vehicles_.front().second < line)) {
            line = vehicles_.front().second;
            key = "init.vehicle";
        }
        if (line != 0)
            throw ScenarioError("unknown key '" + key + "' for this scenario kind",
                                line);
    }

private:
    RawEntry* find(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    RawEntry& require(const std::string& key) {
        RawEntry* e = find(key);
        if (!e) throw ScenarioError("missing required key '" + key + "'");
        return *e;
    }

    static double parse_number(const std::string& text, const std::string& key,
                               int line) {
        errno = 0;
        char* end = nullptr;
        double x = std::strtod(text.c_str(), &end);
        if (errno != 0 || text.empty() || end != text.c_str() + text.size())
            throw ScenarioError("key '" + key + "' needs a number, got '" +
                                    text + "'",
                                line);
        return x;
    }

    static long long parse_integer(const std::string& text,
                                   const std::string& key, int line) {
        errno = 0;
        char* end = nullptr;
        long long x = std::strtoll(text.c_str(), &end, 10);
        if (errno != 0 || text.empty() || end != text.c_str() + text.size())
            throw ScenarioError("key '" + key + "' needs an integer, got '" +
                                    text + "'",
                                line);
        return x;
    }

    static std::vector<double> parse_list(const std::string& text,
                                          const std::string& key, int line) {
        std::vector<double> out;
        std::istringstream in(text);
        std::string token;
        while (in >> token) out.push_back(parse_number(token, key, line));
        if (out.empty())
            throw ScenarioError("key '" + key + "' needs at least one number",
                                line);
        return out;
    }

    std::map<std::string, RawEntry> entries_;
    std::vector<std::pair<std::string, int>> vehicles_;
    bool vehicles_used_ = false;
};

KeyTable read_table(std::istream& in) {
    KeyTable table;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string text = line;
        std::size_t hash = text.find('#');
        if (hash != std::string::npos) text.erase(hash);
        text = trim(text);
        if (text.empty()) continue;
        std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ScenarioError("expected 'key = value'", number);
        std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw ScenarioError("empty key", number);
        for (char c : key)
            if (!std::islower(static_cast<unsigned char>(c)) &&
                !std::isdigit(static_cast<unsigned char>(c)) && c != '.' &&
                c != '_')
                throw ScenarioError("malformed key '" + key + "'", number);
        if (value.empty())
            throw ScenarioError("key '" + key + "' has no value", number);
        table.insert(key, value, number);
    }
    return table;
}

RoadSpec read_speed_policy(KeyTable& table) {
    RoadSpec road;
    road.v_max = table.number("road.v_max");
    road.v_star = table.number_or("road.v_star", 30.0);
    return road;
}

// Wraps the model validators so their messages surface as scenario errors.
template <class Fn>
void semantic(Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
}

MicroScenario build_micro(KeyTable& table) {
    MicroScenario scn;
    RoadSpec road = read_speed_policy(table);
    road.half_width = table.number("road.half_width");
    road.heading_limit = table.number("road.heading_limit");

    long long count = table.integer("fleet.count");
    if (count < 1 || count > 2000000)
        throw ScenarioError("fleet.count out of range");
    double weight = table.number("fleet.distance_weight");
    double floor = table.number("fleet.min_separation");
    scn.wheelbase = table.number_or("fleet.wheelbase", 2.5);
    if (!(scn.wheelbase > 0.0))
        throw ScenarioError("fleet.wheelbase must be positive");

    StandardSuiteParams suite;
    suite.pair_strength = table.number("suite.pair_strength");
    suite.viscous_strength = table.number_or("suite.viscous_strength", 0.0);
    suite.interaction_radius = table.number("suite.interaction_radius");
    suite.half_width = road.half_width;
    suite.wall_flatness = table.number_or("suite.wall_flatness", 1.5);
    suite.ramp_width = table.number_or("suite.ramp_width", 0.2);

    scn.law.family = table.choice("controller.family",
                                  {"newtonian", "pseudo_relativistic"}, 0) == 0
                         ? ControllerFamily::newtonian
                         : ControllerFamily::pseudo_relativistic;
    scn.law.gains.mu1 = table.number("controller.mu1");
    scn.law.gains.mu2 = table.number("controller.mu2");
    if (!(scn.law.gains.mu1 >= 0.0) || !(scn.law.gains.mu2 > 0.0))
        throw ScenarioError("controller gains need mu1 >= 0 and mu2 > 0");

    semantic([&] {
        scn.model.road = road;
        scn.model.pairs =
            PairMatrix::uniform(static_cast<int>(count), weight, floor);
        scn.model.suite = make_standard_suite(suite);
        scn.model.clf.barrier_gain = table.number_or("controller.barrier_gain", 1.0);
        scn.model.clf.lateral_gain = table.number_or("controller.lateral_gain", 1.0);
        validate_model(scn.model);
    });

    scn.integrator.method =
        table.choice("integrator.method", {"rk4", "rk45"}, 0) == 0
            ? StepMethod::rk4
            : StepMethod::rk45;
    scn.integrator.dt = table.number_or("integrator.dt", 1e-3);
    scn.integrator.t_end = table.number("integrator.t_end");
    scn.integrator.rel_tol = table.number_or("integrator.rel_tol", 1e-8);
    scn.integrator.record_stride =
        static_cast<int>(table.integer_or("integrator.record_stride", 100));
    if (!(scn.integrator.dt > 0.0) || !(scn.integrator.t_end >= 0.0) ||
        scn.integrator.record_stride < 1 || !(scn.integrator.rel_tol > 0.0))
        throw ScenarioError("integrator keys out of range");

    scn.seeded = table.choice("init.kind", {"seeded", "explicit"}, 0) == 0;
    if (scn.seeded) {
        scn.seed = table.uint_or("init.seed", 1);
        double lambda = suite.interaction_radius;
        scn.gap_min = table.number_or("init.gap_min", 0.6 * lambda);
        scn.gap_max = table.number_or("init.gap_max", lambda);
        if (!(scn.gap_min > floor))
            throw ScenarioError(
                "init.gap_min must exceed the pairwise separation floor");
        if (!(scn.gap_max >= scn.gap_min))
            throw ScenarioError("init.gap_max must be >= init.gap_min");
        if (!table.vehicles().empty())
            throw ScenarioError("seeded scenarios must not list init.vehicle rows");
    } else {
        for (const auto& [text, line] : table.vehicles()) {
            std::istringstream in(text);
            std::array<double, 4> row{};
            if (!(in >> row[0] >> row[1] >> row[2] >> row[3]) ||
                (in >> std::ws, !in.eof()))
                throw ScenarioError("init.vehicle needs 'x y theta v'", line);
            scn.vehicles.push_back(row);
        }
        if (static_cast<long long>(scn.vehicles.size()) != count)
            throw ScenarioError("init.vehicle rows must match fleet.count");
    }
    return scn;
}

MacroParams build_macro_params(KeyTable& table, const RoadSpec& road) {
    double mass = table.number("macro.total_mass");
    double floor = table.number("macro.floor");
    double radius = table.number("macro.interaction_radius");
    double pair_strength = table.number("macro.pair_strength");
    double viscous = table.number_or("macro.viscous_strength", 0.0);
    double relax = table.number("macro.relax_slope");
    double gamma = table.number_or("macro.gamma", relax);
    double ramp = table.number_or("macro.ramp_width", 0.2);
    double offset = table.number_or("macro.pressure_offset", 0.0);
    bool transform = table.choice("macro.coupling", {"identity", "transform"}, 0) == 1;
    MacroParams params;
    semantic([&] {
        params = make_macro_params(mass, floor, radius, pair_strength, viscous,
                                   relax, gamma, ramp, offset, road, transform);
    });
    return params;
}

GridSpec build_grid(KeyTable& table) {
    GridSpec grid;
    grid.x_min = table.number("grid.x_min");
    grid.x_max = table.number("grid.x_max");
    grid.cells = static_cast<int>(table.integer("grid.cells"));
    grid.boundary = table.choice("grid.boundary", {"periodic", "inflow"}, 0) == 0
                        ? MacroBoundary::periodic
                        : MacroBoundary::inflow;
    if (grid.cells < 3 || !(grid.x_max > grid.x_min))
        throw ScenarioError("grid needs x_max > x_min and at least 3 cells");
    return grid;
}

ProfileSpec build_profile(KeyTable& table, const RoadSpec& road) {
    ProfileSpec profile;
    profile.base_density = table.number("profile.base_density");
    profile.bump_density = table.number_or("profile.bump_density", 0.0);
    profile.bump_center = table.number_or("profile.bump_center", 0.0);
    profile.bump_width = table.number_or("profile.bump_width", 1.0);
    profile.base_speed = table.number_or("profile.base_speed", road.v_star);
    profile.bump_speed = table.number_or("profile.bump_speed", 0.0);
    if (!(profile.base_density > 0.0) || !(profile.bump_width > 0.0))
        throw ScenarioError("profile needs base_density > 0 and bump_width > 0");
    return profile;
}

MacroScenario build_macro(KeyTable& table) {
    MacroScenario scn;
    RoadSpec road = read_speed_policy(table);
    scn.family = table.choice("macro.family",
                              {"newtonian", "pseudo_relativistic"}, 1) == 0
                     ? MacroFamily::newtonian
                     : MacroFamily::pseudo_relativistic;
    scn.params = build_macro_params(table, road);
    scn.transformed_form =
        table.choice("macro.form", {"primitive", "transformed"}, 0) == 1;
    if (scn.transformed_form &&
        (scn.family != MacroFamily::pseudo_relativistic ||
         !std::dynamic_pointer_cast<const SpeedTransform>(scn.params.coupling)))
        throw ScenarioError(
            "macro.form = transformed requires the pseudo_relativistic family "
            "with macro.coupling = transform");
    scn.grid = build_grid(table);
    scn.profile = build_profile(table, road);
    scn.dt = table.number_or("integrator.dt", 0.0);
    scn.t_end = table.number("integrator.t_end");
    if (!(scn.t_end > 0.0)) throw ScenarioError("integrator.t_end must be positive");
    scn.snapshot_times =
        table.list_or("output.snapshot_times", {scn.t_end});
    std::sort(scn.snapshot_times.begin(), scn.snapshot_times.end());
    for (double t : scn.snapshot_times)
        if (!(t >= 0.0) || t > scn.t_end)
            throw ScenarioError("output.snapshot_times must lie in [0, t_end]");
    return scn;
}

CompareScenario build_compare(KeyTable& table) {
    CompareScenario scn;
    RoadSpec road = read_speed_policy(table);
    scn.params = build_macro_params(table, road);
    if (!(scn.params.interaction_radius < 2.0 * scn.params.floor_gap))
        throw ScenarioError(
            "comparison scenarios need macro.interaction_radius < 2 * "
            "macro.floor so only adjacent vehicles interact");
    scn.grid = build_grid(table);
    scn.profile = build_profile(table, road);
    scn.config.family = table.choice("compare.family",
                                     {"newtonian", "pseudo_relativistic"}, 1) == 0
                            ? MacroFamily::newtonian
                            : MacroFamily::pseudo_relativistic;
    for (double c : table.list("compare.counts")) {
        if (c < 2 || c != std::floor(c) || c > 1000000)
            throw ScenarioError("compare.counts must be integers >= 2");
        scn.config.counts.push_back(static_cast<int>(c));
    }
    scn.config.right_edge = table.number("compare.right_edge");
    scn.config.sample_times = table.list("compare.sample_times");
    for (double t : scn.config.sample_times)
        if (!(t > 0.0)) throw ScenarioError("compare.sample_times must be positive");
    scn.config.dt_micro = table.number("compare.dt_micro");
    scn.config.dt_macro = table.number_or("compare.dt_macro", 0.0);
    if (!(scn.config.dt_micro > 0.0))
        throw ScenarioError("compare.dt_micro must be positive");
    return scn;
}

} // namespace

FleetState MicroScenario::build_initial(
    std::optional<std::uint64_t> seed_override) const {
    if (seeded)
        return seeded_fleet(model.pairs.size(), seed_override.value_or(seed),
                            model, gap_min, gap_max);
    FleetState state;
    state.resize(static_cast<int>(vehicles.size()));
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        state.x[i] = vehicles[i][0];
        state.y[i] = vehicles[i][1];
        state.theta[i] = vehicles[i][2];
        state.v[i] = vehicles[i][3];
    }
    AdmissibilityReport report = check_admissible(state, model.road, model.pairs);
    if (!report.admissible())
        throw ScenarioError("initial condition inadmissible: " +
                            report.violations.front().describe());
    return state;
}

Scenario parse_scenario(std::istream& in, const std::string& name) {
    KeyTable table = read_table(in);
    Scenario scenario;
    scenario.name = name;
    int kind = table.choice("scenario.kind", {"micro", "macro", "compare"}, -1);
    if (kind < 0) throw ScenarioError("missing required key 'scenario.kind'");
    switch (kind) {
    case 0:
        scenario.kind = ScenarioKind::micro;
        scenario.detail = build_micro(table);
        break;
    case 1:
        scenario.kind = ScenarioKind::macro;
        scenario.detail = build_macro(table);
        break;
    default:
        scenario.kind = ScenarioKind::compare;
        scenario.detail = build_compare(table);
        break;
    }
    table.finish();
    return scenario;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    std::string stem = path;
    std::size_t slash = stem.find_last_of("/\\");
    if (slash != std::string::npos) stem.erase(0, slash + 1);
    std::size_t dot = stem.find_last_of('.');
    if (dot != std::string::npos && dot > 0) stem.erase(dot);
    return parse_scenario(in, stem);
}

} // namespace lanefree
