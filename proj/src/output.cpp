#include "lanefree/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace lanefree {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    return out;
}

const char* family_name(ControllerFamily family) {
    return family == ControllerFamily::newtonian ? "newtonian"
                                                 : "pseudo_relativistic";
}

const char* family_name(MacroFamily family) {
    return family == MacroFamily::newtonian ? "newtonian"
                                            : "pseudo_relativistic";
}

void micro_header(std::ofstream& out, const Scenario& scenario) {
    const MicroScenario& scn = scenario.micro();
    out << "# scenario = " << scenario.name << "\n"
        << "# kind = micro\n"
        << "# family = " << family_name(scn.law.family) << "\n"
        << "# vehicles = " << scn.model.pairs.size() << "\n";
}

} // namespace

std::string format_double(double x) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, end);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const Scenario& scenario) {
    std::ofstream out = open_out(path);
    micro_header(out, scenario);
    int n = scenario.micro().model.pairs.size();
    out << "t";
    for (int i = 0; i < n; ++i)
        out << ",x" << i << ",y" << i << ",theta" << i << ",v" << i << ",u" << i
            << ",F" << i;
    out << "\n";
    for (const Sample& s : traj.samples) {
        out << format_double(s.t);
        for (int i = 0; i < n; ++i)
            out << ',' << format_double(s.state.x[i]) << ','
                << format_double(s.state.y[i]) << ','
                << format_double(s.state.theta[i]) << ','
                << format_double(s.state.v[i]) << ','
                << format_double(s.controls.steer_rate[i]) << ','
                << format_double(s.controls.accel[i]);
        out << "\n";
    }
}

void write_energy_csv(const std::string& path, const Trajectory& traj,
                      const Scenario& scenario) {
    std::ofstream out = open_out(path);
    micro_header(out, scenario);
    out << "t,newtonian,relativistic,dissipation\n";
    for (const Sample& s : traj.samples)
        out << format_double(s.t) << ',' << format_double(s.newtonian) << ','
            << format_double(s.relativistic) << ','
            << format_double(s.dissipation) << "\n";
}

namespace {

ordered_json violation_json(const ConstraintViolation& v) {
    ordered_json j;
    j["constraint"] = constraint_name(v.kind);
    j["vehicle"] = v.vehicle;
    if (v.other >= 0) j["other"] = v.other;
    j["margin"] = v.margin;
    return j;
}

} // namespace

void write_micro_summary(const std::string& path, const Trajectory& traj,
                         const Scenario& scenario, std::uint64_t seed_used) {
    const MicroScenario& scn = scenario.micro();
    const FleetModel& model = scn.model;
    ordered_json j;
    j["scenario"] = scenario.name;
    j["kind"] = "micro";
    j["family"] = family_name(scn.law.family);
    j["vehicles"] = model.pairs.size();
    if (scn.seeded) j["seed"] = seed_used;
    j["integrator"]["method"] =
        scn.integrator.method == StepMethod::rk4 ? "rk4" : "rk45";
    j["integrator"]["dt"] = scn.integrator.dt;
    j["integrator"]["t_end"] = scn.integrator.t_end;
    j["integrator"]["record_stride"] = scn.integrator.record_stride;
    j["steps"] = traj.steps;
    j["samples"] = traj.samples.size();
    j["completed"] = traj.completed();
    if (!traj.completed()) {
        j["abort"] = violation_json(*traj.abort);
        j["abort"]["t"] = traj.abort_time;
    }
    j["guard_events"] = ordered_json::array();
    for (const GuardEvent& e : traj.guard_events) {
        ordered_json g = violation_json(e.violation);
        g["t"] = e.t;
        g["dt"] = e.dt;
        j["guard_events"].push_back(std::move(g));
    }
    j["energy"]["initial"] = traj.initial_energy;
    j["energy"]["max_rise"] = traj.max_energy_rise;

    const Sample& last = traj.samples.back();
    j["energy"]["final_newtonian"] = last.newtonian;
    j["energy"]["final_relativistic"] = last.relativistic;
    j["final"]["t"] = last.t;
    j["final"]["dissipation"] = last.dissipation;

    double speed_residual = 0.0, heading_residual = 0.0, lateral_max = 0.0;
    for (int i = 0; i < last.state.size(); ++i) {
        speed_residual = std::max(speed_residual,
                                  std::abs(last.state.v[i] - model.road.v_star));
        heading_residual =
            std::max(heading_residual, std::abs(last.state.theta[i]));
        lateral_max = std::max(lateral_max, std::abs(last.state.y[i]));
    }
    double min_sep = std::numeric_limits<double>::infinity();
    double min_slack = min_sep;
    for (int i = 0; i < last.state.size(); ++i)
        for (int k = i + 1; k < last.state.size(); ++k) {
            double d = weighted_distance(last.state.x[i] - last.state.x[k],
                                         last.state.y[i] - last.state.y[k],
                                         model.pairs.weight(i, k));
            min_sep = std::min(min_sep, d);
            min_slack = std::min(min_slack, d - model.pairs.floor(i, k));
        }
    j["final"]["speed_residual"] = speed_residual;
    j["final"]["heading_residual"] = heading_residual;
    j["final"]["lateral_max"] = lateral_max;
    if (last.state.size() > 1) {
        j["final"]["min_separation"] = min_sep;
        j["final"]["min_separation_slack"] = min_slack;
    }

    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_field_csv(const std::string& path, const MacroField& field,
                     double t, const Scenario& scenario) {
    const MacroScenario& scn = scenario.macro();
    std::ofstream out = open_out(path);
    out << "# scenario = " << scenario.name << "\n"
        << "# kind = macro\n"
        << "# family = " << family_name(scn.family) << "\n"
        << "# form = " << (scn.transformed_form ? "transformed" : "primitive")
        << "\n"
        << "# boundary = "
        << (field.boundary == MacroBoundary::periodic ? "periodic" : "inflow")
        << "\n"
        << "# t = " << format_double(t) << "\n"
        << "x,rho,v\n";
    for (int k = 0; k < field.cells; ++k)
        out << format_double(field.center(k)) << ',' << format_double(field.rho[k])
            << ',' << format_double(field.v[k]) << "\n";
}

void write_macro_summary(const std::string& path,
                         const std::vector<double>& snapshot_times,
                         const std::vector<std::string>& snapshot_files,
                         double initial_mass, double final_mass,
                         long long steps, const Scenario& scenario) {
    const MacroScenario& scn = scenario.macro();
    ordered_json j;
    j["scenario"] = scenario.name;
    j["kind"] = "macro";
    j["family"] = family_name(scn.family);
    j["form"] = scn.transformed_form ? "transformed" : "primitive";
    j["cells"] = scn.grid.cells;
    j["boundary"] =
        scn.grid.boundary == MacroBoundary::periodic ? "periodic" : "inflow";
    j["t_end"] = scn.t_end;
    j["steps"] = steps;
    j["mass"]["initial"] = initial_mass;
    j["mass"]["final"] = final_mass;
    j["mass"]["drift"] = final_mass - initial_mass;
    j["snapshots"] = ordered_json::array();
    for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
        ordered_json s;
        s["t"] = snapshot_times[i];
        s["file"] = snapshot_files[i];
        j["snapshots"].push_back(std::move(s));
    }
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_compare_json(const std::string& path,
                        const std::vector<CompareRow>& rows,
                        const Scenario& scenario) {
    const CompareScenario& scn = scenario.compare();
    ordered_json j;
    j["scenario"] = scenario.name;
    j["kind"] = "compare";
    j["family"] = family_name(scn.config.family);
    j["cells"] = scn.grid.cells;
    j["total_mass"] = scn.params.mass;
    j["rows"] = ordered_json::array();
    for (const CompareRow& r : rows) {
        ordered_json row;
        row["count"] = r.count;
        row["t"] = r.t;
        row["l2_density"] = r.l2_density;
        row["linf_density"] = r.linf_density;
        row["l2_speed"] = r.l2_speed;
        row["linf_speed"] = r.linf_speed;
        j["rows"].push_back(std::move(row));
    }
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

} // namespace lanefree
