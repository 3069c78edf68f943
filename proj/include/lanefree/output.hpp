#pragma once

#include <string>
#include <vector>

#include "lanefree/macro.hpp"
#include "lanefree/microsim.hpp"
#include "lanefree/scenario.hpp"

namespace lanefree {

// Shortest decimal form that round-trips exactly (std::to_chars); all
// emitted numbers use this so rerunning a scenario reproduces files byte for
// byte.
std::string format_double(double x);

// Wide CSV: t then x,y,theta,v,u,F per vehicle, preceded by "# key = value"
// metadata lines.
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const Scenario& scenario);

// t, both energies and the family dissipation rate per sample.
void write_energy_csv(const std::string& path, const Trajectory& traj,
                      const Scenario& scenario);

// Deterministic JSON run summary (parameters, guard events, final-state
// residuals, energy drop).  Wall time deliberately excluded.
void write_micro_summary(const std::string& path, const Trajectory& traj,
                         const Scenario& scenario, std::uint64_t seed_used);

// x, rho, v per cell with the snapshot time in the metadata header.
void write_field_csv(const std::string& path, const MacroField& field,
                     double t, const Scenario& scenario);

void write_macro_summary(const std::string& path,
                         const std::vector<double>& snapshot_times,
                         const std::vector<std::string>& snapshot_files,
                         double initial_mass, double final_mass,
                         long long steps, const Scenario& scenario);

void write_compare_json(const std::string& path,
                        const std::vector<CompareRow>& rows,
                        const Scenario& scenario);

} // namespace lanefree
