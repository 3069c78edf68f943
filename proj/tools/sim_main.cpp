#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lanefree/macro.hpp"
#include "lanefree/microsim.hpp"
#include "lanefree/output.hpp"
#include "lanefree/scenario.hpp"

namespace {

// Exit codes: 0 success, 2 scenario or validation error, 3 aborted run
// (guard failure or macro stability breakdown); CLI parse errors keep the
// CLI11 defaults.
constexpr int kExitScenario = 2;
constexpr int kExitAborted = 3;

struct Options {
    std::string scenario_path;
    std::string out_dir;
    std::string exec_name = "auto";
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool quiet = false;
};

lanefree::ExecMode exec_mode(const std::string& name) {
    if (name == "serial") return lanefree::ExecMode::serial;
    if (name == "parallel") return lanefree::ExecMode::parallel;
    return lanefree::ExecMode::automatic;
}

lanefree::Scenario load_kind(const Options& opt, lanefree::ScenarioKind kind,
                             const char* command) {
    lanefree::Scenario scenario = lanefree::load_scenario(opt.scenario_path);
    if (scenario.kind != kind) {
        const char* names[] = {"micro", "macro", "compare"};
        throw lanefree::ScenarioError(
            std::string("scenario kind is ") +
            names[static_cast<int>(scenario.kind)] + "; " + command +
            " needs kind = " + names[static_cast<int>(kind)]);
    }
    return scenario;
}

std::string out_path(const Options& opt, const std::string& file) {
    std::filesystem::create_directories(opt.out_dir);
    return (std::filesystem::path(opt.out_dir) / file).string();
}

int run_micro(const Options& opt) {
    lanefree::Scenario scenario =
        load_kind(opt, lanefree::ScenarioKind::micro, "run-micro");
    lanefree::MicroScenario scn = scenario.micro();
    if (opt.seed_given && !scn.seeded)
        throw lanefree::ScenarioError(
            "--seed has no effect on explicit initial conditions");
    std::uint64_t seed_used = opt.seed_given ? opt.seed : scn.seed;
    scn.integrator.exec = exec_mode(opt.exec_name);

    lanefree::FleetState initial =
        scn.build_initial(opt.seed_given ? std::optional(opt.seed) : std::nullopt);
    lanefree::Trajectory traj =
        lanefree::simulate(initial, scn.model, scn.law, scn.integrator);

    lanefree::write_trajectory_csv(out_path(opt, "trajectory.csv"), traj, scenario);
    lanefree::write_energy_csv(out_path(opt, "energy.csv"), traj, scenario);
    lanefree::write_micro_summary(out_path(opt, "summary.json"), traj, scenario,
                                  seed_used);

    if (!traj.completed()) {
        std::fprintf(stderr, "aborted at t = %s: %s\n",
                     lanefree::format_double(traj.abort_time).c_str(),
                     traj.abort->describe().c_str());
        return kExitAborted;
    }
    if (!opt.quiet)
        std::printf("completed t = %s  steps = %lld  guard_events = %zu  wall = %.2fs\n",
                    lanefree::format_double(traj.samples.back().t).c_str(),
                    traj.steps, traj.guard_events.size(), traj.wall_seconds);
    return 0;
}

int run_macro(const Options& opt) {
    lanefree::Scenario scenario =
        load_kind(opt, lanefree::ScenarioKind::macro, "run-macro");
    const lanefree::MacroScenario& scn = scenario.macro();
    lanefree::ExecMode mode = exec_mode(opt.exec_name);

    lanefree::MacroField field = lanefree::make_field(scn.grid, scn.profile);
    double initial_mass = lanefree::total_mass(field);
    auto transform = std::dynamic_pointer_cast<const lanefree::SpeedTransform>(
        scn.params.coupling);
    lanefree::TransformedField tfield;
    if (scn.transformed_form)
        tfield = lanefree::to_transformed(field, *transform);

    auto wall_start = std::chrono::steady_clock::now();
    std::vector<std::string> snapshot_files;
    long long steps = 0;
    double t = 0.0;
    for (std::size_t i = 0; i < scn.snapshot_times.size(); ++i) {
        double target = scn.snapshot_times[i];
        while (t < target - 1e-12 * std::max(1.0, target)) {
            if (scn.transformed_form) field = lanefree::to_primitive(tfield, *transform);
            double ceiling = lanefree::max_stable_dt(field, scn.params, scn.family);
            double h = scn.dt > 0.0 ? scn.dt : 0.5 * ceiling;
            h = std::min(h, target - t);
            if (scn.transformed_form)
                lanefree::transformed_pde_step(tfield, scn.params, h, mode);
            else if (scn.family == lanefree::MacroFamily::pseudo_relativistic)
                lanefree::prcc_pde_step(field, scn.params, h, mode);
            else
                lanefree::ncc_pde_step(field, scn.params, h, mode);
            t += h;
            ++steps;
        }
        t = target;
        if (scn.transformed_form) field = lanefree::to_primitive(tfield, *transform);
        std::string file = "field_" + std::to_string(i) + ".csv";
        lanefree::write_field_csv(out_path(opt, file), field, target, scenario);
        snapshot_files.push_back(file);
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                wall_start)
                      .count();

    double final_mass = lanefree::total_mass(field);
    lanefree::write_macro_summary(out_path(opt, "summary.json"),
                                  scn.snapshot_times, snapshot_files,
                                  initial_mass, final_mass, steps, scenario);
    if (!opt.quiet)
        std::printf("completed t = %s  steps = %lld  mass_drift = %s  wall = %.2fs\n",
                    lanefree::format_double(t).c_str(), steps,
                    lanefree::format_double(final_mass - initial_mass).c_str(),
                    wall);
    return 0;
}

int run_compare(const Options& opt) {
    lanefree::Scenario scenario =
        load_kind(opt, lanefree::ScenarioKind::compare, "compare");
    const lanefree::CompareScenario& scn = scenario.compare();

    auto wall_start = std::chrono::steady_clock::now();
    std::vector<lanefree::CompareRow> rows = lanefree::micro_macro_compare(
        scn.params, scn.grid, scn.profile, scn.config);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                wall_start)
                      .count();

    lanefree::write_compare_json(out_path(opt, "compare.json"), rows, scenario);
    if (!opt.quiet) {
        std::printf("%8s %10s %14s %14s %14s %14s\n", "count", "t",
                    "l2_density", "linf_density", "l2_speed", "linf_speed");
        for (const lanefree::CompareRow& r : rows)
            std::printf("%8d %10.4g %14.6g %14.6g %14.6g %14.6g\n", r.count, r.t,
                        r.l2_density, r.linf_density, r.l2_speed, r.linf_speed);
        std::printf("wall = %.2fs\n", wall);
    }
    return 0;
}

int run_validate(const Options& opt) {
    lanefree::Scenario scenario = lanefree::load_scenario(opt.scenario_path);
    const char* names[] = {"micro", "macro", "compare"};
    if (!opt.quiet)
        std::printf("OK: %s (%s)\n", scenario.name.c_str(),
                    names[static_cast<int>(scenario.kind)]);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lane-free cruise control: planar fleet simulator, traffic "
                 "fluid solver, micro/macro comparison"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--scenario", opt.scenario_path, "scenario file")
            ->required();
        if (needs_out)
            cmd->add_option("--out", opt.out_dir, "output directory")->required();
        cmd->add_flag("--quiet", opt.quiet, "suppress the stdout report");
        cmd->add_option("--exec", opt.exec_name, "kernel execution mode")
            ->check(CLI::IsMember({"serial", "parallel", "auto"}));
    };

    CLI::App* micro = app.add_subcommand("run-micro", "integrate a planar fleet");
    add_common(micro, true);
    CLI::Option* seed_opt =
        micro->add_option("--seed", opt.seed, "override the scenario seed");

    CLI::App* macro = app.add_subcommand("run-macro", "integrate a traffic fluid");
    add_common(macro, true);

    CLI::App* compare =
        app.add_subcommand("compare", "platoon-vs-fluid convergence table");
    add_common(compare, true);

    CLI::App* validate =
        app.add_subcommand("validate", "parse and validate a scenario file");
    add_common(validate, false);

    CLI11_PARSE(app, argc, argv);
    opt.seed_given = seed_opt->count() > 0;

    try {
        if (micro->parsed()) return run_micro(opt);
        if (macro->parsed()) return run_macro(opt);
        if (compare->parsed()) return run_compare(opt);
        return run_validate(opt);
    } catch (const lanefree::ScenarioError& e) {
        std::fprintf(stderr, "scenario error: %s\n", e.what());
        return kExitScenario;
    } catch (const lanefree::MacroStepError& e) {
        std::fprintf(stderr, "aborted: %s\n", e.what());
        return kExitAborted;
    } catch (const lanefree::DomainViolation& e) {
        std::fprintf(stderr, "aborted: %s\n", e.what());
        return kExitAborted;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
