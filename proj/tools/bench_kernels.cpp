// Times the hot kernels in serial and parallel execution and checks that the
// two paths produce bit-identical results.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "lanefree/controllers.hpp"
#include "lanefree/energy.hpp"
#include "lanefree/macro.hpp"
#include "lanefree/microsim.hpp"
#include "lanefree/parallel.hpp"

using namespace lanefree;

namespace {

// Median-of-reps wall time per call, microseconds.  Each rep runs the kernel
// enough times to cover ~50 ms so short kernels are not all timer noise.
template <class Fn>
double time_us(Fn&& fn) {
    using clock = std::chrono::steady_clock;
    fn(); // warm up
    int inner = 1;
    for (;;) {
        auto t0 = clock::now();
        for (int i = 0; i < inner; ++i) fn();
        double s = std::chrono::duration<double>(clock::now() - t0).count();
        if (s > 0.05 || inner >= 1 << 20) {
            std::vector<double> reps;
            for (int r = 0; r < 5; ++r) {
                auto a = clock::now();
                for (int i = 0; i < inner; ++i) fn();
                reps.push_back(
                    std::chrono::duration<double>(clock::now() - a).count());
            }
            std::sort(reps.begin(), reps.end());
            return reps[2] / inner * 1e6;
        }
        inner *= 2;
    }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void report(const char* name, double serial_us, double parallel_us,
            double diff) {
    std::printf("%-28s %12.2f %12.2f %8.2fx   max|serial-parallel| = %g\n",
                name, serial_us, parallel_us, serial_us / parallel_us, diff);
}

FleetModel bench_model(int n) {
    FleetModel model;
    model.road = {7.2, 0.25, 35.0, 30.0};
    model.pairs = PairMatrix::uniform(n, 5.11, 5.59);
    StandardSuiteParams suite;
    suite.pair_strength = 1e-3;
    suite.viscous_strength = 0.5;
    suite.interaction_radius = 25.0;
    suite.half_width = 7.2;
    model.suite = make_standard_suite(suite);
    return model;
}

void bench_fleet(int n) {
    FleetModel model = bench_model(n);
    FleetState state = seeded_fleet(n, 7, model, 15.0, 25.0);
    ControlLaw law{ControllerFamily::newtonian, {0.4, 1.0 / 35.0}};

    ControlVector cs, cp;
    double t_serial = time_us(
        [&] { cs = fleet_controls(state, model, law, ExecMode::serial); });
    double t_parallel = time_us(
        [&] { cp = fleet_controls(state, model, law, ExecMode::parallel); });
    double diff = std::max(max_abs_diff(cs.accel, cp.accel),
                           max_abs_diff(cs.steer_rate, cp.steer_rate));
    report(("fleet_controls n=" + std::to_string(n)).c_str(), t_serial,
           t_parallel, diff);

    FleetDeriv gs, gp;
    t_serial = time_us([&] {
        gs = newtonian_energy_gradient(state, model, ExecMode::serial);
    });
    t_parallel = time_us([&] {
        gp = newtonian_energy_gradient(state, model, ExecMode::parallel);
    });
    diff = std::max(std::max(max_abs_diff(gs.x, gp.x), max_abs_diff(gs.y, gp.y)),
                    std::max(max_abs_diff(gs.theta, gp.theta),
                             max_abs_diff(gs.v, gp.v)));
    report(("energy_gradient n=" + std::to_string(n)).c_str(), t_serial,
           t_parallel, diff);

    double es = 0.0, ep = 0.0;
    t_serial =
        time_us([&] { es = relativistic_energy(state, model, ExecMode::serial); });
    t_parallel = time_us(
        [&] { ep = relativistic_energy(state, model, ExecMode::parallel); });
    report(("relativistic_energy n=" + std::to_string(n)).c_str(), t_serial,
           t_parallel, std::abs(es - ep));
}

void bench_pde(int cells) {
    RoadSpec road;
    road.v_max = 35.0;
    road.v_star = 30.0;
    MacroParams params = make_macro_params(20.0, 16.0, 30.0, 2e-4, 1e-5,
                                           8.163265306122449e-4, 0.0, 0.2, 0.0,
                                           road, false);
    GridSpec grid{0.0, 400.0, cells, MacroBoundary::periodic};
    ProfileSpec profile;
    profile.base_density = 0.45;
    profile.bump_density = 0.15;
    profile.bump_center = 100.0;
    profile.bump_width = 20.0;
    profile.base_speed = 30.0;
    MacroField field = make_field(grid, profile);
    double dt = 0.5 * max_stable_dt(field, params, MacroFamily::pseudo_relativistic);

    MacroField fs, fp;
    double t_serial = time_us([&] {
        fs = field;
        prcc_pde_step(fs, params, dt, ExecMode::serial);
    });
    double t_parallel = time_us([&] {
        fp = field;
        prcc_pde_step(fp, params, dt, ExecMode::parallel);
    });
    double diff = std::max(max_abs_diff(fs.rho, fp.rho), max_abs_diff(fs.v, fp.v));
    report(("prcc_pde_step cells=" + std::to_string(cells)).c_str(), t_serial,
           t_parallel, diff);
}

} // namespace

int main() {
    std::printf("hardware threads: %d\n\n", hardware_threads());
    std::printf("%-28s %12s %12s %9s\n", "kernel", "serial us", "parallel us",
                "speedup");
    bench_fleet(512);
    bench_fleet(2048);
    bench_pde(4096);
    std::printf("\nA max|serial-parallel| of 0 means the parallel reduction is "
                "bit-identical to the serial one.\n");
    return 0;
}
