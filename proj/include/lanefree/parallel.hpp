#pragma once

#include <exception>
#include <mutex>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lanefree {

// How a fleet- or grid-sized kernel is executed.  `automatic` picks
// `parallel` once the problem is large enough to amortize thread startup;
// all modes produce bit-identical results because every kernel writes
// per-element partials first and reduces them in a fixed serial order.
enum class ExecMode { serial, parallel, automatic };

inline int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// automatic -> parallel only when there is enough work per thread.
inline bool use_parallel(ExecMode mode, int work_items) {
    switch (mode) {
    case ExecMode::serial: return false;
    case ExecMode::parallel: return true;
    case ExecMode::automatic: break;
    }
    return hardware_threads() > 1 && work_items >= 64;
}

namespace detail {

// Runs body(i) for i in [0, n).  Exceptions thrown by body must not cross an
// OpenMP region boundary, so the parallel path captures the first one and
// rethrows after the join.
template <class F>
void guarded_for(int n, bool parallel, F&& body) {
    if (!parallel) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr first;
    std::mutex guard;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!first) first = std::current_exception();
        }
    }
    if (first) std::rethrow_exception(first);
}

} // namespace detail

} // namespace lanefree
