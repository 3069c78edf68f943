#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace lanefree::detail {

// Pair kernels are compactly supported in the weighted separation d, and
// d >= |dx|, so vehicles farther than the interaction radius along x alone
// can never interact.  Above this fleet size the O(n^2) scan switches to a
// uniform binning of x with cell width equal to the radius; only the three
// bins around a vehicle can hold its neighbors.
inline constexpr int kGridThreshold = 256;

class NeighborIndex {
public:
    NeighborIndex(const std::vector<double>& x, double radius)
        : radius_(radius) {
        const std::size_t n = x.size();
        double lo = x[0], hi = x[0];
        for (double xi : x) {
            lo = std::min(lo, xi);
            hi = std::max(hi, xi);
        }
        x0_ = lo;
        bins_ = static_cast<std::size_t>((hi - lo) / radius_) + 1;
        bin_of_.resize(n);
        std::vector<int> counts(bins_ + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t b = std::min(
                bins_ - 1, static_cast<std::size_t>((x[i] - x0_) / radius_));
            bin_of_[i] = static_cast<int>(b);
            ++counts[b + 1];
        }
        for (std::size_t b = 0; b < bins_; ++b) counts[b + 1] += counts[b];
        heads_ = counts;
        order_.resize(n);
        std::vector<int> cursor(counts.begin(), counts.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            order_[cursor[bin_of_[i]]++] = static_cast<int>(i);
    }

    // Candidate neighbors of i, ascending, excluding i itself.  Ascending
    // order keeps accumulation bit-identical with the direct O(n^2) scan.
    void candidates(int i, std::vector<int>& out) const {
        out.clear();
        int b = bin_of_[i];
        for (int nb = b - 1; nb <= b + 1; ++nb) {
            if (nb < 0 || nb >= static_cast<int>(bins_)) continue;
            for (int k = heads_[nb]; k < heads_[nb + 1]; ++k)
                if (order_[k] != i) out.push_back(order_[k]);
        }
        std::sort(out.begin(), out.end());
    }

private:
    double radius_, x0_ = 0.0;
    std::size_t bins_ = 1;
    std::vector<int> bin_of_;
    std::vector<int> heads_;
    std::vector<int> order_;
};

} // namespace lanefree::detail
