#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace uniformity {

/// Axis-aligned box.
struct Box {
    std::vector<double> lo, hi;

    std::size_t dim() const noexcept { return lo.size(); }
    double volume() const {
        double v = 1.0;
        for (std::size_t a = 0; a < dim(); ++a) v *= hi[a] - lo[a];
        return v;
    }
    bool contains(std::span<const double> x) const {
        for (std::size_t a = 0; a < dim(); ++a)
            if (x[a] < lo[a] || x[a] > hi[a]) return false;
        return true;
    }

    static Box unit(std::size_t d) { return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)}; }
};

}  // namespace uniformity
