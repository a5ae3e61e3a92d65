#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace dryfric {

// Sampled real function on a velocity grid; the common output format for
// pdfs, cdfs and propagator slices. meta carries parameter provenance.
struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> values;
    nlohmann::json meta;

    void check() const {
        if (grid.size() != values.size())
            throw std::invalid_argument("curve: grid/values length mismatch");
        if (grid.size() < 2)
            throw std::invalid_argument("curve: need at least 2 points");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw std::invalid_argument("curve: grid not strictly increasing");
    }

    double trapezoid() const {
        double s = 0;
        for (std::size_t i = 1; i < grid.size(); ++i)
            s += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
        return s;
    }

    // linear interpolation, clamped to the end values
    double at(double v) const {
        if (v <= grid.front()) return values.front();
        if (v >= grid.back()) return values.back();
        auto it = std::lower_bound(grid.begin(), grid.end(), v);
        std::size_t i = static_cast<std::size_t>(it - grid.begin());
        double t = (v - grid[i - 1]) / (grid[i] - grid[i - 1]);
        return values[i - 1] + t * (values[i] - values[i - 1]);
    }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo))
        throw std::invalid_argument("linspace: need n >= 2 and hi > lo");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.back() = hi;
    return g;
}

// cumulative trapezoid, same grid; out[0] = 0
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& grid,
                                                const std::vector<double>& values) {
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    return out;
}

}
