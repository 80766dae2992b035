#ifndef MACROQ_GRID_HPP
#define MACROQ_GRID_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "macroq/linalg.hpp"

namespace macroq {

/// Uniform outcome grid [x_min, x_max] with n points.
struct GridSpec {
    double x_min = -8.0;
    double x_max = 8.0;
    int n = 1601;

    void validate() const {
        if (!(x_max > x_min)) throw std::invalid_argument("GridSpec: empty range");
        if (n < 2) throw std::invalid_argument("GridSpec: need at least 2 points");
    }
    double dx() const { return (x_max - x_min) / (n - 1); }
    double x(int i) const { return x_min + i * dx(); }
};

/// Discretized probability density over outcome values.
struct DensityGrid {
    std::vector<double> xs;
    std::vector<double> values;
    double dx = 0.0;

    double mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * dx;
    }

    /// Enforces the density axioms: clips FFT-scale negative ripple
    /// (magnitude below `ripple_tol`) to zero and checks normalization.
    void finalize(double ripple_tol = 1e-10, double mass_tol = 1e-6) {
        for (double& v : values) {
            if (v < 0.0) {
                if (v < -ripple_tol)
                    throw std::runtime_error("DensityGrid: negative density " + std::to_string(v) +
                                             " exceeds ripple tolerance");
                v = 0.0;
            }
        }
        double m = mass();
        if (std::abs(m - 1.0) > mass_tol)
            throw std::runtime_error("DensityGrid: normalization off, mass = " + std::to_string(m));
    }

    bool same_grid(const DensityGrid& other, double tol = 1e-12) const {
        if (xs.size() != other.xs.size()) return false;
        return std::abs(xs.front() - other.xs.front()) <= tol &&
               std::abs(xs.back() - other.xs.back()) <= tol;
    }
};

inline DensityGrid make_density(const GridSpec& spec) {
    spec.validate();
    DensityGrid g;
    g.dx = spec.dx();
    g.xs.resize(spec.n);
    g.values.assign(spec.n, 0.0);
    for (int i = 0; i < spec.n; ++i) g.xs[i] = spec.x(i);
    return g;
}

/// Sup-norm distance between the cumulative distributions of two densities
/// on the same grid.
inline double ks_distance(const DensityGrid& a, const DensityGrid& b) {
    if (!a.same_grid(b)) throw std::invalid_argument("ks_distance: grid mismatch");
    double ca = 0.0, cb = 0.0, worst = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        ca += a.values[i] * a.dx;
        cb += b.values[i] * b.dx;
        worst = std::max(worst, std::abs(ca - cb));
    }
    return worst;
}

inline double l1_distance(const DensityGrid& a, const DensityGrid& b) {
    if (!a.same_grid(b)) throw std::invalid_argument("l1_distance: grid mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]) * a.dx;
    return s;
}

/// 17 significant digits: round-trips double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(const DensityGrid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "x,pdf\n";
    for (size_t i = 0; i < g.xs.size(); ++i)
        out << format_double(g.xs[i]) << ',' << format_double(g.values[i]) << '\n';
}

inline DensityGrid read_csv_density(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv_density: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    DensityGrid g;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("read_csv_density: bad row");
        g.xs.push_back(std::stod(line.substr(0, comma)));
        g.values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (g.xs.size() >= 2) g.dx = (g.xs.back() - g.xs.front()) / double(g.xs.size() - 1);
    return g;
}

}  // namespace macroq

#endif
