#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "brann/network.hpp"
#include "brann/random.hpp"

namespace brann::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(BRANN_FIXTURES) / name; }

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

/// Fresh directory under the system temp dir, removed first if present.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("brann_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

/// Central finite-difference gradient of f at w.
template <typename F>
Vector numeric_gradient(F&& f, const Vector& w, double h = 1e-6) {
    Vector g(w.size());
    Vector p = w;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        p[i] = w[i] + h;
        const double fp = f(p);
        p[i] = w[i] - h;
        const double fm = f(p);
        p[i] = w[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace brann::testing
