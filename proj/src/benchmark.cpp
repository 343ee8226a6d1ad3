#include "brann/benchmark.hpp"

#include <cmath>

#include "brann/random.hpp"

namespace brann {

SineBenchmark make_sine_benchmark(std::uint64_t seed, int n_train, int n_test, double noise) {
    if (n_train < 1 || n_test < 1) throw InvalidInput("benchmark sizes must be positive");
    if (!(noise >= 0.0)) throw InvalidInput("noise must be >= 0");
    Rng rng(seed);
    auto draw = [&](int n, Matrix& x, Matrix& y) {
        x.resize(n, 1);
        y.resize(n, 1);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = rng.uniform(-1.0, 1.0);
            y(i, 0) = std::sin(3.0 * x(i, 0)) + noise * rng.normal();
        }
    };
    SineBenchmark b;
    draw(n_train, b.x_train, b.y_train);
    draw(n_test, b.x_test, b.y_test);
    return b;
}

}  // namespace brann
