#pragma once

#include <cstdint>

#include "brann/network.hpp"

namespace brann {

struct SineBenchmark {
    Matrix x_train, y_train;
    Matrix x_test, y_test;
};

/// y = sin(3x) + N(0, noise^2) with x ~ U[-1, 1]. Train and test draws share
/// one generator seeded with `seed`; test targets carry the same noise.
SineBenchmark make_sine_benchmark(std::uint64_t seed, int n_train = 60, int n_test = 40, double noise = 0.05);

}  // namespace brann
