#pragma once

#include <cstdint>
#include <algorithm>
#include <random>

#include "fog/tensorcore/tensor.hpp"

namespace fog {

/// Seeded generator shared by initialization, data generation and shuffling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

    template <typename It>
    void shuffle(It first, It last) {
        std::shuffle(first, last, engine_);
    }

    template <typename T>
    Tensor<T> uniform_tensor(Shape shape, double lo, double hi) {
        Tensor<T> t(std::move(shape));
        for (auto& v : t.storage()) v = static_cast<T>(uniform(lo, hi));
        return t;
    }

    template <typename T>
    Tensor<T> normal_tensor(Shape shape, double stddev = 1.0) {
        Tensor<T> t(std::move(shape));
        for (auto& v : t.storage()) v = static_cast<T>(normal(0.0, stddev));
        return t;
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace fog
