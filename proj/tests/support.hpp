#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "pmlab/simulator.hpp"

namespace pmlab::testing {

/// Small but fully featured configuration: every channel, shocks, families.
inline sim::SimConfig small_config(int n_markets = 40, int n_periods = 30, std::uint64_t seed = 11) {
    sim::SimConfig cfg;
    cfg.n_markets = n_markets;
    cfg.n_periods = n_periods;
    cfg.seed = seed;
    cfg.activation_lo = 3;
    cfg.activation_hi = n_periods - 5;
    cfg.api_ramp_length = 4;
    cfg.threads = 1;
    return cfg;
}

/// Linear outcomes only: no residual noise, no heterogeneity.
inline sim::SimConfig exact_config(int n_markets = 60, int n_periods = 40, std::uint64_t seed = 5) {
    auto cfg = small_config(n_markets, n_periods, seed);
    cfg.zero_residual_noise();
    cfg.effects.heterogeneity = false;
    return cfg;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace pmlab::testing
