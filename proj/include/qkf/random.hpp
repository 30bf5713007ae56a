// Seeded random streams for simulation. Runs inside a Monte Carlo campaign
// each own an independent stream derived from the master seed by a counter
// split, so changing the run count never reshuffles earlier runs.
#pragma once

#include <cstdint>
#include <random>

#include "qkf/linalg.hpp"

namespace qkf {

uint64_t splitmix64(uint64_t x);

// Stream `index` of a family keyed by `master`.
uint64_t derive_seed(uint64_t master, uint64_t index);

class RngStream {
  public:
    explicit RngStream(uint64_t seed) : eng_(splitmix64(seed)) {}

    double uniform01();
    // Standard normal via Box-Muller (pair cached), independent of any
    // library distribution implementation.
    double normal();
    Vector normal_vector(std::size_t n);
    // Index into probs (must sum to ~1).
    std::size_t categorical(const Vector& probs);

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Draw from N(mean, cov) using the lower Cholesky factor of cov.
Vector sample_gaussian(RngStream& rng, const Vector& mean, const Matrix& cov_cholesky);

}  // namespace qkf
