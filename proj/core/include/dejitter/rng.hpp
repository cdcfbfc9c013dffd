#pragma once

#include <cstdint>
#include <random>

namespace dejitter {

/// Derives independent substream seeds from a master seed by a fixed
/// counter scheme, so that trial (point, trial, stream) tuples map to the
/// same generator state regardless of execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

/// splitmix64 mix step; used both for seed derivation and hashing.
std::uint64_t splitmix64(std::uint64_t& state);

/// Standard-normal engine wrapper with a fixed generator type.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}
    double operator()() { return dist_(gen_); }
    std::mt19937_64& engine() { return gen_; }
    double uniform() { return uni_(gen_); }

  private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> dist_{0.0, 1.0};
    std::uniform_real_distribution<double> uni_{0.0, 1.0};
};

}  // namespace dejitter
