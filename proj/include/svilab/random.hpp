#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "svilab/linalg.hpp"

namespace svi {

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic child seed for (stage, index) under a master seed. Every
// replication in every stage owns an independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index);

// Seeded random source. Identical seeds give bit-identical streams.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Vec normal_vec(Eigen::Index dim) {
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal_(engine_);
    return v;
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

}  // namespace svi
