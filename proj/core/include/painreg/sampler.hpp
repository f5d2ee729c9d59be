#pragma once

#include <cstddef>
#include <vector>

#include "painreg/data.hpp"
#include "painreg/rng.hpp"

namespace painreg {

// Dataset positions partitioned by label. Immutable after construction.
struct ClassIndex {
  std::vector<std::vector<std::size_t>> by_class;

  std::size_t num_nonempty() const {
    std::size_t n = 0;
    for (const auto& c : by_class) n += c.empty() ? 0 : 1;
    return n;
  }
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& c : by_class) n += c.size();
    return n;
  }
};

using Batch = std::vector<std::size_t>;

ClassIndex build_class_index(const Dataset& dataset);

// Draws batch_size / K' positions uniformly with replacement from each of the
// K' non-empty classes. batch_size must be divisible by K'.
Batch next_balanced_batch(const ClassIndex& index, std::size_t batch_size, Rng& rng);

// Uniform with replacement over all positions.
Batch next_uniform_batch(std::size_t dataset_size, std::size_t batch_size, Rng& rng);

enum class SamplerKind { Balanced, Uniform };

}  // namespace painreg
