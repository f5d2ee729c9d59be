#include "painreg/sampler.hpp"

#include "painreg/errors.hpp"

namespace painreg {

ClassIndex build_class_index(const Dataset& dataset) {
  ClassIndex index;
  index.by_class.resize(dataset.num_classes);
  for (std::size_t pos = 0; pos < dataset.samples.size(); ++pos) {
    index.by_class[dataset.samples[pos].label].push_back(pos);
  }
  return index;
}

Batch next_balanced_batch(const ClassIndex& index, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw DomainError("batch_size must be positive");
  const std::size_t k_nonempty = index.num_nonempty();
  if (k_nonempty == 0) throw DomainError("all classes empty");
  if (batch_size % k_nonempty != 0) {
    throw DomainError("batch_size " + std::to_string(batch_size) +
                      " not divisible by " + std::to_string(k_nonempty) +
                      " non-empty classes");
  }
  const std::size_t per_class = batch_size / k_nonempty;
  Batch batch;
  batch.reserve(batch_size);
  for (const auto& positions : index.by_class) {
    if (positions.empty()) continue;
    for (std::size_t i = 0; i < per_class; ++i) {
      batch.push_back(positions[rng.index(positions.size())]);
    }
  }
  return batch;
}

Batch next_uniform_batch(std::size_t dataset_size, std::size_t batch_size, Rng& rng) {
  if (dataset_size == 0) throw DomainError("empty dataset");
  if (batch_size == 0) throw DomainError("batch_size must be positive");
  Batch batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    batch.push_back(rng.index(dataset_size));
  }
  return batch;
}

}  // namespace painreg
