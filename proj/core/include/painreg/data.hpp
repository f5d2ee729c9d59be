#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "painreg/errors.hpp"

namespace painreg {

constexpr int kDefaultNumClasses = 6;
constexpr int kRawLabelMax = 15;

// One labeled frame: identity, position within its sequence, the precomputed
// feature embedding and the discrete intensity label.
struct Sample {
  std::string subject_id;
  std::string sequence_id;
  long frame_index = 0;
  std::vector<double> features;
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t feature_dim = 0;
  int num_classes = kDefaultNumClasses;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Total, monotone map from the raw [0, 15] intensity scale down to [0, K-1].
struct QuantizationMap {
  std::array<int, kRawLabelMax + 1> table{};

  // 0..3 unchanged, {4,5} -> 4, {6..15} -> 5.
  static QuantizationMap default_map();

  void validate(int num_classes = kDefaultNumClasses) const;
  std::string to_json() const;
  static QuantizationMap from_json(const std::string& text);
};

int quantize_label(int raw, const QuantizationMap& map);

// CSV header: subject_id,sequence_id,frame_index,label,f0,...,f{D-1}
Dataset load_dataset(const std::string& path, std::size_t feature_dim,
                     int num_classes = kDefaultNumClasses);
Dataset load_dataset(std::istream& in, std::size_t feature_dim,
                     int num_classes = kDefaultNumClasses);

void save_dataset(const Dataset& dataset, const std::string& path);
void save_dataset(const Dataset& dataset, std::ostream& out);

// Collapses each same-label run longer than run_threshold consecutive frames
// (within a subject+sequence) down to its first frame. Idempotent.
Dataset deduplicate(const Dataset& dataset, std::size_t run_threshold = 5);

enum class LabelProfile { Balanced, Imbalanced };

// Zero-label mass of the imbalanced profile.
constexpr double kImbalancedZeroFraction = 0.9135;

struct SyntheticConfig {
  std::size_t num_subjects = 5;
  std::size_t frames_per_subject = 200;
  std::size_t feature_dim = 32;
  double noise_sigma = 0.25;
  std::uint64_t seed = 0;
  LabelProfile profile = LabelProfile::Balanced;
  int num_classes = kDefaultNumClasses;
  // Anchor geometry: coordinate 0 of mu(k) is anchor_spacing * k, the other
  // coordinates are fixed N(0, anchor_offset_sigma) per-class offsets.
  double anchor_spacing = 4.0;
  double anchor_offset_sigma = 8.0;
};

// Features are mu(label) + N(0, noise_sigma) per coordinate. Intensity is
// exactly linearly decodable at zero noise (label = f0 / anchor_spacing).
Dataset generate_synthetic(const SyntheticConfig& config);

void validate_dataset(const Dataset& dataset);

}  // namespace painreg
