#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <sstream>

#include "painreg/data.hpp"
#include "test_util.hpp"

using namespace painreg;

TEST_CASE("default quantization map: exhaustive totality and monotonicity") {
  const auto map = QuantizationMap::default_map();
  map.validate();
  int prev = 0;
  for (int raw = 0; raw <= 15; ++raw) {
    const int q = quantize_label(raw, map);
    CHECK(q >= 0);
    CHECK(q <= 5);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK(quantize_label(0, map) == 0);
  CHECK(quantize_label(3, map) == 3);
  CHECK(quantize_label(4, map) == 4);
  CHECK(quantize_label(5, map) == 4);
  CHECK(quantize_label(6, map) == 5);
  CHECK(quantize_label(15, map) == 5);
}

TEST_CASE("quantize_label rejects out-of-range raw values") {
  const auto map = QuantizationMap::default_map();
  CHECK_THROWS_AS(quantize_label(-1, map), DomainError);
  CHECK_THROWS_AS(quantize_label(16, map), DomainError);
}

TEST_CASE("quantization map JSON round trip") {
  const auto map = QuantizationMap::default_map();
  const auto restored = QuantizationMap::from_json(map.to_json());
  CHECK(restored.table == map.table);
}

TEST_CASE("load_dataset parses valid rows") {
  std::istringstream in(
      "subject_id,sequence_id,frame_index,label,f0,f1,f2,f3\n"
      "a,s1,0,2,0.5,1.0,-0.25,3\n"
      "a,s1,1,3,0,0,0,0\n"
      "b,s1,0,0,1,2,3,4\n");
  const Dataset ds = load_dataset(in, 4);
  CHECK(ds.size() == 3);
  CHECK(ds.samples[0].label == 2);
  CHECK(ds.samples[0].features == std::vector<double>{0.5, 1.0, -0.25, 3.0});
  CHECK(ds.samples[2].subject_id == "b");
}

TEST_CASE("load_dataset rejects out-of-range label with line number") {
  std::istringstream in(
      "subject_id,sequence_id,frame_index,label,f0\n"
      "a,s1,0,7,0.5\n");
  CHECK_THROWS_WITH_AS(load_dataset(in, 1),
                       doctest::Contains("line 2"), DataError);
}

TEST_CASE("load_dataset rejects wrong column count") {
  std::istringstream in(
      "subject_id,sequence_id,frame_index,label,f0,f1\n"
      "a,s1,0,1,0.5\n");
  CHECK_THROWS_AS(load_dataset(in, 2), DataError);
}

TEST_CASE("load_dataset rejects non-finite features") {
  std::istringstream in(
      "subject_id,sequence_id,frame_index,label,f0\n"
      "a,s1,0,1,nan\n");
  CHECK_THROWS_AS(load_dataset(in, 1), DataError);
}

TEST_CASE("load_dataset rejects duplicate keys") {
  std::istringstream in(
      "subject_id,sequence_id,frame_index,label,f0\n"
      "a,s1,0,1,0.5\n"
      "a,s1,0,2,0.5\n");
  CHECK_THROWS_WITH_AS(load_dataset(in, 1), doctest::Contains("duplicate"),
                       DataError);
}

TEST_CASE("header-only file yields an empty dataset") {
  std::istringstream in("subject_id,sequence_id,frame_index,label,f0\n");
  const Dataset ds = load_dataset(in, 1);
  CHECK(ds.empty());
}

TEST_CASE("save/load round trip preserves samples") {
  Rng rng(11);
  Dataset ds = testutil::random_dataset(rng, 3, 8, 5);
  std::ostringstream out;
  save_dataset(ds, out);
  std::istringstream in(out.str());
  const Dataset restored = load_dataset(in, 5);
  REQUIRE(restored.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(restored.samples[i].subject_id == ds.samples[i].subject_id);
    CHECK(restored.samples[i].label == ds.samples[i].label);
    CHECK(restored.samples[i].features == ds.samples[i].features);
  }
}

namespace {

Dataset from_labels(const std::vector<int>& labels) {
  Dataset ds;
  ds.feature_dim = 1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ds.samples.push_back({"a", "s1", static_cast<long>(i), {0.0}, labels[i]});
  }
  return ds;
}

// Brute-force run-length oracle for the de-duplication rule.
std::vector<long> dedup_oracle(const std::vector<int>& labels,
                               std::size_t threshold) {
  std::vector<long> kept;
  std::size_t i = 0;
  while (i < labels.size()) {
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    if (j - i > threshold) {
      kept.push_back(static_cast<long>(i));
    } else {
      for (std::size_t k = i; k < j; ++k) kept.push_back(static_cast<long>(k));
    }
    i = j;
  }
  return kept;
}

std::vector<long> kept_indices(const Dataset& ds) {
  std::vector<long> out;
  for (const auto& s : ds.samples) out.push_back(s.frame_index);
  return out;
}

}  // namespace

TEST_CASE("deduplicate worked example: [0^7, 1^2] keeps {0, 7, 8}") {
  const Dataset ds = from_labels({0, 0, 0, 0, 0, 0, 0, 1, 1});
  const Dataset out = deduplicate(ds, 5);
  CHECK(kept_indices(out) == std::vector<long>{0, 7, 8});
}

TEST_CASE("deduplicate keeps runs at exactly the threshold") {
  const Dataset ds = from_labels({2, 2, 2, 2, 2});
  CHECK(deduplicate(ds, 5).size() == 5);
}

TEST_CASE("deduplicate keeps length-1 runs") {
  const Dataset ds = from_labels({0, 1, 2, 3});
  CHECK(deduplicate(ds, 5).size() == 4);
}

TEST_CASE("deduplicate passes an empty dataset through") {
  Dataset ds;
  ds.feature_dim = 1;
  CHECK(deduplicate(ds).empty());
}

TEST_CASE("deduplicate does not merge runs across sequence boundaries") {
  Dataset ds;
  ds.feature_dim = 1;
  for (int i = 0; i < 4; ++i) ds.samples.push_back({"a", "s1", i, {0.0}, 0});
  for (int i = 0; i < 4; ++i) ds.samples.push_back({"a", "s2", i, {0.0}, 0});
  // Two runs of 4; neither exceeds the threshold even though 8 equal labels
  // are adjacent in list order.
  CHECK(deduplicate(ds, 5).size() == 8);
}

TEST_CASE("deduplicate properties against brute-force oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng.index(50);
    std::vector<int> labels(len);
    for (auto& l : labels) l = static_cast<int>(rng.index(3));
    const Dataset ds = from_labels(labels);
    const Dataset once = deduplicate(ds, 5);

    CHECK(kept_indices(once) == dedup_oracle(labels, 5));
    CHECK(once.size() <= ds.size());

    // Idempotence.
    const Dataset twice = deduplicate(once, 5);
    CHECK(kept_indices(twice) == kept_indices(once));

    // Surviving frames keep their relative order.
    auto idx = kept_indices(once);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
  }
}

TEST_CASE("generate_synthetic is deterministic") {
  SyntheticConfig cfg;
  cfg.num_subjects = 2;
  cfg.frames_per_subject = 20;
  cfg.feature_dim = 4;
  cfg.seed = 1;
  const Dataset a = generate_synthetic(cfg);
  const Dataset b = generate_synthetic(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].features == b.samples[i].features);
    CHECK(a.samples[i].label == b.samples[i].label);
  }
}

TEST_CASE("generate_synthetic zero noise puts every sample exactly on its anchor") {
  SyntheticConfig cfg;
  cfg.num_subjects = 1;
  cfg.frames_per_subject = 60;
  cfg.feature_dim = 4;
  cfg.noise_sigma = 0.0;
  cfg.seed = 3;
  const Dataset ds = generate_synthetic(cfg);
  std::map<int, std::vector<double>> anchor;
  for (const auto& s : ds.samples) {
    auto [it, inserted] = anchor.emplace(s.label, s.features);
    if (!inserted) CHECK(s.features == it->second);
    CHECK(s.features[0] ==
          doctest::Approx(cfg.anchor_spacing * s.label).epsilon(1e-15));
  }
  CHECK(anchor.size() == 6);
}

TEST_CASE("generate_synthetic imbalanced profile hits the zero fraction") {
  SyntheticConfig cfg;
  cfg.num_subjects = 5;
  cfg.frames_per_subject = 2000;
  cfg.feature_dim = 2;
  cfg.seed = 7;
  cfg.profile = LabelProfile::Imbalanced;
  const Dataset ds = generate_synthetic(cfg);
  std::size_t zeros = 0;
  for (const auto& s : ds.samples) zeros += s.label == 0 ? 1 : 0;
  const double frac = static_cast<double>(zeros) / static_cast<double>(ds.size());
  CHECK(frac == doctest::Approx(kImbalancedZeroFraction).epsilon(0.011));
}

TEST_CASE("generate_synthetic rejects zero counts") {
  SyntheticConfig cfg;
  cfg.num_subjects = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg), DomainError);
  cfg.num_subjects = 1;
  cfg.frames_per_subject = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg), DomainError);
}

TEST_CASE("decimal serialization of synthetic data is stable across runs") {
  SyntheticConfig cfg;
  cfg.num_subjects = 2;
  cfg.frames_per_subject = 10;
  cfg.feature_dim = 3;
  cfg.seed = 9;
  std::ostringstream a, b;
  save_dataset(generate_synthetic(cfg), a);
  save_dataset(generate_synthetic(cfg), b);
  CHECK(a.str() == b.str());
}
