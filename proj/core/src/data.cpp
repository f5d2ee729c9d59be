#include "painreg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "painreg/rng.hpp"

namespace painreg {

QuantizationMap QuantizationMap::default_map() {
  QuantizationMap m;
  for (int raw = 0; raw <= kRawLabelMax; ++raw) {
    if (raw <= 3) {
      m.table[raw] = raw;
    } else if (raw <= 5) {
      m.table[raw] = 4;
    } else {
      m.table[raw] = 5;
    }
  }
  return m;
}

void QuantizationMap::validate(int num_classes) const {
  int prev = 0;
  for (int raw = 0; raw <= kRawLabelMax; ++raw) {
    const int q = table[raw];
    if (q < 0 || q >= num_classes) {
      throw DomainError("quantization map value " + std::to_string(q) +
                        " out of range [0, " + std::to_string(num_classes - 1) +
                        "] at raw " + std::to_string(raw));
    }
    if (q < prev) {
      throw DomainError("quantization map not monotone at raw " +
                        std::to_string(raw));
    }
    prev = q;
  }
}

std::string QuantizationMap::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (int q : table) j.push_back(q);
  return j.dump();
}

QuantizationMap QuantizationMap::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array() || j.size() != kRawLabelMax + 1) {
    throw DataError("quantization map must be a JSON array of 16 integers");
  }
  QuantizationMap m;
  for (int i = 0; i <= kRawLabelMax; ++i) m.table[i] = j[i].get<int>();
  m.validate();
  return m;
}

int quantize_label(int raw, const QuantizationMap& map) {
  if (raw < 0 || raw > kRawLabelMax) {
    throw DomainError("raw label " + std::to_string(raw) +
                      " outside [0, 15]");
  }
  return map.table[raw];
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& why) {
  throw DataError("parse error at line " + std::to_string(line_no) + ": " + why);
}

}  // namespace

Dataset load_dataset(std::istream& in, std::size_t feature_dim, int num_classes) {
  if (feature_dim == 0) throw DomainError("feature_dim must be positive");
  Dataset ds;
  ds.feature_dim = feature_dim;
  ds.num_classes = num_classes;

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("missing CSV header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("subject_id,sequence_id,frame_index,label", 0) != 0) {
    parse_fail(line_no, "unexpected header");
  }

  const std::size_t expected_cols = 4 + feature_dim;
  std::set<std::tuple<std::string, std::string, long>> seen;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != expected_cols) {
      parse_fail(line_no, "expected " + std::to_string(expected_cols) +
                              " columns, got " + std::to_string(cols.size()));
    }
    Sample s;
    s.subject_id = cols[0];
    s.sequence_id = cols[1];
    try {
      s.frame_index = std::stol(cols[2]);
      s.label = std::stoi(cols[3]);
    } catch (const std::exception&) {
      parse_fail(line_no, "bad frame_index or label");
    }
    if (s.frame_index < 0) parse_fail(line_no, "negative frame_index");
    if (s.label < 0 || s.label >= num_classes) {
      parse_fail(line_no, "label " + std::to_string(s.label) +
                              " outside [0, " + std::to_string(num_classes - 1) + "]");
    }
    s.features.resize(feature_dim);
    for (std::size_t i = 0; i < feature_dim; ++i) {
      try {
        s.features[i] = std::stod(cols[4 + i]);
      } catch (const std::exception&) {
        parse_fail(line_no, "bad feature value '" + cols[4 + i] + "'");
      }
      if (!std::isfinite(s.features[i])) {
        parse_fail(line_no, "non-finite feature f" + std::to_string(i));
      }
    }
    auto key = std::make_tuple(s.subject_id, s.sequence_id, s.frame_index);
    if (!seen.insert(key).second) {
      throw DataError("duplicate key (" + s.subject_id + ", " + s.sequence_id +
                      ", " + std::to_string(s.frame_index) + ") at line " +
                      std::to_string(line_no));
    }
    ds.samples.push_back(std::move(s));
  }
  validate_dataset(ds);
  return ds;
}

Dataset load_dataset(const std::string& path, std::size_t feature_dim,
                     int num_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return load_dataset(in, feature_dim, num_classes);
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_dataset(const Dataset& dataset, std::ostream& out) {
  out << "subject_id,sequence_id,frame_index,label";
  for (std::size_t i = 0; i < dataset.feature_dim; ++i) out << ",f" << i;
  out << "\n";
  for (const auto& s : dataset.samples) {
    out << s.subject_id << ',' << s.sequence_id << ',' << s.frame_index << ','
        << s.label;
    for (double f : s.features) out << ',' << format_double(f);
    out << "\n";
  }
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  save_dataset(dataset, out);
}

void validate_dataset(const Dataset& dataset) {
  std::map<std::pair<std::string, std::string>, long> last_frame;
  for (const auto& s : dataset.samples) {
    if (s.features.size() != dataset.feature_dim) {
      throw ShapeError("sample feature dim " + std::to_string(s.features.size()) +
                       " != dataset dim " + std::to_string(dataset.feature_dim));
    }
    if (s.label < 0 || s.label >= dataset.num_classes) {
      throw DomainError("label out of range");
    }
    auto key = std::make_pair(s.subject_id, s.sequence_id);
    auto it = last_frame.find(key);
    if (it != last_frame.end() && s.frame_index <= it->second) {
      throw DataError("frame_index not strictly increasing within " +
                      s.subject_id + "/" + s.sequence_id);
    }
    last_frame[key] = s.frame_index;
  }
}

Dataset deduplicate(const Dataset& dataset, std::size_t run_threshold) {
  if (run_threshold == 0) throw DomainError("run_threshold must be positive");
  Dataset out;
  out.feature_dim = dataset.feature_dim;
  out.num_classes = dataset.num_classes;

  const auto& samples = dataset.samples;
  std::size_t i = 0;
  while (i < samples.size()) {
    // Extend the maximal run of equal labels within one (subject, sequence).
    std::size_t j = i + 1;
    while (j < samples.size() && samples[j].subject_id == samples[i].subject_id &&
           samples[j].sequence_id == samples[i].sequence_id &&
           samples[j].label == samples[i].label) {
      ++j;
    }
    const std::size_t run_len = j - i;
    if (run_len > run_threshold) {
      out.samples.push_back(samples[i]);
    } else {
      for (std::size_t k = i; k < j; ++k) out.samples.push_back(samples[k]);
    }
    i = j;
  }
  return out;
}

Dataset generate_synthetic(const SyntheticConfig& config) {
  if (config.num_subjects == 0) throw DomainError("num_subjects must be positive");
  if (config.frames_per_subject == 0) {
    throw DomainError("frames_per_subject must be positive");
  }
  if (config.feature_dim == 0) throw DomainError("feature_dim must be positive");
  if (config.noise_sigma < 0) throw DomainError("noise_sigma must be nonnegative");
  if (config.num_classes < 2) throw DomainError("num_classes must be >= 2");
  if (config.anchor_spacing <= 0) throw DomainError("anchor_spacing must be positive");
  if (config.anchor_offset_sigma < 0) {
    throw DomainError("anchor_offset_sigma must be nonnegative");
  }

  const std::size_t d = config.feature_dim;
  const int k_classes = config.num_classes;

  // Class anchors: coordinate 0 carries the intensity exactly, the remaining
  // coordinates get fixed per-class offsets so classes are separated in more
  // than one direction. The anchor seed is a constant so datasets drawn with
  // different seeds share one underlying signal.
  Rng anchor_rng(0x616e63686f72ULL);
  std::vector<std::vector<double>> anchors(k_classes, std::vector<double>(d, 0.0));
  for (int k = 0; k < k_classes; ++k) {
    anchors[k][0] = config.anchor_spacing * static_cast<double>(k);
    for (std::size_t j = 1; j < d; ++j) {
      anchors[k][j] = config.anchor_offset_sigma * anchor_rng.normal();
    }
  }

  Dataset ds;
  ds.feature_dim = d;
  ds.num_classes = k_classes;
  ds.samples.reserve(config.num_subjects * config.frames_per_subject);

  Rng rng(derive_seed(config.seed, "frames"));
  for (std::size_t subj = 0; subj < config.num_subjects; ++subj) {
    const std::string subject_id = "subj" + std::to_string(subj);
    for (std::size_t f = 0; f < config.frames_per_subject; ++f) {
      Sample s;
      s.subject_id = subject_id;
      s.sequence_id = "seq0";
      s.frame_index = static_cast<long>(f);
      if (config.profile == LabelProfile::Balanced) {
        s.label = static_cast<int>(f % static_cast<std::size_t>(k_classes));
      } else {
        if (rng.uniform() < kImbalancedZeroFraction) {
          s.label = 0;
        } else {
          s.label = 1 + static_cast<int>(rng.index(k_classes - 1));
        }
      }
      s.features.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        double noise = config.noise_sigma > 0 ? config.noise_sigma * rng.normal() : 0.0;
        s.features[j] = anchors[s.label][j] + noise;
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace painreg
