#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "painreg/data.hpp"
#include "painreg/losses.hpp"
#include "painreg/rng.hpp"
#include "painreg/sampler.hpp"

namespace painreg {

enum class Activation { ReLU, Identity };

// Two-layer regression head: hidden FC (with dropout) -> scalar FC -> scaled
// sigmoid onto (0, S).
struct RegressionHead {
  std::size_t input_dim = 512;
  std::size_t hidden_dim = 50;
  std::vector<double> hidden_weights;  // hidden_dim x input_dim, row-major
  std::vector<double> hidden_bias;     // hidden_dim
  std::vector<double> output_weights;  // hidden_dim
  double output_bias = 0.0;
  double dropout_rate = 0.5;
  Activation activation = Activation::ReLU;
  double output_scale = 5.0;

  // Glorot-uniform weights, zero biases.
  static RegressionHead init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
};

double scaled_sigmoid(double z, double scale = 5.0);
double scaled_sigmoid_grad(double z, double scale = 5.0);

struct ForwardCache {
  std::vector<double> input;
  std::vector<double> preactivation;  // W1*input + b1
  std::vector<double> hidden;         // post activation and dropout
  std::vector<double> dropout_mask;   // per-unit keep scale (1/(1-rate) or 0)
  double logit = 0.0;                 // w.hidden + b
  double pred = 0.0;
  bool train_mode = false;
};

// Train mode draws a dropout mask from rng; Eval applies no dropout.
ForwardCache forward_train(const RegressionHead& head, std::span<const double> input,
                           Rng& rng);
ForwardCache forward_eval(const RegressionHead& head, std::span<const double> input);

struct HeadGradients {
  std::vector<double> hidden_weights;
  std::vector<double> hidden_bias;
  std::vector<double> output_weights;
  double output_bias = 0.0;
  std::vector<double> center;  // wrt the active center row
  int center_label = 0;

  static HeadGradients zeros(const RegressionHead& head);
  void accumulate(const HeadGradients& other);
  void scale(double factor);
};

// Exact gradients of the joint loss wrt all head parameters and the active
// center row. Respects the dropout mask stored in the cache.
HeadGradients backward(const RegressionHead& head, const ForwardCache& cache,
                       int label, const Centers& centers, const LossConfig& config);

enum class CenterInit { Zero, FirstBatchMeans };

struct TrainConfig {
  double learning_rate = 0.0001;
  long iterations = 5000;
  std::size_t batch_size = 36;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  LossConfig loss;
  SamplerKind sampler_kind = SamplerKind::Balanced;
  std::size_t hidden_dim = 50;
  double dropout_rate = 0.5;
  Activation activation = Activation::ReLU;
  double output_scale = 5.0;
  CenterInit center_init = CenterInit::Zero;
  long log_every = 100;
};

struct TrainLogEntry {
  long iteration = 0;
  double total = 0.0;
  double regression = 0.0;
  double center = 0.0;
};

struct TrainedModel {
  RegressionHead head;
  Centers centers;
  std::vector<TrainLogEntry> training_log;
};

// SGD over `iterations` minibatches; parameters and centers updated jointly.
// Deterministic given config.seed. Throws DivergenceError on non-finite loss.
TrainedModel train(const Dataset& dataset, const TrainConfig& config);

std::vector<double> predict(const TrainedModel& model,
                            std::span<const Sample> samples);

// Checkpoint (de)serialization; versioned JSON with full parameter arrays.
std::string checkpoint_to_json(const TrainedModel& model, const TrainConfig& config);
TrainedModel checkpoint_from_json(const std::string& text);
void save_checkpoint(const TrainedModel& model, const TrainConfig& config,
                     const std::string& path);
TrainedModel load_checkpoint(const std::string& path);

}  // namespace painreg
