#include "painreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace painreg {

double scaled_sigmoid(double z, double scale) {
  // Split on the sign of z so exp never overflows.
  if (z >= 0) {
    return scale / (1.0 + std::exp(-z));
  }
  const double ez = std::exp(z);
  return scale * ez / (1.0 + ez);
}

double scaled_sigmoid_grad(double z, double scale) {
  const double s = scaled_sigmoid(z, 1.0);
  return scale * s * (1.0 - s);
}

RegressionHead RegressionHead::init(std::size_t input_dim, std::size_t hidden_dim,
                                    Rng& rng) {
  if (input_dim == 0 || hidden_dim == 0) {
    throw DomainError("layer dimensions must be positive");
  }
  RegressionHead head;
  head.input_dim = input_dim;
  head.hidden_dim = hidden_dim;
  head.hidden_weights.resize(hidden_dim * input_dim);
  head.hidden_bias.assign(hidden_dim, 0.0);
  head.output_weights.resize(hidden_dim);
  head.output_bias = 0.0;

  const double limit1 =
      std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
  for (auto& w : head.hidden_weights) w = rng.uniform(-limit1, limit1);
  const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
  for (auto& w : head.output_weights) w = rng.uniform(-limit2, limit2);
  return head;
}

namespace {

ForwardCache forward_impl(const RegressionHead& head, std::span<const double> input,
                          Rng* dropout_rng) {
  if (input.size() != head.input_dim) {
    throw ShapeError("input dim " + std::to_string(input.size()) +
                     " != head input dim " + std::to_string(head.input_dim));
  }
  ForwardCache cache;
  cache.train_mode = dropout_rng != nullptr;
  cache.input.assign(input.begin(), input.end());
  cache.preactivation.resize(head.hidden_dim);
  cache.hidden.resize(head.hidden_dim);
  cache.dropout_mask.assign(head.hidden_dim, 1.0);

  for (std::size_t i = 0; i < head.hidden_dim; ++i) {
    double z = head.hidden_bias[i];
    const double* row = head.hidden_weights.data() + i * head.input_dim;
    for (std::size_t j = 0; j < head.input_dim; ++j) z += row[j] * input[j];
    cache.preactivation[i] = z;
    double h = head.activation == Activation::ReLU ? std::max(0.0, z) : z;
    if (dropout_rng != nullptr && head.dropout_rate > 0.0) {
      // Inverted dropout: survivors scaled at train time, eval untouched.
      if (dropout_rng->uniform() < head.dropout_rate) {
        cache.dropout_mask[i] = 0.0;
      } else {
        cache.dropout_mask[i] = 1.0 / (1.0 - head.dropout_rate);
      }
      h *= cache.dropout_mask[i];
    }
    cache.hidden[i] = h;
  }

  double logit = head.output_bias;
  for (std::size_t i = 0; i < head.hidden_dim; ++i) {
    logit += head.output_weights[i] * cache.hidden[i];
  }
  cache.logit = logit;
  cache.pred = scaled_sigmoid(logit, head.output_scale);
  return cache;
}

}  // namespace

ForwardCache forward_train(const RegressionHead& head, std::span<const double> input,
                           Rng& rng) {
  return forward_impl(head, input, &rng);
}

ForwardCache forward_eval(const RegressionHead& head, std::span<const double> input) {
  return forward_impl(head, input, nullptr);
}

HeadGradients HeadGradients::zeros(const RegressionHead& head) {
  HeadGradients g;
  g.hidden_weights.assign(head.hidden_weights.size(), 0.0);
  g.hidden_bias.assign(head.hidden_dim, 0.0);
  g.output_weights.assign(head.hidden_dim, 0.0);
  g.output_bias = 0.0;
  g.center.assign(head.hidden_dim, 0.0);
  g.center_label = -1;
  return g;
}

void HeadGradients::accumulate(const HeadGradients& other) {
  for (std::size_t i = 0; i < hidden_weights.size(); ++i) {
    hidden_weights[i] += other.hidden_weights[i];
  }
  for (std::size_t i = 0; i < hidden_bias.size(); ++i) {
    hidden_bias[i] += other.hidden_bias[i];
  }
  for (std::size_t i = 0; i < output_weights.size(); ++i) {
    output_weights[i] += other.output_weights[i];
  }
  output_bias += other.output_bias;
}

void HeadGradients::scale(double factor) {
  for (auto& v : hidden_weights) v *= factor;
  for (auto& v : hidden_bias) v *= factor;
  for (auto& v : output_weights) v *= factor;
  output_bias *= factor;
  for (auto& v : center) v *= factor;
}

HeadGradients backward(const RegressionHead& head, const ForwardCache& cache,
                       int label, const Centers& centers, const LossConfig& config) {
  if (cache.input.size() != head.input_dim || cache.hidden.size() != head.hidden_dim) {
    throw DomainError("forward cache does not match head dimensions");
  }

  HeadGradients g = HeadGradients::zeros(head);
  g.center_label = label;

  // Output path: d loss / d logit.
  const double dloss_dpred =
      regression_grad(cache.pred, static_cast<double>(label), config);
  const double dlogit = dloss_dpred * scaled_sigmoid_grad(cache.logit, head.output_scale);
  for (std::size_t i = 0; i < head.hidden_dim; ++i) {
    g.output_weights[i] = dlogit * cache.hidden[i];
  }
  g.output_bias = dlogit;

  // Gradient at the hidden features: regression path plus the center term,
  // which is applied to the same (post-dropout) features the output layer sees.
  const auto cg = center_loss_grads(cache.hidden, label, centers, config.center_norm);
  std::vector<double> dhidden(head.hidden_dim);
  for (std::size_t i = 0; i < head.hidden_dim; ++i) {
    dhidden[i] = dlogit * head.output_weights[i] +
                 config.center_weight * cg.wrt_x[i];
    g.center[i] = config.center_weight * cg.wrt_center[i];
  }

  // Back through dropout and the activation.
  for (std::size_t i = 0; i < head.hidden_dim; ++i) {
    double delta = dhidden[i];
    if (cache.train_mode) delta *= cache.dropout_mask[i];
    if (head.activation == Activation::ReLU && cache.preactivation[i] <= 0.0) {
      delta = 0.0;
    }
    g.hidden_bias[i] = delta;
    double* grow = g.hidden_weights.data() + i * head.input_dim;
    for (std::size_t j = 0; j < head.input_dim; ++j) {
      grow[j] = delta * cache.input[j];
    }
  }
  return g;
}

namespace {

void check_finite_or_throw(double loss, long iteration) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite loss at iteration " + std::to_string(iteration),
                          iteration);
  }
}

}  // namespace

TrainedModel train(const Dataset& dataset, const TrainConfig& config) {
  if (dataset.empty()) throw DomainError("cannot train on an empty dataset");
  if (config.learning_rate <= 0) throw DomainError("learning_rate must be positive");
  if (config.iterations < 0) throw DomainError("iterations must be nonnegative");
  if (config.batch_size == 0) throw DomainError("batch_size must be positive");
  if (config.momentum < 0 || config.momentum >= 1) {
    throw DomainError("momentum must be in [0, 1)");
  }
  if (config.dropout_rate < 0 || config.dropout_rate >= 1) {
    throw DomainError("dropout_rate must be in [0, 1)");
  }

  Rng rng(config.seed);
  TrainedModel model;
  model.head = RegressionHead::init(dataset.feature_dim, config.hidden_dim, rng);
  model.head.dropout_rate = config.dropout_rate;
  model.head.activation = config.activation;
  model.head.output_scale = config.output_scale;
  model.centers = Centers::zeros(dataset.num_classes, config.hidden_dim);

  const ClassIndex index = build_class_index(dataset);

  HeadGradients velocity = HeadGradients::zeros(model.head);
  std::vector<std::vector<double>> center_velocity(
      dataset.num_classes, std::vector<double>(config.hidden_dim, 0.0));
  bool centers_initialized = config.center_init == CenterInit::Zero;

  for (long iter = 0; iter < config.iterations; ++iter) {
    const Batch batch = config.sampler_kind == SamplerKind::Balanced
                            ? next_balanced_batch(index, config.batch_size, rng)
                            : next_uniform_batch(dataset.size(), config.batch_size, rng);

    if (!centers_initialized) {
      // First-batch class means as the starting centers.
      std::vector<std::size_t> counts(dataset.num_classes, 0);
      std::vector<ForwardCache> caches;
      caches.reserve(batch.size());
      for (std::size_t pos : batch) {
        caches.push_back(forward_eval(model.head, dataset.samples[pos].features));
      }
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const int k = dataset.samples[batch[b]].label;
        ++counts[k];
        for (std::size_t i = 0; i < config.hidden_dim; ++i) {
          model.centers.rows[k][i] += caches[b].hidden[i];
        }
      }
      for (int k = 0; k < dataset.num_classes; ++k) {
        if (counts[k] == 0) continue;
        for (auto& v : model.centers.rows[k]) v /= static_cast<double>(counts[k]);
      }
      centers_initialized = true;
    }

    HeadGradients grads = HeadGradients::zeros(model.head);
    std::vector<std::vector<double>> center_grads(
        dataset.num_classes, std::vector<double>(config.hidden_dim, 0.0));
    double sum_total = 0.0, sum_reg = 0.0, sum_center = 0.0;

    for (std::size_t pos : batch) {
      const Sample& s = dataset.samples[pos];
      const ForwardCache cache = forward_train(model.head, s.features, rng);
      const JointLossParts parts =
          joint_loss(cache.pred, cache.hidden, s.label, model.centers, config.loss);
      sum_total += parts.total;
      sum_reg += parts.regression;
      sum_center += parts.center;

      HeadGradients g = backward(model.head, cache, s.label, model.centers, config.loss);
      grads.accumulate(g);
      for (std::size_t i = 0; i < config.hidden_dim; ++i) {
        center_grads[s.label][i] += g.center[i];
      }
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    check_finite_or_throw(sum_total * inv_n, iter);

    // SGD with optional classical momentum; batch-averaged gradients.
    auto step = [&](double& param, double& vel, double grad) {
      vel = config.momentum * vel - config.learning_rate * grad * inv_n;
      param += vel;
    };
    for (std::size_t i = 0; i < model.head.hidden_weights.size(); ++i) {
      step(model.head.hidden_weights[i], velocity.hidden_weights[i],
           grads.hidden_weights[i]);
    }
    for (std::size_t i = 0; i < model.head.hidden_dim; ++i) {
      step(model.head.hidden_bias[i], velocity.hidden_bias[i], grads.hidden_bias[i]);
      step(model.head.output_weights[i], velocity.output_weights[i],
           grads.output_weights[i]);
    }
    step(model.head.output_bias, velocity.output_bias, grads.output_bias);
    for (int k = 0; k < dataset.num_classes; ++k) {
      for (std::size_t i = 0; i < config.hidden_dim; ++i) {
        step(model.centers.rows[k][i], center_velocity[k][i], center_grads[k][i]);
      }
    }

    if (config.log_every > 0 &&
        (iter % config.log_every == 0 || iter + 1 == config.iterations)) {
      model.training_log.push_back({iter, sum_total * inv_n, sum_reg * inv_n,
                                    sum_center * inv_n});
    }
  }
  return model;
}

std::vector<double> predict(const TrainedModel& model, std::span<const Sample> samples) {
  std::vector<double> preds;
  preds.reserve(samples.size());
  for (const Sample& s : samples) {
    preds.push_back(forward_eval(model.head, s.features).pred);
  }
  return preds;
}

namespace {

const char* activation_name(Activation a) {
  return a == Activation::ReLU ? "relu" : "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "identity") return Activation::Identity;
  throw DataError("unknown activation '" + name + "'");
}

const char* norm_name(CenterNorm n) { return n == CenterNorm::L1 ? "l1" : "l2"; }

CenterNorm norm_from_name(const std::string& name) {
  if (name == "l1") return CenterNorm::L1;
  if (name == "l2") return CenterNorm::L2;
  throw DataError("unknown center norm '" + name + "'");
}

const char* kind_name(RegressionKind k) {
  return k == RegressionKind::MSE ? "mse" : "smooth_l1";
}

RegressionKind kind_from_name(const std::string& name) {
  if (name == "mse") return RegressionKind::MSE;
  if (name == "smooth_l1") return RegressionKind::SmoothL1;
  throw DataError("unknown regression kind '" + name + "'");
}

}  // namespace

std::string checkpoint_to_json(const TrainedModel& model, const TrainConfig& config) {
  nlohmann::json j;
  j["version"] = 1;
  j["dims"] = {{"input_dim", model.head.input_dim},
               {"hidden_dim", model.head.hidden_dim},
               {"num_classes", model.centers.rows.size()},
               {"output_scale", model.head.output_scale}};
  j["activation"] = activation_name(model.head.activation);
  j["dropout_rate"] = model.head.dropout_rate;
  j["hidden_weights"] = model.head.hidden_weights;
  j["hidden_bias"] = model.head.hidden_bias;
  j["output_weights"] = model.head.output_weights;
  j["output_bias"] = model.head.output_bias;
  j["centers"] = model.centers.rows;
  j["loss"] = {{"t", config.loss.turning_point},
               {"lambda", config.loss.center_weight},
               {"norm", norm_name(config.loss.center_norm)},
               {"kind", kind_name(config.loss.regression_kind)}};
  j["train_config"] = {{"learning_rate", config.learning_rate},
                       {"iterations", config.iterations},
                       {"batch_size", config.batch_size},
                       {"momentum", config.momentum},
                       {"seed", config.seed},
                       {"sampler", config.sampler_kind == SamplerKind::Balanced
                                       ? "balanced"
                                       : "uniform"}};
  return j.dump(2);
}

TrainedModel checkpoint_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("version", 0) != 1) throw DataError("unsupported checkpoint version");
  TrainedModel model;
  model.head.input_dim = j["dims"]["input_dim"].get<std::size_t>();
  model.head.hidden_dim = j["dims"]["hidden_dim"].get<std::size_t>();
  model.head.output_scale = j["dims"]["output_scale"].get<double>();
  model.head.activation = activation_from_name(j["activation"].get<std::string>());
  model.head.dropout_rate = j["dropout_rate"].get<double>();
  model.head.hidden_weights = j["hidden_weights"].get<std::vector<double>>();
  model.head.hidden_bias = j["hidden_bias"].get<std::vector<double>>();
  model.head.output_weights = j["output_weights"].get<std::vector<double>>();
  model.head.output_bias = j["output_bias"].get<double>();
  model.centers.rows = j["centers"].get<std::vector<std::vector<double>>>();
  model.centers.dim = model.head.hidden_dim;

  if (model.head.hidden_weights.size() !=
          model.head.hidden_dim * model.head.input_dim ||
      model.head.hidden_bias.size() != model.head.hidden_dim ||
      model.head.output_weights.size() != model.head.hidden_dim) {
    throw DataError("checkpoint parameter arrays do not match dims");
  }
  return model;
}

void save_checkpoint(const TrainedModel& model, const TrainConfig& config,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << checkpoint_to_json(model, config) << "\n";
}

TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace painreg
