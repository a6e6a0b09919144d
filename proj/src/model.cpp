#include "cefe/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "json.hpp"

#include "cefe/errors.hpp"

namespace cefe::model {

namespace {

void check_dims(const SoftmaxModel& model, const FeatureVector& x) {
  if (x.dim != model.dim) {
    throw CefeError(ErrorCode::Shape,
                    "feature dimension " + std::to_string(x.dim) +
                        " does not match model dimension " + std::to_string(model.dim));
  }
}

std::vector<double> logits(const SoftmaxModel& model, const FeatureVector& x) {
  std::vector<double> z(model.bias);
  for (int k = 0; k < model.k; ++k) {
    const double* row = model.weights.data() + static_cast<std::size_t>(k) * model.dim;
    double acc = 0.0;
    for (const auto& [idx, val] : x.entries) acc += row[idx] * val;
    z[static_cast<std::size_t>(k)] += acc;
  }
  return z;
}

ProbDist softmax(std::vector<double> z) {
  double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return ProbDist{std::move(z)};
}

// d(mean SCE)/dz for one sample, before the 1/batch scaling:
//   mu * (p_k - [k==t])  +  beta * A * p_t * ([k==t] - p_k)
// The first term is the classic softmax-CE gradient; the second follows from
// the closed form rce = -A * (1 - p_t).
void add_sample_grad(const SoftmaxModel& model, const LabeledFeature& item,
                     const SCEConfig& cfg, double scale, Gradient& grad) {
  ProbDist p = predict(model, item.features);
  std::size_t t = static_cast<std::size_t>(item.target);
  double pt = p.probs[t];
  for (int k = 0; k < model.k; ++k) {
    std::size_t ks = static_cast<std::size_t>(k);
    double delta = ks == t ? 1.0 : 0.0;
    double dz = cfg.mu * (p.probs[ks] - delta);
    if (cfg.beta != 0.0) dz += cfg.beta * cfg.clamp_a * pt * (delta - p.probs[ks]);
    dz *= scale;
    grad.bias[ks] += dz;
    double* row = grad.weights.data() + ks * model.dim;
    for (const auto& [idx, val] : item.features.entries) row[idx] += dz * val;
  }
}

void check_training_data(const SoftmaxModel& model, const std::vector<LabeledFeature>& data) {
  if (data.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "training data is empty");
  }
  std::vector<int> counts(static_cast<std::size_t>(model.k), 0);
  for (const LabeledFeature& item : data) {
    if (item.target < 0 || item.target >= model.k) {
      throw CefeError(ErrorCode::Shape, "target class " + std::to_string(item.target) +
                                            " out of range for k=" + std::to_string(model.k));
    }
    check_dims(model, item.features);
    ++counts[static_cast<std::size_t>(item.target)];
  }
  int present = 0;
  for (int c : counts) present += c > 0 ? 1 : 0;
  if (present < 2) {
    throw CefeError(ErrorCode::MissingClass,
                    "training data must contain at least two classes");
  }
}

TrainResult train_impl(SoftmaxModel model, const std::vector<LabeledFeature>& data,
                       const TrainConfig& tc, const SCEConfig& sce) {
  tc.validate();
  sce.validate();
  check_training_data(model, data);

  std::vector<LabeledFeature> balanced;
  const std::vector<LabeledFeature>* train_set = &data;
  if (tc.oversample) {
    Rng os_rng(hash_combine(tc.seed, fnv1a64("oversample")));
    balanced = oversample(data, model.k, os_rng);
    train_set = &balanced;
  }

  const std::vector<LabeledFeature>& items = *train_set;
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(hash_combine(tc.seed, fnv1a64("shuffle")));

  TrainResult out;
  Gradient grad;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tc.batch_size)) {
      std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      grad.weights.assign(model.weights.size(), 0.0);
      grad.bias.assign(model.bias.size(), 0.0);
      double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        add_sample_grad(model, items[order[i]], sce, scale, grad);
      }
      for (std::size_t i = 0; i < model.weights.size(); ++i) {
        model.weights[i] -= tc.learning_rate * grad.weights[i];
      }
      for (std::size_t i = 0; i < model.bias.size(); ++i) {
        model.bias[i] -= tc.learning_rate * grad.bias[i];
      }
    }
    out.loss_trace.push_back(mean_sce_loss(model, items, sce));
  }
  out.model = std::move(model);
  return out;
}

void append_le_double(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

double read_le_double(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

constexpr const char* kCheckpointFormat = "cefe-softmax";
constexpr int kCheckpointVersion = 1;

}  // namespace

SoftmaxModel SoftmaxModel::zeros(int k, std::size_t dim) {
  if (k < 2) {
    throw CefeError(ErrorCode::Config, "softmax model needs at least two classes");
  }
  SoftmaxModel m;
  m.k = k;
  m.dim = dim;
  m.weights.assign(static_cast<std::size_t>(k) * dim, 0.0);
  m.bias.assign(static_cast<std::size_t>(k), 0.0);
  return m;
}

ProbDist predict(const SoftmaxModel& model, const FeatureVector& x) {
  check_dims(model, x);
  return softmax(logits(model, x));
}

Gradient grad_sce(const SoftmaxModel& model, const std::vector<LabeledFeature>& batch,
                  const SCEConfig& cfg) {
  cfg.validate();
  if (batch.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "gradient over an empty batch");
  }
  Gradient grad;
  grad.weights.assign(model.weights.size(), 0.0);
  grad.bias.assign(model.bias.size(), 0.0);
  double scale = 1.0 / static_cast<double>(batch.size());
  for (const LabeledFeature& item : batch) {
    if (item.target < 0 || item.target >= model.k) {
      throw CefeError(ErrorCode::Shape, "target class out of range");
    }
    add_sample_grad(model, item, cfg, scale, grad);
  }
  return grad;
}

double mean_sce_loss(const SoftmaxModel& model, const std::vector<LabeledFeature>& data,
                     const SCEConfig& cfg) {
  if (data.empty()) {
    throw CefeError(ErrorCode::EmptyInput, "loss over an empty dataset");
  }
  double total = 0.0;
  for (const LabeledFeature& item : data) {
    total += sce_loss(predict(model, item.features), item.target, cfg);
  }
  return total / static_cast<double>(data.size());
}

std::vector<LabeledFeature> oversample(const std::vector<LabeledFeature>& items, int k,
                                       Rng& rng) {
  if (k < 1) {
    throw CefeError(ErrorCode::Config, "oversample needs at least one class");
  }
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < items.size(); ++i) {
    int t = items[i].target;
    if (t < 0 || t >= k) {
      throw CefeError(ErrorCode::Shape, "target class " + std::to_string(t) +
                                            " out of range for k=" + std::to_string(k));
    }
    buckets[static_cast<std::size_t>(t)].push_back(i);
  }
  std::size_t majority = 0;
  for (int c = 0; c < k; ++c) {
    const auto& bucket = buckets[static_cast<std::size_t>(c)];
    if (bucket.empty()) {
      throw CefeError(ErrorCode::MissingClass,
                      "class " + std::to_string(c) + " has no examples");
    }
    majority = std::max(majority, bucket.size());
  }

  std::vector<LabeledFeature> out = items;
  for (int c = 0; c < k; ++c) {
    const auto& bucket = buckets[static_cast<std::size_t>(c)];
    for (std::size_t have = bucket.size(); have < majority; ++have) {
      out.push_back(items[bucket[rng.pick_index(bucket.size())]]);
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw CefeError(ErrorCode::Config, "epochs must be at least 1");
  if (batch_size < 1) throw CefeError(ErrorCode::Config, "batch size must be at least 1");
  if (!(learning_rate > 0.0)) {
    throw CefeError(ErrorCode::Config, "learning rate must be positive");
  }
}

TrainResult train(const std::vector<LabeledFeature>& data, int k, const TrainConfig& tc,
                  const SCEConfig& sce) {
  std::size_t dim = data.empty() ? 0 : data.front().features.dim;
  return train_impl(SoftmaxModel::zeros(k, dim), data, tc, sce);
}

TrainResult train(SoftmaxModel warm_start, const std::vector<LabeledFeature>& data,
                  const TrainConfig& tc, const SCEConfig& sce) {
  return train_impl(std::move(warm_start), data, tc, sce);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const SoftmaxModel& m = ckpt.model;
  nlohmann::json header{
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"k", m.k},
      {"dim", m.dim},
      {"seed", ckpt.seed},
      {"sce", {{"mu", ckpt.sce.mu}, {"beta", ckpt.sce.beta}, {"clamp_a", ckpt.sce.clamp_a}}},
  };
  std::string payload = header.dump();
  payload.push_back('\n');
  payload.reserve(payload.size() + 8 * (m.weights.size() + m.bias.size()));
  for (double w : m.weights) append_le_double(payload, w);
  for (double b : m.bias) append_le_double(payload, b);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CefeError(ErrorCode::Io, "cannot write checkpoint: " + path.string());
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) {
    throw CefeError(ErrorCode::Io, "short write on checkpoint: " + path.string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CefeError(ErrorCode::Io, "cannot open checkpoint: " + path.string());
  }
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::size_t newline = bytes.find('\n');
  if (newline == std::string::npos) {
    throw CefeError(ErrorCode::Parse, "checkpoint has no header line");
  }
  nlohmann::json header = nlohmann::json::parse(bytes.substr(0, newline), nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("format", "") != kCheckpointFormat) {
    throw CefeError(ErrorCode::Parse, "malformed checkpoint header");
  }
  if (header.value("version", 0) != kCheckpointVersion) {
    throw CefeError(ErrorCode::Parse, "unsupported checkpoint version");
  }

  Checkpoint ckpt;
  try {
    ckpt.model.k = header.at("k").get<int>();
    ckpt.model.dim = header.at("dim").get<std::size_t>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    const nlohmann::json& sce = header.at("sce");
    ckpt.sce.mu = sce.at("mu").get<double>();
    ckpt.sce.beta = sce.at("beta").get<double>();
    ckpt.sce.clamp_a = sce.at("clamp_a").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CefeError(ErrorCode::Parse, std::string("bad checkpoint header: ") + e.what());
  }
  if (ckpt.model.k < 2) {
    throw CefeError(ErrorCode::Parse, "checkpoint declares fewer than two classes");
  }

  std::size_t n_weights = static_cast<std::size_t>(ckpt.model.k) * ckpt.model.dim;
  std::size_t expect = 8 * (n_weights + static_cast<std::size_t>(ckpt.model.k));
  std::size_t have = bytes.size() - newline - 1;
  if (have != expect) {
    throw CefeError(ErrorCode::Parse, "checkpoint payload is " + std::to_string(have) +
                                          " bytes, expected " + std::to_string(expect));
  }
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + newline + 1;
  ckpt.model.weights.resize(n_weights);
  for (std::size_t i = 0; i < n_weights; ++i, p += 8) {
    ckpt.model.weights[i] = read_le_double(p);
  }
  ckpt.model.bias.resize(static_cast<std::size_t>(ckpt.model.k));
  for (std::size_t i = 0; i < ckpt.model.bias.size(); ++i, p += 8) {
    ckpt.model.bias[i] = read_le_double(p);
  }
  return ckpt;
}

GradCheckReport gradcheck(int trials, std::uint64_t seed, double tolerance) {
  if (trials < 1) {
    throw CefeError(ErrorCode::Config, "gradcheck needs at least one trial");
  }
  if (!(tolerance > 0.0)) {
    throw CefeError(ErrorCode::Config, "gradcheck tolerance must be positive");
  }

  constexpr double kStep = 1e-6;
  Rng rng(seed);
  GradCheckReport report;
  report.trials = trials;
  report.tolerance = tolerance;

  for (int trial = 0; trial < trials; ++trial) {
    int k = 2 + static_cast<int>(rng.next_below(3));            // 2..4 classes
    std::size_t dim = std::size_t{1} << (2 + rng.next_below(5));  // 4..64 buckets
    SoftmaxModel model = SoftmaxModel::zeros(k, dim);
    for (double& w : model.weights) w = 2.0 * rng.next_unit() - 1.0;
    for (double& b : model.bias) b = 2.0 * rng.next_unit() - 1.0;

    SCEConfig cfg;
    cfg.mu = 0.05 + rng.next_unit();
    cfg.beta = trial % 4 == 0 ? 0.0 : 0.05 + rng.next_unit();  // exercise the CE reduction
    cfg.clamp_a = -(1.0 + 3.0 * rng.next_unit());

    std::size_t batch_n = 1 + rng.pick_index(8);
    std::vector<LabeledFeature> batch(batch_n);
    std::vector<std::size_t> all_indices(dim);
    std::iota(all_indices.begin(), all_indices.end(), std::size_t{0});
    for (LabeledFeature& item : batch) {
      std::vector<std::size_t> picks = all_indices;
      rng.shuffle(picks);
      std::size_t nnz = 1 + rng.pick_index(std::min<std::size_t>(dim, 6));
      picks.resize(nnz);
      std::sort(picks.begin(), picks.end());
      item.features.dim = dim;
      double norm_sq = 0.0;
      for (std::size_t idx : picks) {
        double v = 2.0 * rng.next_unit() - 1.0;
        item.features.entries.emplace_back(idx, v);
        norm_sq += v * v;
      }
      double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
      for (auto& [idx, v] : item.features.entries) v *= inv;
      item.target = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k)));
    }

    Gradient analytic = grad_sce(model, batch, cfg);
    auto check_param = [&](double* param, double grad_value) {
      double saved = *param;
      *param = saved + kStep;
      double up = mean_sce_loss(model, batch, cfg);
      *param = saved - kStep;
      double down = mean_sce_loss(model, batch, cfg);
      *param = saved;
      double numeric = (up - down) / (2.0 * kStep);
      double denom = std::max({1.0, std::abs(grad_value), std::abs(numeric)});
      report.max_rel_err = std::max(report.max_rel_err,
                                    std::abs(grad_value - numeric) / denom);
    };
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
      check_param(&model.weights[i], analytic.weights[i]);
    }
    for (std::size_t i = 0; i < model.bias.size(); ++i) {
      check_param(&model.bias[i], analytic.bias[i]);
    }
  }

  report.passed = report.max_rel_err <= tolerance;
  return report;
}

}  // namespace cefe::model
