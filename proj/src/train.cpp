#include "hmill/train.hpp"

#include <algorithm>
#include <cmath>

namespace hmill {

void TrainConfig::validate() const {
  if (batch == 0) throw Error("batch size must be at least 1");
  if (!(alpha >= 0) || !(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0)) {
    throw Error("invalid Adam hyperparameters");
  }
  if (loss == LossKind::WeightedBce && !(w0 > 0 && w1 > 0)) {
    throw Error("loss weights must be positive");
  }
}

LossResult batch_loss(const Matrix& logits, std::span<const int> labels, const TrainConfig& cfg) {
  const Matrix probs = softmax_columns(logits);
  if (cfg.loss == LossKind::WeightedBce) {
    return weighted_binary_cross_entropy_logits(probs, labels, cfg.w0, cfg.w1);
  }
  return multiclass_cross_entropy(probs, labels);
}

std::vector<std::vector<std::size_t>> epoch_batches(std::span<const int> labels,
                                                    std::size_t classes,
                                                    const TrainConfig& cfg, Rng& rng) {
  const std::size_t n = labels.size();
  std::vector<std::vector<std::size_t>> out;
  if (n == 0) return out;

  if (cfg.balancing == Balancing::None) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < n; s += cfg.batch) {
      std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(s),
                                 order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + cfg.batch)));
      std::sort(b.begin(), b.end());
      out.push_back(std::move(b));
    }
    return out;
  }

  // Balanced: each class contributes an equal share (+-1) of every batch,
  // drawn without repetition from a reshuffled per-class pool.
  std::vector<std::vector<std::size_t>> pools(classes);
  for (std::size_t i = 0; i < n; ++i) pools[static_cast<std::size_t>(labels[i])].push_back(i);
  std::vector<std::size_t> present;
  for (std::size_t c = 0; c < classes; ++c) {
    if (!pools[c].empty()) present.push_back(c);
  }
  std::vector<std::size_t> cursor(classes, 0);
  for (auto c : present) shuffle(pools[c].begin(), pools[c].end(), rng);

  const std::size_t steps = cfg.steps_per_epoch ? cfg.steps_per_epoch : (n + cfg.batch - 1) / cfg.batch;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<std::size_t> b;
    const std::size_t per = cfg.batch / present.size();
    const std::size_t extra = cfg.batch % present.size();
    for (std::size_t t = 0; t < present.size(); ++t) {
      const std::size_t c = present[(t + s) % present.size()];
      auto& pool = pools[c];
      const std::size_t want = std::min(pool.size(), per + (t < extra ? 1 : 0));
      for (std::size_t k = 0; k < want; ++k) {
        if (cursor[c] == pool.size()) {
          shuffle(pool.begin(), pool.end(), rng);
          cursor[c] = 0;
        }
        b.push_back(pool[cursor[c]++]);
      }
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    out.push_back(std::move(b));
  }
  return out;
}

TrainResult train(ModelNode& model, const DataNode& data, std::span<const int> labels,
                  const TrainConfig& cfg, const std::function<void(std::size_t, double)>& on_epoch) {
  cfg.validate();
  const std::size_t n = nobs(data);
  if (labels.size() != n) {
    throw ShapeError(std::to_string(labels.size()) + " labels for " + std::to_string(n) + " observations");
  }
  const std::size_t classes = output_dim(model);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw Error("label " + std::to_string(y) + " outside the model's " + std::to_string(classes) + " classes");
    }
  }
  if (cfg.loss == LossKind::WeightedBce && classes != 2) {
    throw Error("weighted binary cross entropy needs a two-output model");
  }

  std::vector<double> params = flatten_parameters(model);
  const std::vector<ParamKind> kinds = parameter_kinds(model);
  AdamState adam = AdamState::for_parameters(params.size(), cfg.alpha, cfg.beta1, cfg.beta2, cfg.epsilon);
  Rng rng = make_rng(cfg.seed, "train-batches");
  TrainResult result;
  ForwardTrace trace;
  std::vector<int> sub_labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = epoch_batches(labels, classes, cfg, rng);
    double total = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& idx = batches[bi];
      const DataNode sub = slice(data, idx);
      sub_labels.clear();
      for (auto i : idx) sub_labels.push_back(labels[i]);
      const Matrix logits = forward(model, sub, trace);
      LossResult lr = batch_loss(logits, sub_labels, cfg);
      if (!std::isfinite(lr.loss) || !lr.grad_logits.all_finite()) throw NonFiniteLossError(epoch, bi);
      total += lr.loss;

      ModelNode grad = zeros_like(model);
      backward(model, sub, trace, lr.grad_logits, grad);
      std::vector<double> g = flatten_parameters(grad);
      if (!cfg.train_psi) {
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (kinds[k] == ParamKind::Psi) g[k] = 0.0;
        }
      }
      for (double v : g) {
        if (!std::isfinite(v)) throw NonFiniteLossError(epoch, bi);
      }
      adam_step(params, g, adam);
      unflatten_parameters(model, params);
    }
    const double mean = batches.empty() ? 0.0 : total / static_cast<double>(batches.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

Matrix predict_proba(const ModelNode& model, const DataNode& data) {
  return softmax_columns(forward(model, data));
}

}  // namespace hmill
