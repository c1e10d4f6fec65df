#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hmill/datanode.hpp"
#include "hmill/error.hpp"
#include "hmill/model.hpp"
#include "hmill/nn.hpp"

namespace hmill {

enum class LossKind { CrossEntropy, WeightedBce };
enum class Balancing { None, Balanced };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch = 100;
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LossKind loss = LossKind::CrossEntropy;
  double w0 = 0.9;  // weighted BCE: weight of negatives
  double w1 = 0.1;  // weighted BCE: weight of positives
  std::uint64_t seed = 0;
  Balancing balancing = Balancing::None;
  /// Minibatches per epoch in balanced mode; 0 means ceil(n / batch).
  std::size_t steps_per_epoch = 0;
  bool train_psi = true;

  /// Throws Error on nonsensical settings.
  void validate() const;
};

/// Raised when a minibatch produces a NaN or infinite loss.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(std::size_t epoch, std::size_t batch)
      : Error("non-finite loss in epoch " + std::to_string(epoch) + ", minibatch " +
              std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

/// Loss and dL/dlogits of one batch under the configured loss.
LossResult batch_loss(const Matrix& logits, std::span<const int> labels, const TrainConfig& cfg);

/// Index sets of the minibatches of one epoch (each sorted ascending).
std::vector<std::vector<std::size_t>> epoch_batches(std::span<const int> labels,
                                                    std::size_t classes,
                                                    const TrainConfig& cfg, Rng& rng);

/// Minibatch Adam on `model`, in place. `on_epoch(epoch, loss)` is called
/// after each epoch.
TrainResult train(ModelNode& model, const DataNode& data, std::span<const int> labels,
                  const TrainConfig& cfg,
                  const std::function<void(std::size_t, double)>& on_epoch = {});

/// softmax_columns(forward(model, data)).
Matrix predict_proba(const ModelNode& model, const DataNode& data);

}  // namespace hmill
