#include <cmath>
#include <set>

#include "doctest.h"
#include "hmill/metrics.hpp"
#include "hmill/train.hpp"
#include "synthetic.hpp"

using namespace hmill;

namespace {

// Bags whose label is whether the first coordinate of any instance exceeds 0.5.
struct Toy {
  DataNode data;
  std::vector<int> labels;
};

Toy toy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DataNode> parts;
  Toy t;
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t k = 1 + rng() % 4;
    Matrix x(2, k);
    bool pos = false;
    for (std::size_t i = 0; i < k; ++i) {
      x(0, i) = synth::uniform01(rng) * 0.6;
      x(1, i) = synth::uniform01(rng);
    }
    if (rng() % 2) {
      x(0, 0) = 0.8 + 0.2 * synth::uniform01(rng);
      pos = true;
    }
    parts.push_back(DataNode::bag(DataNode::array(std::move(x)), BagIndices::from_lengths(std::vector<std::size_t>{k})));
    t.labels.push_back(pos);
  }
  t.data = merge(parts);
  return t;
}

ModelNode toy_model(const DataNode& d) {
  Prescription p;
  p.hidden = 8;
  p.seed = 3;
  return reflect_model(d, p);
}

}  // namespace

TEST_CASE("config validation") {
  TrainConfig c;
  c.validate();
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.alpha = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("plain minibatches partition the data every epoch") {
  std::vector<int> labels(23, 0);
  TrainConfig c;
  c.batch = 5;
  Rng rng(1);
  for (int e = 0; e < 3; ++e) {
    auto batches = epoch_batches(labels, 2, c, rng);
    CHECK(batches.size() == 5);
    std::multiset<std::size_t> seen;
    for (const auto& b : batches) {
      CHECK(std::is_sorted(b.begin(), b.end()));
      seen.insert(b.begin(), b.end());
    }
    CHECK(seen.size() == 23);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 23);
  }
}

TEST_CASE("balanced minibatches draw classes equally") {
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 5; ++i) labels[static_cast<std::size_t>(i * 20)] = 1;
  TrainConfig c;
  c.batch = 10;
  c.balancing = Balancing::Balanced;
  Rng rng(2);
  auto batches = epoch_batches(labels, 2, c, rng);
  CHECK(batches.size() == 10);
  for (const auto& b : batches) {
    std::size_t pos = 0;
    for (auto i : b) pos += static_cast<std::size_t>(labels[i]);
    CHECK(pos == 5);
    CHECK(b.size() == 10);
  }
}

TEST_CASE("zero learning rate leaves the model unchanged") {
  auto t = toy(40, 1);
  auto m = toy_model(t.data);
  auto before = m;
  TrainConfig c;
  c.alpha = 0;
  c.epochs = 2;
  c.batch = 16;
  train(m, t.data, t.labels, c);
  CHECK(m == before);
}

TEST_CASE("training learns an easy bag rule and is reproducible") {
  auto t = toy(300, 2);
  auto m1 = toy_model(t.data);
  auto m2 = m1;
  TrainConfig c;
  c.epochs = 40;
  c.batch = 32;
  c.alpha = 0.01;
  c.seed = 4;
  std::vector<double> seen;
  auto r1 = train(m1, t.data, t.labels, c, [&](std::size_t, double l) { seen.push_back(l); });
  auto r2 = train(m2, t.data, t.labels, c);
  CHECK(m1 == m2);
  CHECK(r1.epoch_loss == r2.epoch_loss);
  CHECK(seen == r1.epoch_loss);
  CHECK(r1.epoch_loss.back() < r1.epoch_loss.front());
  CHECK(accuracy(predict_proba(m1, t.data), t.labels) > 0.95);
}

TEST_CASE("frozen psi stays put") {
  auto t = toy(40, 3);
  auto m = toy_model(t.data);
  auto psi_before = m.as_bag().psi;
  TrainConfig c;
  c.epochs = 2;
  c.train_psi = false;
  c.alpha = 0.1;
  train(m, t.data, t.labels, c);
  CHECK(m.as_bag().psi == psi_before);
}

TEST_CASE("weighted BCE training path") {
  auto t = toy(60, 4);
  auto m = toy_model(t.data);
  TrainConfig c;
  c.loss = LossKind::WeightedBce;
  c.w0 = 0.5;
  c.w1 = 0.5;
  c.epochs = 3;
  auto r = train(m, t.data, t.labels, c);
  CHECK(r.epoch_loss.size() == 3);
  for (double l : r.epoch_loss) CHECK(std::isfinite(l));
}

TEST_CASE("non-finite loss is reported with its position") {
  auto t = toy(20, 5);
  auto m = toy_model(t.data);
  m.as_bag().layers.back().bias[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig c;
  c.batch = 10;
  try {
    train(m, t.data, t.labels, c);
    FAIL("expected NonFiniteLossError");
  } catch (const NonFiniteLossError& e) {
    CHECK(e.epoch() == 0);
    CHECK(e.batch() == 0);
  }
}

TEST_CASE("label count must match observations") {
  auto t = toy(10, 6);
  auto m = toy_model(t.data);
  std::vector<int> few(3, 0);
  CHECK_THROWS(train(m, t.data, few, TrainConfig{}));
}
