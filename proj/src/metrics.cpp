#include "hmill/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hmill/error.hpp"
#include "hmill/io.hpp"

namespace hmill {

namespace {

std::size_t argmax_col(const Matrix& m, std::size_t j) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < m.rows(); ++r) {
    if (m(r, j) > m(best, j)) best = r;
  }
  return best;
}

void check_binary(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("binary labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  if (pos == 0 || pos == labels.size()) {
    throw Error("ROC/PR metrics are undefined unless both classes are present");
  }
}

// Cumulative (tp, fp) after each group of equal scores, highest score first.
struct Group {
  double tp;
  double fp;
};

std::vector<Group> threshold_groups(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Group> out;
  double tp = 0;
  double fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (labels[order[i]]) {
      tp += 1;
    } else {
      fp += 1;
    }
    if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) out.push_back({tp, fp});
  }
  return out;
}

}  // namespace

double accuracy(const Matrix& probs, std::span<const int> labels) {
  if (probs.cols() != labels.size()) throw ShapeError("probabilities and labels differ in length");
  if (labels.empty()) throw Error("accuracy of an empty set");
  std::size_t hit = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    hit += argmax_col(probs, j) == static_cast<std::size_t>(labels[j]) ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double macro_f1(const Matrix& probs, std::span<const int> labels, std::size_t classes) {
  if (probs.cols() != labels.size()) throw ShapeError("probabilities and labels differ in length");
  if (classes == 0) throw Error("macro-F1 needs at least one class");
  std::vector<double> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto pred = argmax_col(probs, j);
    const auto truth = static_cast<std::size_t>(labels[j]);
    if (pred == truth) {
      tp[truth] += 1;
    } else {
      if (pred < classes) fp[pred] += 1;
      if (truth < classes) fn[truth] += 1;
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    sum += denom > 0 ? 2 * tp[c] / denom : 0.0;
  }
  return sum / static_cast<double>(classes);
}

std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const auto groups = threshold_groups(scores, labels);
  const double p = groups.back().tp;
  const double n = groups.back().fp;
  std::vector<CurvePoint> out{{0.0, 0.0}};
  for (const auto& g : groups) out.push_back({g.fp / n, g.tp / p});
  return out;
}

std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const auto groups = threshold_groups(scores, labels);
  const double p = groups.back().tp;
  std::vector<CurvePoint> out;
  out.push_back({0.0, groups.front().tp / (groups.front().tp + groups.front().fp)});
  for (const auto& g : groups) out.push_back({g.tp / p, g.tp / (g.tp + g.fp)});
  return out;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const auto c = roc_curve(scores, labels);
  double area = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) area += (c[i].x - c[i - 1].x) * (c[i].y + c[i - 1].y) / 2;
  return area;
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  const auto c = pr_curve(scores, labels);
  double area = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) area += (c[i].x - c[i - 1].x) * c[i].y;
  return area;
}

std::vector<double> curve_grid(const CurveSpec& spec, std::size_t negatives) {
  if (spec.points < 2) throw Error("a curve needs at least two points");
  std::vector<double> xs(spec.points);
  const double last = static_cast<double>(spec.points - 1);
  if (spec.scale == XScale::Linear) {
    for (std::size_t i = 0; i < spec.points; ++i) xs[i] = static_cast<double>(i) / last;
  } else {
    if (negatives == 0) throw Error("log-scale curve needs at least one negative");
    const double lo = std::log(1.0 / static_cast<double>(negatives));
    for (std::size_t i = 0; i < spec.points; ++i) xs[i] = std::exp(lo * (1.0 - static_cast<double>(i) / last));
    xs.back() = 1.0;
    xs.front() = 1.0 / static_cast<double>(negatives);
  }
  return xs;
}

double interpolate_curve(std::span<const CurvePoint> c, double x) {
  if (c.empty()) throw Error("interpolating an empty curve");
  if (x <= c.front().x) {
    double y = c.front().y;
    for (const auto& p : c) {
      if (p.x == c.front().x) y = std::max(y, p.y);
    }
    return y;
  }
  if (x >= c.back().x) {
    double y = c.back().y;
    for (const auto& p : c) {
      if (p.x == c.back().x) y = std::max(y, p.y);
    }
    return y;
  }
  bool exact = false;
  double best = 0.0;
  for (const auto& p : c) {
    if (p.x == x) {
      best = exact ? std::max(best, p.y) : p.y;
      exact = true;
    }
  }
  if (exact) return best;
  // Last point left of x and first point right of x.
  std::size_t a = 0;
  while (a + 1 < c.size() && c[a + 1].x < x) ++a;
  std::size_t b = a + 1;
  const double t = (x - c[a].x) / (c[b].x - c[a].x);
  return c[a].y + t * (c[b].y - c[a].y);
}

std::vector<CurvePoint> curve(std::span<const double> scores, std::span<const int> labels,
                              const CurveSpec& spec, CurveKind kind) {
  const auto exact = kind == CurveKind::Roc ? roc_curve(scores, labels) : pr_curve(scores, labels);
  std::size_t negatives = 0;
  for (int y : labels) negatives += y == 0 ? 1 : 0;
  std::vector<CurvePoint> out;
  for (double x : curve_grid(spec, negatives)) out.push_back({x, interpolate_curve(exact, x)});
  return out;
}

MetricsReport evaluate(const Matrix& probs, std::span<const int> labels) {
  MetricsReport r;
  r.accuracy = accuracy(probs, labels);
  r.macro_f1 = macro_f1(probs, labels, probs.rows());
  if (probs.rows() == 2) {
    const auto scores = probs.row(1);
    const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
    if (has_pos && has_neg) {
      r.auroc = auroc(scores, labels);
      r.auprc = auprc(scores, labels);
    }
  }
  return r;
}

std::vector<std::vector<std::size_t>> make_folds(const std::vector<std::vector<std::size_t>>& clusters,
                                                 std::size_t k, Rng& rng) {
  if (k < 2) throw Error("k-fold evaluation needs k >= 2");
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t offset = 0;
  for (const auto& cluster : clusters) {
    std::vector<std::size_t> members = cluster;
    shuffle(members.begin(), members.end(), rng);
    for (std::size_t t = 0; t < members.size(); ++t) folds[(t + offset) % k].push_back(members[t]);
    offset = (offset + members.size()) % k;
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<double> kfold_blacklist_eval(
    std::size_t vertices, const std::vector<std::vector<std::size_t>>& clusters, std::size_t k,
    Rng& rng,
    const std::function<std::vector<double>(const std::vector<std::size_t>&, std::size_t)>& score_fn,
    std::vector<std::vector<std::size_t>>* folds_out) {
  const auto folds = make_folds(clusters, k, rng);
  std::vector<int> fold_of(vertices, -1);
  for (std::size_t i = 0; i < k; ++i) {
    for (auto v : folds[i]) {
      if (v >= vertices) throw Error("blacklisted vertex index out of range");
      if (fold_of[v] != -1) throw Error("blacklist clusters overlap");
      fold_of[v] = static_cast<int>(i);
    }
  }
  std::vector<std::vector<double>> runs(k);
  parallel_for(k, [&](std::size_t i) {
    std::vector<std::size_t> seeds;
    for (std::size_t f = 0; f < k; ++f) {
      if (f != i) seeds.insert(seeds.end(), folds[f].begin(), folds[f].end());
    }
    std::sort(seeds.begin(), seeds.end());
    runs[i] = score_fn(seeds, i);
    if (runs[i].size() != vertices) throw ShapeError("score function returned wrong length");
  });
  std::vector<double> out(vertices);
  for (std::size_t v = 0; v < vertices; ++v) {
    if (fold_of[v] >= 0) {
      out[v] = runs[static_cast<std::size_t>(fold_of[v])][v];
    } else {
      double m = runs[0][v];
      for (std::size_t i = 1; i < k; ++i) m = std::max(m, runs[i][v]);
      out[v] = m;
    }
  }
  if (folds_out) *folds_out = folds;
  return out;
}

}  // namespace hmill
