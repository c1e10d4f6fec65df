#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hmill/matrix.hpp"
#include "hmill/rng.hpp"

namespace hmill {

/// Fraction of columns whose argmax equals the label.
double accuracy(const Matrix& probs, std::span<const int> labels);

/// Unweighted mean of per-class F1 over `classes` classes, predictions by
/// argmax. A class that is neither predicted nor present scores 0.
double macro_f1(const Matrix& probs, std::span<const int> labels, std::size_t classes);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Exact ROC (x = FPR, y = TPR) from (0,0) to (1,1); tied scores move
/// together. Labels are 0/1; throws Error unless both classes occur.
std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
/// Exact PR curve (x = recall, y = precision), one point per threshold group,
/// preceded by (0, precision of the first group).
std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const int> labels);

/// Trapezoid area under the exact ROC curve.
double auroc(std::span<const double> scores, std::span<const int> labels);
/// Sum over threshold groups of (recall increment) x precision.
double auprc(std::span<const double> scores, std::span<const int> labels);

enum class CurveKind { Pr, Roc };
enum class XScale { Linear, Log };

struct CurveSpec {
  std::size_t points = 100;
  XScale scale = XScale::Linear;
};

/// Sample positions: uniform on [0,1], or log-uniform on [1/#negatives, 1].
std::vector<double> curve_grid(const CurveSpec& spec, std::size_t negatives);

/// y of a piecewise-linear curve at x. Where several points share x exactly
/// the largest y is returned; between distinct x values the segment runs from
/// the last point at the lower x to the first point at the higher x.
double interpolate_curve(std::span<const CurvePoint> curve, double x);

/// Exact curve resampled at curve_grid points.
std::vector<CurvePoint> curve(std::span<const double> scores, std::span<const int> labels,
                              const CurveSpec& spec, CurveKind kind);

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> auprc;  // binary tasks with both classes present
  std::optional<double> auroc;
};

/// Positive-class scores are row 1 of `probs` when it has two rows.
MetricsReport evaluate(const Matrix& probs, std::span<const int> labels);

/// Splits every cluster into k near-equal parts after a shuffle; fold i is
/// the union of part i over clusters. Offsets rotate between clusters so fold
/// sizes stay within one of each other.
std::vector<std::vector<std::size_t>> make_folds(const std::vector<std::vector<std::size_t>>& clusters,
                                                 std::size_t k, Rng& rng);

/// Runs score_fn(seeds, fold) for every fold, seeding all blacklisted
/// vertices outside that fold. A blacklisted vertex takes its score from the
/// run that held it out; every other vertex takes the maximum over runs.
/// score_fn must return `vertices` scores and may be called concurrently.
std::vector<double> kfold_blacklist_eval(
    std::size_t vertices, const std::vector<std::vector<std::size_t>>& clusters, std::size_t k,
    Rng& rng,
    const std::function<std::vector<double>(const std::vector<std::size_t>&, std::size_t)>& score_fn,
    std::vector<std::vector<std::size_t>>* folds_out = nullptr);

}  // namespace hmill
