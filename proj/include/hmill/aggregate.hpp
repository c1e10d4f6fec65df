#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hmill/datanode.hpp"
#include "hmill/matrix.hpp"

namespace hmill {

/// Numerically stable log(1 + exp(rho)).
double softplus_stable(double rho);
/// rho such that softplus(rho) = r, for r > 0.
double softplus_inverse(double r);
double sigmoid(double x);

struct MaxAgg {
  friend bool operator==(const MaxAgg&, const MaxAgg&) = default;
};
struct MeanAgg {
  friend bool operator==(const MeanAgg&, const MeanAgg&) = default;
};
/// Log-sum-exp with per-dimension sharpness r = softplus(rho).
struct LseAgg {
  std::vector<double> rho;
  friend bool operator==(const LseAgg&, const LseAgg&) = default;
};
/// Normalized p-norm with per-dimension p = 1 + softplus(rho_p) and centre c.
struct PNormAgg {
  std::vector<double> rho_p;
  std::vector<double> c;
  friend bool operator==(const PNormAgg&, const PNormAgg&) = default;
};

using AggComponent = std::variant<MaxAgg, MeanAgg, LseAgg, PNormAgg>;

enum class AggKind { Max, Mean, Lse, PNorm };

std::string to_string(AggKind k);
/// Parses a comma separated list such as "max,mean,lse,pnorm".
std::vector<AggKind> parse_agg_kinds(const std::string& list);

/// Concatenation [g_1 | ... | g_q] of element-wise aggregations over
/// m-dimensional instances; output dimension q * m.
struct AggregationSpec {
  std::size_t dim = 0;
  std::vector<AggComponent> components;

  /// Parameters start at r = 1, p = 2, c = 0.
  static AggregationSpec make(std::span<const AggKind> kinds, std::size_t dim);
  static AggregationSpec all_four(std::size_t dim);

  std::size_t output_dim() const noexcept { return dim * components.size(); }
  std::size_t parameter_count() const;

  friend bool operator==(const AggregationSpec&, const AggregationSpec&) = default;
};

/// Log-sum-exp of `x` with sharpness r > 0, shifted by max(x).
double lse_value(std::span<const double> x, double r);
/// Normalized p-norm; `w` empty means unit weights.
double pnorm_value(std::span<const double> x, std::span<const double> w, double p, double c);

struct AggOutput {
  Matrix y;                          // (q*m) x B
  std::vector<std::uint8_t> empty;   // 1 for empty bags; their columns are zero
};

/// Aggregates the columns of `x` (m x N) per bag. `weights`, when non-null,
/// holds one positive weight per column; max and lse ignore it.
AggOutput agg_segment(const AggregationSpec& spec, const Matrix& x, const BagIndices& bags,
                      const std::vector<double>* weights = nullptr);

struct AggGradients {
  Matrix dx;               // m x N
  AggregationSpec dspec;   // same layout as the spec, holding dL/drho, dL/drho_p, dL/dc
};

/// Reverse-mode gradients of agg_segment given dL/dy. Columns of empty bags
/// in `upstream` are ignored. Max routes to the lowest-index maximizer.
AggGradients agg_gradients(const AggregationSpec& spec, const Matrix& x, const BagIndices& bags,
                           const std::vector<double>* weights, const Matrix& upstream);

}  // namespace hmill
