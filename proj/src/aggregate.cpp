#include "hmill/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hmill/error.hpp"

namespace hmill {

double softplus_stable(double rho) {
  return std::max(rho, 0.0) + std::log1p(std::exp(-std::abs(rho)));
}

double softplus_inverse(double r) {
  // log(exp(r) - 1), rearranged to stay finite for large r.
  return r > 30.0 ? r + std::log(-std::expm1(-r)) : std::log(std::expm1(r));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string to_string(AggKind k) {
  switch (k) {
    case AggKind::Max: return "max";
    case AggKind::Mean: return "mean";
    case AggKind::Lse: return "lse";
    case AggKind::PNorm: return "pnorm";
  }
  return "max";
}

std::vector<AggKind> parse_agg_kinds(const std::string& list) {
  std::vector<AggKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "max") {
      out.push_back(AggKind::Max);
    } else if (item == "mean") {
      out.push_back(AggKind::Mean);
    } else if (item == "lse") {
      out.push_back(AggKind::Lse);
    } else if (item == "pnorm") {
      out.push_back(AggKind::PNorm);
    } else {
      throw FormatError("unknown aggregation '" + item + "'");
    }
  }
  if (out.empty()) throw FormatError("empty aggregation list");
  return out;
}

AggregationSpec AggregationSpec::make(std::span<const AggKind> kinds, std::size_t dim) {
  const double rho1 = softplus_inverse(1.0);
  AggregationSpec spec;
  spec.dim = dim;
  for (auto k : kinds) {
    switch (k) {
      case AggKind::Max: spec.components.emplace_back(MaxAgg{}); break;
      case AggKind::Mean: spec.components.emplace_back(MeanAgg{}); break;
      case AggKind::Lse: spec.components.emplace_back(LseAgg{std::vector<double>(dim, rho1)}); break;
      case AggKind::PNorm:
        spec.components.emplace_back(
            PNormAgg{std::vector<double>(dim, rho1), std::vector<double>(dim, 0.0)});
        break;
    }
  }
  return spec;
}

AggregationSpec AggregationSpec::all_four(std::size_t dim) {
  const AggKind kinds[] = {AggKind::Max, AggKind::Mean, AggKind::Lse, AggKind::PNorm};
  return make(kinds, dim);
}

std::size_t AggregationSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : components) {
    if (std::holds_alternative<LseAgg>(c)) n += dim;
    if (std::holds_alternative<PNormAgg>(c)) n += 2 * dim;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Scalar kernels over one (bag, dimension) slice.

namespace {

struct LseParts {
  double value;
  double alpha;
};

LseParts lse_parts(std::span<const double> x, double r) {
  const double alpha = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::expm1(r * (v - alpha));
  s /= static_cast<double>(x.size());
  return {alpha + std::log1p(s) / r, alpha};
}

struct PNormParts {
  double value;
  double beta;
  double mean_pow;  // M = sum w a^p / W with a = |x - c| / beta
  double wsum;
};

PNormParts pnorm_parts(std::span<const double> x, std::span<const double> w, double p, double c) {
  double wsum = 0.0;
  if (w.empty()) {
    wsum = static_cast<double>(x.size());
  } else {
    for (double v : w) wsum += v;
  }
  // p = 1 cannot overflow; otherwise scale by the largest deviation so every
  // a^p lies in [0, 1] and the largest equals 1.
  double beta = 1.0;
  if (p != 1.0) {
    double mx = 0.0;
    for (double v : x) mx = std::max(mx, std::abs(v - c));
    if (mx == 0.0) return {0.0, 1.0, 0.0, wsum};
    beta = mx;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i] - c) / beta;
    const double term = p == 1.0 ? a : std::pow(a, p);
    acc += w.empty() ? term : w[i] * term;
  }
  const double m = acc / wsum;
  const double value = p == 1.0 ? beta * m : beta * std::pow(m, 1.0 / p);
  return {value, beta, m, wsum};
}

std::size_t argmax_lowest(std::span<const double> x, std::span<const std::size_t> idx) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[best] || (x[i] == x[best] && idx[i] < idx[best])) best = i;
  }
  return best;
}

void check_inputs(const AggregationSpec& spec, const Matrix& x, const BagIndices& bags,
                  const std::vector<double>* weights) {
  if (x.rows() != spec.dim) {
    throw ShapeError("aggregation over " + std::to_string(spec.dim) + " dims got " +
                     std::to_string(x.rows()) + "-row input");
  }
  if (bags.instance_count() != x.cols()) {
    throw ShapeError("bags cover " + std::to_string(bags.instance_count()) +
                     " instances but input has " + std::to_string(x.cols()) + " columns");
  }
  if (weights && weights->size() != x.cols()) {
    throw ShapeError("expected " + std::to_string(x.cols()) + " instance weights");
  }
}

}  // namespace

double lse_value(std::span<const double> x, double r) { return lse_parts(x, r).value; }

double pnorm_value(std::span<const double> x, std::span<const double> w, double p, double c) {
  return pnorm_parts(x, w, p, c).value;
}

// ---------------------------------------------------------------------------

AggOutput agg_segment(const AggregationSpec& spec, const Matrix& x, const BagIndices& bags,
                      const std::vector<double>* weights) {
  check_inputs(spec, x, bags, weights);
  const std::size_t m = spec.dim;
  const std::size_t nb = bags.count();
  AggOutput out{Matrix(spec.output_dim(), nb), std::vector<std::uint8_t>(nb, 0)};

  std::vector<double> vals;
  std::vector<double> w;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto members = bags.bag(b);
    if (members.empty()) {
      out.empty[b] = 1;
      continue;
    }
    w.clear();
    if (weights) {
      for (std::size_t i : members) w.push_back((*weights)[i]);
    }
    for (std::size_t j = 0; j < m; ++j) {
      vals.clear();
      for (std::size_t i : members) vals.push_back(x(j, i));
      for (std::size_t k = 0; k < spec.components.size(); ++k) {
        double y = 0.0;
        const auto& comp = spec.components[k];
        if (std::holds_alternative<MaxAgg>(comp)) {
          y = *std::max_element(vals.begin(), vals.end());
        } else if (std::holds_alternative<MeanAgg>(comp)) {
          double s = 0.0;
          if (weights) {
            double ws = 0.0;
            for (std::size_t i = 0; i < vals.size(); ++i) {
              s += w[i] * vals[i];
              ws += w[i];
            }
            y = s / ws;
          } else {
            for (double v : vals) s += v;
            y = s / static_cast<double>(vals.size());
          }
        } else if (const auto* lse = std::get_if<LseAgg>(&comp)) {
          y = lse_value(vals, softplus_stable(lse->rho[j]));
        } else {
          const auto& pn = std::get<PNormAgg>(comp);
          y = pnorm_value(vals, w, 1.0 + softplus_stable(pn.rho_p[j]), pn.c[j]);
        }
        out.y(k * m + j, b) = y;
      }
    }
  }
  return out;
}

AggGradients agg_gradients(const AggregationSpec& spec, const Matrix& x, const BagIndices& bags,
                           const std::vector<double>* weights, const Matrix& upstream) {
  check_inputs(spec, x, bags, weights);
  if (upstream.rows() != spec.output_dim() || upstream.cols() != bags.count()) {
    throw ShapeError("aggregation upstream gradient has shape " + shape_str(upstream));
  }
  const std::size_t m = spec.dim;
  AggGradients g{Matrix(m, x.cols()), spec};
  for (auto& comp : g.dspec.components) {
    if (auto* lse = std::get_if<LseAgg>(&comp)) std::fill(lse->rho.begin(), lse->rho.end(), 0.0);
    if (auto* pn = std::get_if<PNormAgg>(&comp)) {
      std::fill(pn->rho_p.begin(), pn->rho_p.end(), 0.0);
      std::fill(pn->c.begin(), pn->c.end(), 0.0);
    }
  }

  std::vector<double> vals;
  std::vector<double> w;
  for (std::size_t b = 0; b < bags.count(); ++b) {
    const auto members = bags.bag(b);
    if (members.empty()) continue;
    const std::size_t k = members.size();
    w.clear();
    double wsum = static_cast<double>(k);
    if (weights) {
      wsum = 0.0;
      for (std::size_t i : members) {
        w.push_back((*weights)[i]);
        wsum += (*weights)[i];
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      vals.clear();
      for (std::size_t i : members) vals.push_back(x(j, i));
      for (std::size_t q = 0; q < spec.components.size(); ++q) {
        const double up = upstream(q * m + j, b);
        if (up == 0.0) continue;
        const auto& comp = spec.components[q];
        if (std::holds_alternative<MaxAgg>(comp)) {
          const auto best = argmax_lowest(vals, members);
          g.dx(j, members[best]) += up;
        } else if (std::holds_alternative<MeanAgg>(comp)) {
          for (std::size_t t = 0; t < k; ++t) {
            g.dx(j, members[t]) += up * (weights ? w[t] : 1.0) / wsum;
          }
        } else if (const auto* lse = std::get_if<LseAgg>(&comp)) {
          const double r = softplus_stable(lse->rho[j]);
          const auto parts = lse_parts(vals, r);
          double esum = 0.0;
          for (double v : vals) esum += std::exp(r * (v - parts.alpha));
          double sx = 0.0;
          for (std::size_t t = 0; t < k; ++t) {
            const double s = std::exp(r * (vals[t] - parts.alpha)) / esum;
            g.dx(j, members[t]) += up * s;
            sx += s * vals[t];
          }
          const double dy_dr = (sx - parts.value) / r;
          std::get<LseAgg>(g.dspec.components[q]).rho[j] += up * dy_dr * sigmoid(lse->rho[j]);
        } else {
          const auto& pn = std::get<PNormAgg>(comp);
          const double p = 1.0 + softplus_stable(pn.rho_p[j]);
          const double c = pn.c[j];
          const auto parts = pnorm_parts(vals, w, p, c);
          if (parts.mean_pow <= 0.0) continue;  // all instances at c: zero subgradient
          const double scale = std::pow(parts.mean_pow, 1.0 / p - 1.0) / parts.wsum;
          double dc = 0.0;
          double t_sum = 0.0;  // sum w a^p log a / W
          for (std::size_t t = 0; t < k; ++t) {
            const double d = vals[t] - c;
            const double a = std::abs(d) / parts.beta;
            const double wt = weights ? w[t] : 1.0;
            const double sgn = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            const double dydx = scale * wt * std::pow(a, p - 1.0) * sgn;
            g.dx(j, members[t]) += up * dydx;
            dc -= dydx;
            if (a > 0.0) t_sum += wt * std::pow(a, p) * std::log(a);
          }
          t_sum /= parts.wsum;
          const double dy_dp =
              parts.value * (t_sum / (parts.mean_pow * p) - std::log(parts.mean_pow) / (p * p));
          auto& dpn = std::get<PNormAgg>(g.dspec.components[q]);
          dpn.rho_p[j] += up * dy_dp * sigmoid(pn.rho_p[j]);
          dpn.c[j] += up * dc;
        }
      }
    }
  }
  return g;
}

}  // namespace hmill
