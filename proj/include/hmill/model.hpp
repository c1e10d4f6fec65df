#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hmill/aggregate.hpp"
#include "hmill/box.hpp"
#include "hmill/datanode.hpp"
#include "hmill/encode.hpp"
#include "hmill/matrix.hpp"
#include "hmill/nn.hpp"

namespace hmill {

struct ModelNode;

/// Layers over leaf features. Missing columns skip the layers and output psi.
struct ArrayModel {
  std::vector<DenseLayer> layers;
  std::vector<double> psi;
  friend bool operator==(const ArrayModel&, const ArrayModel&) = default;
};

/// f_B(agg(f_I(instances))) with psi standing in for empty bags.
struct BagModel {
  Box<ModelNode> instance;
  AggregationSpec agg;
  std::vector<DenseLayer> layers;
  std::vector<double> psi;  // agg.output_dim()
  friend bool operator==(const BagModel&, const BagModel&) = default;
};

/// f([f_1(t_1); ...; f_l(t_l)]) with psi[i] standing in for absent child i.
struct ProductModel {
  std::vector<std::string> keys;  // sorted, as in the data
  std::vector<ModelNode> children;
  std::vector<DenseLayer> layers;
  std::vector<std::vector<double>> psi;
  friend bool operator==(const ProductModel&, const ProductModel&) = default;
};

struct ModelNode {
  std::variant<ArrayModel, BagModel, ProductModel> node;

  bool is_array() const { return std::holds_alternative<ArrayModel>(node); }
  bool is_bag() const { return std::holds_alternative<BagModel>(node); }
  bool is_product() const { return std::holds_alternative<ProductModel>(node); }
  const ArrayModel& as_array() const { return std::get<ArrayModel>(node); }
  const BagModel& as_bag() const { return std::get<BagModel>(node); }
  const ProductModel& as_product() const { return std::get<ProductModel>(node); }
  ArrayModel& as_array() { return std::get<ArrayModel>(node); }
  BagModel& as_bag() { return std::get<BagModel>(node); }
  ProductModel& as_product() { return std::get<ProductModel>(node); }

  friend bool operator==(const ModelNode&, const ModelNode&) = default;
};

std::size_t output_dim(const ModelNode& model);
std::size_t input_dim(const ModelNode& array_model);

/// Checks layer chaining and psi sizes; throws StructureError with a path.
void validate_model(const ModelNode& model, const std::string& path = "");

struct Prescription {
  std::size_t hidden = 50;
  std::vector<AggKind> aggregations = {AggKind::Max, AggKind::Mean, AggKind::Lse,
                                       AggKind::PNorm};
  std::size_t output_dim = 2;
  std::uint64_t seed = 0;
};

/// One model node per extractor node. Every mapping is a single dense layer
/// of width `hidden`: tanh when it feeds an aggregation, relu otherwise. The
/// root gets an extra linear layer with `output_dim` units.
ModelNode reflect_model(const ExtractorNode& extractor, const Prescription& p);
/// Same, mirroring the structure of a data tree (leaf inputs = row counts).
ModelNode reflect_model(const DataNode& sample, const Prescription& p);

/// Intermediate values recorded by forward for backward.
struct ForwardTrace {
  std::vector<Matrix> acts;  // acts[0] = layer input, acts[i + 1] = output of layer i
  std::vector<std::uint8_t> empty;  // bag nodes: empty-bag flags
  std::vector<ForwardTrace> children;
  Matrix output;  // after psi substitution
};

/// output_dim x nobs(data). Throws StructureError (with path) when the data
/// does not fit the model.
Matrix forward(const ModelNode& model, const DataNode& data);
Matrix forward(const ModelNode& model, const DataNode& data, ForwardTrace& trace);

/// Accumulates dL/dparameters into `grad` (shaped like `model`) given
/// dL/doutput and the trace of the forward pass on `data`.
void backward(const ModelNode& model, const DataNode& data, const ForwardTrace& trace,
              const Matrix& upstream, ModelNode& grad);

/// Same structure, all parameters zero.
ModelNode zeros_like(const ModelNode& model);

enum class ParamKind { Weight, Bias, AggRho, AggRhoP, AggCenter, Psi };

/// Visits parameter blocks in canonical order: pre-order over the tree; in a
/// node: each layer's weights (row-major) then bias, aggregation rho, rho_p,
/// c, then psi; then the children.
void visit_parameters(ModelNode& model, const std::function<void(std::span<double>, ParamKind)>& fn);
void visit_parameters(const ModelNode& model,
                      const std::function<void(std::span<const double>, ParamKind)>& fn);

std::size_t parameter_count(const ModelNode& model);
std::vector<double> flatten_parameters(const ModelNode& model);
/// Writes `values` back in canonical order; throws ShapeError on length mismatch.
void unflatten_parameters(ModelNode& model, std::span<const double> values);
/// Parameter kinds aligned with flatten_parameters.
std::vector<ParamKind> parameter_kinds(const ModelNode& model);

}  // namespace hmill
