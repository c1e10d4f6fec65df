#include "hmill/model.hpp"

#include <algorithm>

#include "hmill/error.hpp"

namespace hmill {

namespace {

std::size_t layers_out(const std::vector<DenseLayer>& layers, std::size_t in) {
  return layers.empty() ? in : layers.back().out_dim();
}

void check_chain(const std::vector<DenseLayer>& layers, std::size_t in, const std::string& path) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in_dim() != in) {
      throw StructureError(path, "layer " + std::to_string(i) + " expects " +
                                     std::to_string(l.in_dim()) + " inputs, gets " +
                                     std::to_string(in));
    }
    if (l.bias.size() != l.out_dim()) {
      throw StructureError(path, "layer " + std::to_string(i) + " bias has wrong length");
    }
    in = l.out_dim();
  }
}

}  // namespace

std::size_t input_dim(const ModelNode& array_model) {
  const auto& a = array_model.as_array();
  return a.layers.empty() ? a.psi.size() : a.layers.front().in_dim();
}

std::size_t output_dim(const ModelNode& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ArrayModel>) {
          return m.psi.size();
        } else if constexpr (std::is_same_v<T, BagModel>) {
          return layers_out(m.layers, m.agg.output_dim());
        } else {
          std::size_t in = 0;
          for (const auto& c : m.children) in += output_dim(c);
          return layers_out(m.layers, in);
        }
      },
      model.node);
}

void validate_model(const ModelNode& model, const std::string& path) {
  if (const auto* a = std::get_if<ArrayModel>(&model.node)) {
    if (!a->layers.empty()) {
      check_chain(a->layers, a->layers.front().in_dim(), path);
      if (a->psi.size() != a->layers.back().out_dim()) {
        throw StructureError(path, "psi length differs from output dimension");
      }
    }
  } else if (const auto* b = std::get_if<BagModel>(&model.node)) {
    validate_model(*b->instance, instance_path(path));
    if (b->agg.dim != output_dim(*b->instance)) {
      throw StructureError(path, "aggregation dimension differs from instance model output");
    }
    for (const auto& c : b->agg.components) {
      if (const auto* l = std::get_if<LseAgg>(&c); l && l->rho.size() != b->agg.dim) {
        throw StructureError(path, "lse parameters have wrong length");
      }
      if (const auto* p = std::get_if<PNormAgg>(&c);
          p && (p->rho_p.size() != b->agg.dim || p->c.size() != b->agg.dim)) {
        throw StructureError(path, "pnorm parameters have wrong length");
      }
    }
    if (b->psi.size() != b->agg.output_dim()) {
      throw StructureError(path, "psi length differs from aggregation output");
    }
    check_chain(b->layers, b->agg.output_dim(), path);
  } else {
    const auto& p = model.as_product();
    if (p.keys.size() != p.children.size() || p.psi.size() != p.children.size()) {
      throw StructureError(path, "product arrays are inconsistent");
    }
    if (!std::is_sorted(p.keys.begin(), p.keys.end()) ||
        std::adjacent_find(p.keys.begin(), p.keys.end()) != p.keys.end()) {
      throw StructureError(path, "product keys must be sorted and unique");
    }
    std::size_t in = 0;
    for (std::size_t i = 0; i < p.children.size(); ++i) {
      const auto cp = child_path(path, p.keys[i]);
      validate_model(p.children[i], cp);
      if (p.psi[i].size() != output_dim(p.children[i])) {
        throw StructureError(cp, "psi length differs from child output");
      }
      in += p.psi[i].size();
    }
    check_chain(p.layers, in, path);
  }
}

// ---------------------------------------------------------------------------
// reflect

namespace {

// Structure both extractors and data trees reduce to.
struct Shape {
  enum Kind { Leaf, Bag, Product } kind = Leaf;
  std::size_t dim = 0;
  std::vector<std::string> keys;
  std::vector<Shape> children;
};

Shape shape_of(const ExtractorNode& e) {
  if (const auto* leaf = std::get_if<LeafExtractor>(&e.node)) return {Shape::Leaf, encoder_dim(leaf->encoder), {}, {}};
  if (const auto* bag = std::get_if<BagExtractor>(&e.node)) return {Shape::Bag, 0, {}, {shape_of(*bag->child)}};
  Shape s{Shape::Product, 0, e.as_product().keys, {}};
  for (const auto& c : e.as_product().children) s.children.push_back(shape_of(c));
  return s;
}

Shape shape_of(const DataNode& d) {
  if (const auto* a = std::get_if<ArrayData>(&d.node)) return {Shape::Leaf, a->x.rows(), {}, {}};
  if (const auto* b = std::get_if<BagData>(&d.node)) return {Shape::Bag, 0, {}, {shape_of(*b->child)}};
  Shape s{Shape::Product, 0, d.as_product().keys, {}};
  for (const auto& c : d.as_product().children) s.children.push_back(shape_of(c));
  return s;
}

ModelNode reflect_node(const Shape& e, bool feeds_agg, bool root, const Prescription& p, Rng& rng) {
  const Activation act = feeds_agg ? Activation::Tanh : Activation::Relu;
  const std::size_t h = p.hidden;
  std::vector<DenseLayer> layers;
  auto add_own = [&](std::size_t in) {
    layers.push_back(make_dense(in, h, act, rng));
    if (root) layers.push_back(make_dense(h, p.output_dim, Activation::Identity, rng));
  };
  const std::size_t out = root ? p.output_dim : h;

  if (e.kind == Shape::Leaf) {
    add_own(e.dim);
    return ModelNode{ArrayModel{std::move(layers), std::vector<double>(out, 0.0)}};
  }
  if (e.kind == Shape::Bag) {
    auto agg = AggregationSpec::make(p.aggregations, h);
    add_own(agg.output_dim());
    std::vector<double> psi(agg.output_dim(), 0.0);
    ModelNode instance = reflect_node(e.children[0], true, false, p, rng);
    return ModelNode{BagModel{std::move(instance), std::move(agg), std::move(layers), std::move(psi)}};
  }
  add_own(h * e.children.size());
  ProductModel m;
  m.keys = e.keys;
  m.layers = std::move(layers);
  m.psi.assign(e.children.size(), std::vector<double>(h, 0.0));
  for (const auto& c : e.children) m.children.push_back(reflect_node(c, false, false, p, rng));
  return ModelNode{std::move(m)};
}

ModelNode reflect_shape(const Shape& shape, const Prescription& p) {
  if (p.hidden == 0 || p.output_dim == 0) throw ShapeError("hidden and output sizes must be positive");
  if (p.aggregations.empty()) throw ShapeError("at least one aggregation is required");
  Rng rng = make_rng(p.seed, "model-init");
  return reflect_node(shape, false, true, p, rng);
}

}  // namespace

ModelNode reflect_model(const ExtractorNode& extractor, const Prescription& p) {
  return reflect_shape(shape_of(extractor), p);
}

ModelNode reflect_model(const DataNode& sample, const Prescription& p) {
  return reflect_shape(shape_of(sample), p);
}

// ---------------------------------------------------------------------------
// forward / backward

namespace {

Matrix run_layers(const std::vector<DenseLayer>& layers, Matrix input, std::vector<Matrix>& acts) {
  acts.clear();
  acts.push_back(std::move(input));
  for (const auto& l : layers) acts.push_back(dense_forward(l, acts.back()));
  return acts.back();
}

Matrix back_layers(const std::vector<DenseLayer>& layers, const std::vector<Matrix>& acts,
                   Matrix up, std::vector<DenseLayer>& grads) {
  for (std::size_t i = layers.size(); i-- > 0;) {
    up = dense_backward(layers[i], acts[i], acts[i + 1], up, grads[i]);
  }
  return up;
}

void put_psi(Matrix& m, std::size_t col, const std::vector<double>& psi) { m.set_col(col, psi); }

// Moves column `col` of `up` into `psi_grad` and clears it.
void take_psi_grad(Matrix& up, std::size_t col, std::vector<double>& psi_grad) {
  for (std::size_t r = 0; r < up.rows(); ++r) {
    psi_grad[r] += up(r, col);
    up(r, col) = 0.0;
  }
}

const char* data_kind(const DataNode& d) {
  return d.is_array() ? "array" : d.is_bag() ? "bag" : "product";
}
const char* model_kind(const ModelNode& m) {
  return m.is_array() ? "array" : m.is_bag() ? "bag" : "product";
}

Matrix forward_impl(const ModelNode& model, const DataNode& data, ForwardTrace& t,
                    const std::string& path) {
  if (model.node.index() != data.node.index()) {
    throw StructureError(path, std::string("model expects ") + model_kind(model) + " data, got " +
                                   data_kind(data));
  }
  t.children.clear();
  t.empty.clear();
  if (const auto* a = std::get_if<ArrayModel>(&model.node)) {
    const auto& d = data.as_array();
    if (d.x.rows() != input_dim(model)) {
      throw StructureError(path, "model expects " + std::to_string(input_dim(model)) +
                                     " features, data has " + std::to_string(d.x.rows()));
    }
    t.output = run_layers(a->layers, d.x, t.acts);
    for (std::size_t j = 0; j < d.x.cols(); ++j) {
      if (d.is_missing(j)) put_psi(t.output, j, a->psi);
    }
    return t.output;
  }
  if (const auto* b = std::get_if<BagModel>(&model.node)) {
    const auto& d = data.as_bag();
    t.children.resize(1);
    const Matrix h = forward_impl(*b->instance, *d.child, t.children[0], instance_path(path));
    const std::vector<double>* w = d.weights ? &*d.weights : nullptr;
    AggOutput agg = agg_segment(b->agg, h, d.bags, w);
    for (std::size_t j = 0; j < agg.empty.size(); ++j) {
      if (agg.empty[j]) put_psi(agg.y, j, b->psi);
    }
    t.empty = std::move(agg.empty);
    t.output = run_layers(b->layers, std::move(agg.y), t.acts);
    return t.output;
  }
  const auto& p = model.as_product();
  const auto& d = data.as_product();
  if (p.keys != d.keys) {
    std::string got;
    for (const auto& k : d.keys) got += (got.empty() ? "" : ",") + k;
    throw StructureError(path, "product keys differ from model (data has {" + got + "})");
  }
  t.children.resize(p.children.size());
  std::vector<Matrix> parts;
  parts.reserve(p.children.size());
  for (std::size_t i = 0; i < p.children.size(); ++i) {
    Matrix o = forward_impl(p.children[i], d.children[i], t.children[i], child_path(path, p.keys[i]));
    for (std::size_t j = 0; j < d.n; ++j) {
      if (d.is_missing(i, j)) put_psi(o, j, p.psi[i]);
    }
    parts.push_back(std::move(o));
  }
  Matrix input = parts.empty() ? Matrix(0, d.n) : vcat(parts);
  t.output = run_layers(p.layers, std::move(input), t.acts);
  return t.output;
}

void backward_impl(const ModelNode& model, const DataNode& data, const ForwardTrace& t,
                   Matrix up, ModelNode& grad) {
  if (const auto* a = std::get_if<ArrayModel>(&model.node)) {
    auto& g = grad.as_array();
    const auto& d = data.as_array();
    for (std::size_t j = 0; j < up.cols(); ++j) {
      if (d.is_missing(j)) take_psi_grad(up, j, g.psi);
    }
    back_layers(a->layers, t.acts, std::move(up), g.layers);
    return;
  }
  if (const auto* b = std::get_if<BagModel>(&model.node)) {
    auto& g = grad.as_bag();
    const auto& d = data.as_bag();
    Matrix dy = back_layers(b->layers, t.acts, std::move(up), g.layers);
    for (std::size_t j = 0; j < t.empty.size(); ++j) {
      if (t.empty[j]) take_psi_grad(dy, j, g.psi);
    }
    const std::vector<double>* w = d.weights ? &*d.weights : nullptr;
    AggGradients ag = agg_gradients(b->agg, t.children[0].output, d.bags, w, dy);
    for (std::size_t q = 0; q < ag.dspec.components.size(); ++q) {
      auto& dst = g.agg.components[q];
      if (auto* l = std::get_if<LseAgg>(&dst)) {
        const auto& s = std::get<LseAgg>(ag.dspec.components[q]);
        for (std::size_t k = 0; k < l->rho.size(); ++k) l->rho[k] += s.rho[k];
      } else if (auto* pn = std::get_if<PNormAgg>(&dst)) {
        const auto& s = std::get<PNormAgg>(ag.dspec.components[q]);
        for (std::size_t k = 0; k < pn->c.size(); ++k) {
          pn->rho_p[k] += s.rho_p[k];
          pn->c[k] += s.c[k];
        }
      }
    }
    backward_impl(*b->instance, *d.child, t.children[0], std::move(ag.dx), *g.instance);
    return;
  }
  const auto& p = model.as_product();
  auto& g = grad.as_product();
  const auto& d = data.as_product();
  Matrix dx = back_layers(p.layers, t.acts, std::move(up), g.layers);
  std::size_t row = 0;
  for (std::size_t i = 0; i < p.children.size(); ++i) {
    const std::size_t rows = p.psi[i].size();
    Matrix block = row_block(dx, row, rows);
    row += rows;
    for (std::size_t j = 0; j < d.n; ++j) {
      if (d.is_missing(i, j)) take_psi_grad(block, j, g.psi[i]);
    }
    backward_impl(p.children[i], d.children[i], t.children[i], std::move(block), g.children[i]);
  }
}

}  // namespace

Matrix forward(const ModelNode& model, const DataNode& data, ForwardTrace& trace) {
  return forward_impl(model, data, trace, "");
}

Matrix forward(const ModelNode& model, const DataNode& data) {
  ForwardTrace t;
  return forward_impl(model, data, t, "");
}

void backward(const ModelNode& model, const DataNode& data, const ForwardTrace& trace,
              const Matrix& upstream, ModelNode& grad) {
  if (upstream.rows() != output_dim(model) || upstream.cols() != nobs(data)) {
    throw ShapeError("upstream gradient has shape " + shape_str(upstream));
  }
  backward_impl(model, data, trace, upstream, grad);
}

ModelNode zeros_like(const ModelNode& model) {
  ModelNode z = model;
  visit_parameters(z, [](std::span<double> block, ParamKind) {
    std::fill(block.begin(), block.end(), 0.0);
  });
  return z;
}

// ---------------------------------------------------------------------------
// parameter views

namespace {

template <typename Node, typename Fn>
void visit_impl(Node& model, Fn& fn) {
  auto layers = [&](auto& ls) {
    for (auto& l : ls) {
      fn(l.weights.data(), ParamKind::Weight);
      fn(std::span(l.bias), ParamKind::Bias);
    }
  };
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ArrayModel>) {
          layers(m.layers);
          fn(std::span(m.psi), ParamKind::Psi);
        } else if constexpr (std::is_same_v<T, BagModel>) {
          layers(m.layers);
          for (auto& c : m.agg.components) {
            if (auto* l = std::get_if<LseAgg>(&c)) fn(std::span(l->rho), ParamKind::AggRho);
          }
          for (auto& c : m.agg.components) {
            if (auto* p = std::get_if<PNormAgg>(&c)) fn(std::span(p->rho_p), ParamKind::AggRhoP);
          }
          for (auto& c : m.agg.components) {
            if (auto* p = std::get_if<PNormAgg>(&c)) fn(std::span(p->c), ParamKind::AggCenter);
          }
          fn(std::span(m.psi), ParamKind::Psi);
          visit_impl(*m.instance, fn);
        } else {
          layers(m.layers);
          for (auto& psi : m.psi) fn(std::span(psi), ParamKind::Psi);
          for (auto& c : m.children) visit_impl(c, fn);
        }
      },
      model.node);
}

}  // namespace

void visit_parameters(ModelNode& model,
                      const std::function<void(std::span<double>, ParamKind)>& fn) {
  visit_impl(model, fn);
}

void visit_parameters(const ModelNode& model,
                      const std::function<void(std::span<const double>, ParamKind)>& fn) {
  visit_impl(model, fn);
}

std::size_t parameter_count(const ModelNode& model) {
  std::size_t n = 0;
  visit_parameters(model, [&](std::span<const double> b, ParamKind) { n += b.size(); });
  return n;
}

std::vector<double> flatten_parameters(const ModelNode& model) {
  std::vector<double> out;
  visit_parameters(model, [&](std::span<const double> b, ParamKind) {
    out.insert(out.end(), b.begin(), b.end());
  });
  return out;
}

void unflatten_parameters(ModelNode& model, std::span<const double> values) {
  const std::size_t n = parameter_count(model);
  if (values.size() != n) {
    throw ShapeError("model has " + std::to_string(n) + " parameters, got " +
                     std::to_string(values.size()));
  }
  std::size_t pos = 0;
  visit_parameters(model, [&](std::span<double> b, ParamKind) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), b.size(), b.begin());
    pos += b.size();
  });
}

std::vector<ParamKind> parameter_kinds(const ModelNode& model) {
  std::vector<ParamKind> out;
  visit_parameters(model, [&](std::span<const double> b, ParamKind k) {
    out.insert(out.end(), b.size(), k);
  });
  return out;
}

}  // namespace hmill
