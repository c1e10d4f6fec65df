#include "hmill/serialize.hpp"

#include <cmath>

#include "hmill/error.hpp"

namespace hmill {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw FormatError(path + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing field");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "non-finite value");
  return v;
}

std::size_t count(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned()) fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& path, std::size_t expect) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  if (j.size() != expect) {
    fail(path, "expected " + std::to_string(expect) + " values, found " + std::to_string(j.size()));
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Json layer_to_json(const DenseLayer& l) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < l.out_dim(); ++r) {
    const auto row = l.weights.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return Json{{"in", l.in_dim()},
              {"out", l.out_dim()},
              {"activation", to_string(l.activation)},
              {"weights", std::move(rows)},
              {"bias", l.bias}};
}

DenseLayer layer_from_json(const Json& j, const std::string& path) {
  const std::size_t in = count(field(j, "in", path), path + ".in");
  const std::size_t out = count(field(j, "out", path), path + ".out");
  DenseLayer l;
  const auto act_path = path + ".activation";
  try {
    l.activation = activation_from_string(text(field(j, "activation", path), act_path));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    fail(act_path, e.what());
  }
  const Json& w = field(j, "weights", path);
  const auto wpath = path + ".weights";
  if (!w.is_array() || w.size() != out) fail(wpath, "expected " + std::to_string(out) + " rows");
  std::vector<double> data;
  data.reserve(in * out);
  for (std::size_t r = 0; r < out; ++r) {
    const auto row = numbers(w[r], wpath + "[" + std::to_string(r) + "]", in);
    data.insert(data.end(), row.begin(), row.end());
  }
  l.weights = Matrix(out, in, std::move(data));
  l.bias = numbers(field(j, "bias", path), path + ".bias", out);
  return l;
}

Json layers_to_json(const std::vector<DenseLayer>& layers) {
  Json out = Json::array();
  for (const auto& l : layers) out.push_back(layer_to_json(l));
  return out;
}

std::vector<DenseLayer> layers_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of layers");
  std::vector<DenseLayer> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(layer_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Json agg_to_json(const AggregationSpec& spec) {
  Json comps = Json::array();
  for (const auto& c : spec.components) {
    if (std::holds_alternative<MaxAgg>(c)) {
      comps.push_back(Json{{"kind", "max"}});
    } else if (std::holds_alternative<MeanAgg>(c)) {
      comps.push_back(Json{{"kind", "mean"}});
    } else if (const auto* l = std::get_if<LseAgg>(&c)) {
      comps.push_back(Json{{"kind", "lse"}, {"rho", l->rho}});
    } else {
      const auto& p = std::get<PNormAgg>(c);
      comps.push_back(Json{{"kind", "pnorm"}, {"rho_p", p.rho_p}, {"c", p.c}});
    }
  }
  return Json{{"dim", spec.dim}, {"components", std::move(comps)}};
}

AggregationSpec agg_from_json(const Json& j, const std::string& path) {
  AggregationSpec spec;
  spec.dim = count(field(j, "dim", path), path + ".dim");
  const Json& comps = field(j, "components", path);
  const auto cpath = path + ".components";
  if (!comps.is_array() || comps.empty()) fail(cpath, "expected a nonempty array");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto p = cpath + "[" + std::to_string(i) + "]";
    const auto kind = text(field(comps[i], "kind", p), p + ".kind");
    if (kind == "max") {
      spec.components.emplace_back(MaxAgg{});
    } else if (kind == "mean") {
      spec.components.emplace_back(MeanAgg{});
    } else if (kind == "lse") {
      spec.components.emplace_back(LseAgg{numbers(field(comps[i], "rho", p), p + ".rho", spec.dim)});
    } else if (kind == "pnorm") {
      spec.components.emplace_back(PNormAgg{numbers(field(comps[i], "rho_p", p), p + ".rho_p", spec.dim),
                                            numbers(field(comps[i], "c", p), p + ".c", spec.dim)});
    } else {
      fail(p + ".kind", "unknown aggregation '" + kind + "'");
    }
  }
  return spec;
}

}  // namespace

Json model_to_json(const ModelNode& model) {
  if (const auto* a = std::get_if<ArrayModel>(&model.node)) {
    return Json{{"type", "array"}, {"layers", layers_to_json(a->layers)}, {"psi", a->psi}};
  }
  if (const auto* b = std::get_if<BagModel>(&model.node)) {
    return Json{{"type", "bag"},
                {"instance", model_to_json(*b->instance)},
                {"aggregation", agg_to_json(b->agg)},
                {"layers", layers_to_json(b->layers)},
                {"psi", b->psi}};
  }
  const auto& p = model.as_product();
  Json children = Json::array();
  for (std::size_t i = 0; i < p.keys.size(); ++i) {
    children.push_back(Json{{"key", p.keys[i]}, {"model", model_to_json(p.children[i])}, {"psi", p.psi[i]}});
  }
  return Json{{"type", "product"}, {"children", std::move(children)}, {"layers", layers_to_json(p.layers)}};
}

ModelNode model_from_json(const Json& j, const std::string& path) {
  const auto type = text(field(j, "type", path), path + ".type");
  if (type == "array") {
    ArrayModel a;
    a.layers = layers_from_json(field(j, "layers", path), path + ".layers");
    const Json& psi = field(j, "psi", path);
    const std::size_t out = a.layers.empty() ? psi.size() : a.layers.back().out_dim();
    a.psi = numbers(psi, path + ".psi", out);
    ModelNode m{std::move(a)};
    try {
      validate_model(m);
    } catch (const StructureError& e) {
      fail(path, e.what());
    }
    return m;
  }
  if (type == "bag") {
    BagModel b;
    b.instance = model_from_json(field(j, "instance", path), path + ".instance");
    b.agg = agg_from_json(field(j, "aggregation", path), path + ".aggregation");
    if (b.agg.dim != output_dim(*b.instance)) {
      fail(path + ".aggregation.dim", "does not match the instance model output");
    }
    b.layers = layers_from_json(field(j, "layers", path), path + ".layers");
    b.psi = numbers(field(j, "psi", path), path + ".psi", b.agg.output_dim());
    ModelNode m{std::move(b)};
    try {
      validate_model(m);
    } catch (const StructureError& e) {
      fail(path + ".layers", e.what());
    }
    return m;
  }
  if (type == "product") {
    ProductModel p;
    const Json& children = field(j, "children", path);
    const auto cpath = path + ".children";
    if (!children.is_array()) fail(cpath, "expected an array");
    for (std::size_t i = 0; i < children.size(); ++i) {
      const auto ip = cpath + "[" + std::to_string(i) + "]";
      p.keys.push_back(text(field(children[i], "key", ip), ip + ".key"));
      p.children.push_back(model_from_json(field(children[i], "model", ip), ip + ".model"));
      const std::size_t d = output_dim(p.children.back());
      p.psi.push_back(numbers(field(children[i], "psi", ip), ip + ".psi", d));
    }
    p.layers = layers_from_json(field(j, "layers", path), path + ".layers");
    ModelNode m{std::move(p)};
    try {
      validate_model(m);
    } catch (const StructureError& e) {
      fail(path, e.what());
    }
    return m;
  }
  fail(path + ".type", "unknown model node '" + type + "'");
}

Json bundle_to_json(const ModelBundle& b) {
  return Json{{"format", "hmill-model"},
              {"version", kModelFormatVersion},
              {"labels", b.labels.classes()},
              {"extractor", extractor_to_json(b.extractor)},
              {"model", model_to_json(b.model)},
              {"meta", b.meta}};
}

ModelBundle bundle_from_json(const Json& j) {
  if (!j.is_object()) fail("(root)", "expected an object");
  if (text(field(j, "format", "(root)"), "format") != "hmill-model") fail("format", "not an hmill model file");
  const Json& version = field(j, "version", "(root)");
  if (!version.is_number_integer() || version.get<long long>() != kModelFormatVersion) {
    throw FormatError("version: unsupported model format version " + version.dump() +
                      " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  ModelBundle b;
  const Json& labels = field(j, "labels", "(root)");
  if (!labels.is_array()) fail("labels", "expected an array of strings");
  std::vector<std::string> classes;
  for (std::size_t i = 0; i < labels.size(); ++i) classes.push_back(text(labels[i], "labels[" + std::to_string(i) + "]"));
  b.labels = LabelVocabulary(std::move(classes));
  try {
    b.extractor = extractor_from_json(field(j, "extractor", "(root)"));
  } catch (const FormatError& e) {
    throw FormatError(std::string("extractor: ") + e.what());
  }
  b.model = model_from_json(field(j, "model", "(root)"), "model");
  if (j.contains("meta")) b.meta = j["meta"];
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  write_file_atomic(path, dump_json(bundle_to_json(bundle)));
}

ModelBundle load_bundle(const std::string& path) {
  const std::string text_ = read_file(path);
  Json j;
  try {
    j = Json::parse(text_);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace hmill
