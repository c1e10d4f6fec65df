// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gen.hpp"
#include "hmill/aggregate.hpp"
#include "hmill/encode.hpp"
#include "hmill/graph.hpp"
#include "hmill/infer.hpp"
#include "hmill/io.hpp"
#include "hmill/metrics.hpp"
#include "hmill/model.hpp"
#include "hmill/ptp.hpp"
#include "hmill/schema.hpp"
#include "hmill/serialize.hpp"
#include "hmill/train.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace hmill;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * synth::uniform01(rng); }

// ---------------------------------------------------------------------------
// 1. shift and scale identities

Outcome c1_identities() {
  Rng rng(101);
  double worst_lse = 0, worst_pnorm = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform_index(rng, 16));
    std::vector<double> x(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = uniform(rng, -10, 10);
      w[i] = uniform(rng, 0.1, 2.0);
    }
    const double r = uniform(rng, 0.01, 10);
    const double shift = uniform(rng, -10, 10);
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + shift;
    worst_lse = std::max(worst_lse, rel(lse_value(xs, r), lse_value(x, r) + shift));

    const double p = uniform(rng, 1, 10);
    const double c = uniform(rng, -10, 10);
    double a = uniform(rng, 0.1, 10);
    if (t % 2) a = -a;
    std::vector<double> xa(n);
    for (std::size_t i = 0; i < n; ++i) xa[i] = a * x[i];
    const std::span<const double> weights = t % 3 == 0 ? std::span<const double>(w) : std::span<const double>();
    worst_pnorm =
        std::max(worst_pnorm, rel(pnorm_value(xa, weights, p, a * c), std::fabs(a) * pnorm_value(x, weights, p, c)));
  }
  return {worst_lse <= 1e-12 && worst_pnorm <= 1e-12,
          "lse shift max rel " + fmt("%.3g", worst_lse) + ", pnorm scale max rel " + fmt("%.3g", worst_pnorm)};
}

// ---------------------------------------------------------------------------
// 2. limits

Outcome c2_limits() {
  Rng rng(102);
  double e_mean = 0, e_max = 0, e_pmax = 0;
  bool exact = true;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform_index(rng, 16));
    std::vector<double> x(n);
    for (auto& v : x) v = uniform(rng, -1, 1);
    const double c = uniform(rng, -1, 1);
    double mean = 0, mx = -1e300, mabs = 0, dev = 0;
    for (double v : x) {
      mean += v;
      mx = std::max(mx, v);
      mabs += std::fabs(v);
      dev = std::max(dev, std::fabs(v - c));
    }
    mean /= static_cast<double>(n);
    mabs /= static_cast<double>(n);
    e_mean = std::max(e_mean, std::fabs(lse_value(x, 1e-6) - mean));
    e_max = std::max(e_max, std::fabs(lse_value(x, 1e4) - mx));
    e_pmax = std::max(e_pmax, std::fabs(pnorm_value(x, {}, 1e4, c) - dev));
    exact = exact && pnorm_value(x, {}, 1.0, 0.0) == mabs;
  }
  return {e_mean <= 1e-4 && e_max <= 1e-3 && e_pmax <= 1e-2 && exact,
          "|lse(1e-6)-mean| " + fmt("%.3g", e_mean) + ", |lse(1e4)-max| " + fmt("%.3g", e_max) +
              ", |pnorm(1e4)-max| " + fmt("%.3g", e_pmax) + ", pnorm(1,0)==mean|x| " + (exact ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 3. gradients

struct Features {
  bool missing_leaf = false;
  bool missing_child = false;
  bool empty_bag = false;
  bool weighted = false;
  bool unweighted = false;
};

void scan(const DataNode& d, Features& f) {
  if (d.is_array()) {
    f.missing_leaf = f.missing_leaf || !d.as_array().missing.empty();
  } else if (d.is_bag()) {
    const auto& b = d.as_bag();
    for (std::size_t j = 0; j < b.bags.count(); ++j) f.empty_bag = f.empty_bag || b.bags.empty(j);
    (b.weights ? f.weighted : f.unweighted) = true;
    scan(*b.child, f);
  } else {
    const auto& p = d.as_product();
    for (std::size_t i = 0; i < p.children.size(); ++i) {
      f.missing_child = f.missing_child || !p.missing[i].empty();
      scan(p.children[i], f);
    }
  }
}

double weighted_sum(const Matrix& y, const Matrix& r) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * r.data()[i];
  return s;
}

Outcome c3_gradients() {
  Rng rng(103);
  double worst = 0;
  std::size_t params = 0;
  Features total;
  for (int t = 0; t < 50; ++t) {
    gen::Shape shape;
    DataNode data;
    Features f;
    do {  // every model sees missing leaves, missing children and empty bags
      shape = gen::random_shape(rng, 3, 6);
      data = gen::random_data(shape, 4, rng);
      f = {};
      scan(data, f);
    } while (!(f.missing_leaf && f.missing_child && f.empty_bag));
    total.weighted = total.weighted || f.weighted;
    total.unweighted = total.unweighted || f.unweighted;

    Prescription p;
    p.hidden = gen::pick(rng, 2, 6);
    p.output_dim = gen::pick(rng, 1, 3);
    p.seed = static_cast<std::uint64_t>(t);
    auto model = reflect_model(data, p);
    gen::perturb(model, rng);
    Matrix r(output_dim(model), nobs(data));
    for (auto& v : r.data()) v = standard_normal(rng);

    ForwardTrace trace;
    forward(model, data, trace);
    auto grad = zeros_like(model);
    backward(model, data, trace, r, grad);
    const auto analytic = flatten_parameters(grad);
    const auto numeric = finite_difference_gradient(
        [&](std::span<const double> th) {
          auto m = model;
          unflatten_parameters(m, th);
          return weighted_sum(forward(m, data), r);
        },
        flatten_parameters(model), 1e-5);
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      worst = std::max(worst, rel(analytic[i], numeric[i]));
    }
    params += numeric.size();
  }
  const bool both = total.weighted && total.unweighted;
  return {worst <= 1e-4 && both,
          std::to_string(params) + " parameters, max rel err " + fmt("%.3g", worst) +
              (both ? "" : " (weighted/unweighted bags not both covered)")};
}

// ---------------------------------------------------------------------------
// 4. batch merge equivalence

Outcome c4_merge() {
  Rng rng(104);
  double worst = 0;
  bool round_trip = true;
  for (int t = 0; t < 200; ++t) {
    auto shape = gen::random_shape(rng, 1 + static_cast<std::size_t>(uniform_index(rng, 4)), 6);
    const std::size_t k = gen::pick(rng, 1, 8);
    std::vector<DataNode> samples;
    for (std::size_t i = 0; i < k; ++i) samples.push_back(gen::random_data(shape, 1, rng));
    const DataNode batch = merge(samples);
    Prescription p;
    p.hidden = gen::pick(rng, 2, 6);
    p.seed = static_cast<std::uint64_t>(t);
    auto model = reflect_model(batch, p);
    gen::perturb(model, rng);
    const Matrix y = forward(model, batch);
    for (std::size_t j = 0; j < k; ++j) {
      const Matrix yj = forward(model, samples[j]);
      for (std::size_t r = 0; r < y.rows(); ++r) worst = std::max(worst, std::fabs(y(r, j) - yj(r, 0)));
      const std::size_t idx[] = {j};
      round_trip = round_trip && slice(batch, idx) == samples[j];
    }
    std::vector<std::size_t> all(k);
    for (std::size_t j = 0; j < k; ++j) all[j] = j;
    round_trip = round_trip && slice(batch, all) == batch;
  }
  return {worst <= 1e-6 && round_trip,
          "max |batched - single| " + fmt("%.3g", worst) + ", slice round-trip " + (round_trip ? "exact" : "BROKEN")};
}

// ---------------------------------------------------------------------------
// 5. missing data

Matrix apply_layers(const std::vector<DenseLayer>& layers, Matrix x) {
  for (const auto& l : layers) x = dense_forward(l, x);
  return x;
}

Outcome c5_missing() {
  Rng rng(105);
  std::vector<std::string> failures;

  // empty bag -> f_B(psi)
  {
    auto data = DataNode::bag(DataNode::array(Matrix{{0.3, -1.2, 0.7}, {2.0, 0.1, -0.4}}),
                              BagIndices::from_lengths(std::vector<std::size_t>{2, 0, 1}));
    Prescription p;
    p.hidden = 5;
    p.output_dim = 3;
    auto m = reflect_model(data, p);
    gen::perturb(m, rng);
    const Matrix y = forward(m, data);
    const auto& bm = m.as_bag();
    const Matrix expect = apply_layers(bm.layers, Matrix::column(bm.psi));
    if (y.col(1) != expect.col(0)) failures.push_back("empty bag");
  }

  // missing product child -> f([f_1(t_1); psi_2])
  {
    auto data = DataNode::product(
        {{"a", DataNode::array(Matrix{{0.5, -0.5}, {1.5, 2.5}})},
         {"b", DataNode::bag(DataNode::array(Matrix{{1.0, 2.0, 3.0}}),
                             BagIndices::from_lengths(std::vector<std::size_t>{2, 1}))}},
        {{0, 0}, {0, 1}});
    Prescription p;
    p.hidden = 4;
    auto m = reflect_model(data, p);
    gen::perturb(m, rng);
    const Matrix y = forward(m, data);
    const auto& pm = m.as_product();
    const std::size_t obs[] = {1};
    const Matrix a = forward(pm.children[0], slice(data.as_product().children[0], obs));
    const Matrix parts[] = {a, Matrix::column(pm.psi[1])};
    const Matrix expect = apply_layers(pm.layers, vcat(parts));
    if (y.col(1) != expect.col(0)) failures.push_back("missing child");
  }

  // missing leaf column -> psi, and an empty bag nested below a product
  {
    auto inner = DataNode::product(
        {{"v", DataNode::array(Matrix{{1.0, 9.0}}, {0, 1})},
         {"w", DataNode::bag(DataNode::array(Matrix(2, 1, 0.25)), BagIndices::from_lengths(std::vector<std::size_t>{0, 1}))}});
    auto data = DataNode::bag(inner, BagIndices::from_lengths(std::vector<std::size_t>{2}));
    Prescription p;
    p.hidden = 3;
    auto m = reflect_model(data, p);
    gen::perturb(m, rng);
    const auto& inst = m.as_bag().instance->as_product();
    const auto& leaf = inst.children[0].as_array();
    const auto& wbag = inst.children[1].as_bag();
    ForwardTrace trace;
    forward(m, data, trace);
    const auto& itrace = trace.children[0];
    if (itrace.children[0].output.col(1) != leaf.psi) failures.push_back("missing leaf");
    const Matrix expect = apply_layers(wbag.layers, Matrix::column(wbag.psi));
    if (itrace.children[1].output.col(0) != expect.col(0)) failures.push_back("nested empty bag");
  }
  std::string detail = failures.empty() ? "bit-exact on 4 constructed cases" : "mismatch:";
  for (const auto& f : failures) detail += " " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------
// 6. schema suite

struct Template {
  enum Kind { Number, String, Boolean, Array, Object } kind = Number;
  std::vector<std::string> keys;
  std::vector<Template> children;
};

Template random_template(Rng& rng, int depth) {
  Template t;
  const auto roll = uniform_index(rng, depth >= 3 ? 3 : 5);
  t.kind = static_cast<Template::Kind>(roll);
  if (depth == 0) t.kind = Template::Object;
  if (t.kind == Template::Array) t.children.push_back(random_template(rng, depth + 1));
  if (t.kind == Template::Object) {
    const auto width = 1 + uniform_index(rng, 4);
    for (std::uint64_t i = 0; i < width; ++i) {
      t.keys.push_back("k" + std::to_string(i));
      t.children.push_back(random_template(rng, depth + 1));
    }
  }
  return t;
}

Json random_doc(const Template& t, Rng& rng) {
  switch (t.kind) {
    case Template::Number:
      return uniform_index(rng, 2) ? Json(static_cast<int>(uniform_index(rng, 50))) : Json(uniform(rng, -5, 5));
    case Template::String:
      return "s" + std::to_string(uniform_index(rng, 300));
    case Template::Boolean:
      return uniform_index(rng, 2) == 1;
    case Template::Array: {
      Json a = Json::array();
      const auto len = uniform_index(rng, 4);
      for (std::uint64_t i = 0; i < len; ++i) a.push_back(random_doc(t.children[0], rng));
      return a;
    }
    case Template::Object: {
      Json o = Json::object();
      for (std::size_t i = 0; i < t.keys.size(); ++i) {
        const auto r = uniform_index(rng, 10);
        if (r == 0) continue;                 // absent
        if (r == 1) o[t.keys[i]] = nullptr;  // null
        else o[t.keys[i]] = random_doc(t.children[i], rng);
      }
      return o;
    }
  }
  return nullptr;
}

struct Position {
  Json::json_pointer ptr;
  std::string path;
  bool nested_in_array = false;
};

void positions(const Json& j, const Json::json_pointer& ptr, const std::string& path, bool in_array,
               std::vector<Position>& objects, std::vector<Position>& leaves, std::vector<Position>& arrays) {
  if (j.is_object()) {
    objects.push_back({ptr, path, in_array});
    for (auto it = j.begin(); it != j.end(); ++it) {
      positions(it.value(), ptr / it.key(), child_path(path, it.key()), in_array, objects, leaves, arrays);
    }
  } else if (j.is_array()) {
    if (!j.empty()) arrays.push_back({ptr, path, in_array || path.find("[]") != std::string::npos || path.find('.') != std::string::npos});
    for (std::size_t i = 0; i < j.size(); ++i) {
      positions(j[i], ptr / i, instance_path(path), true, objects, leaves, arrays);
    }
  } else if (!j.is_null()) {
    leaves.push_back({ptr, path, in_array});
  }
}

Json wrong_kind(const Json& v) {
  if (v.is_number()) return "flipped";
  if (v.is_string()) return 7;
  if (v.is_boolean()) return "no";
  if (v.is_array()) return 3;
  return Json::array({1});
}

Outcome c6_schema() {
  Rng rng(106);
  std::size_t docs_total = 0, mutations = 0;
  std::vector<std::string> failures;
  for (int corpus = 0; corpus < 10; ++corpus) {
    const Template t = random_template(rng, 0);
    std::vector<Json> docs;
    for (int i = 0; i < 1000; ++i) docs.push_back(random_doc(t, rng));
    docs_total += docs.size();
    const SchemaNode s = infer_schema(docs);
    for (const auto& d : docs) {
      if (!matches(d, s)) {
        failures.push_back("closure");
        break;
      }
    }
    for (int split = 0; split < 3; ++split) {
      const auto cut = static_cast<std::ptrdiff_t>(uniform_index(rng, docs.size() + 1));
      const std::vector<Json> a(docs.begin(), docs.begin() + cut), b(docs.begin() + cut, docs.end());
      if (schema_merge(infer_schema(a), infer_schema(b)) != s) failures.push_back("split-merge");
    }
    for (int m = 0; m < 30; ++m) {
      const Json& doc = docs[uniform_index(rng, docs.size())];
      std::vector<Position> objects, leaves, arrays;
      positions(doc, Json::json_pointer(), "", false, objects, leaves, arrays);
      // added key
      {
        const auto& pos = objects[uniform_index(rng, objects.size())];
        Json mutated = doc;
        mutated[pos.ptr]["unseen_key"] = 1;
        const auto r = matches(mutated, s);
        ++mutations;
        if (r.ok || r.path != child_path(pos.path, "unseen_key")) failures.push_back("added key at " + pos.path);
      }
      // kind flip
      if (!leaves.empty()) {
        const auto& pos = leaves[uniform_index(rng, leaves.size())];
        Json mutated = doc;
        mutated[pos.ptr] = wrong_kind(doc[pos.ptr]);
        const auto r = matches(mutated, s);
        ++mutations;
        if (r.ok || r.path != pos.path) failures.push_back("kind flip at " + pos.path);
      }
      // corrupted element of a nested array
      std::vector<const Position*> nested;
      for (const auto& a : arrays)
        if (a.nested_in_array) nested.push_back(&a);
      if (!nested.empty()) {
        const auto& pos = *nested[uniform_index(rng, nested.size())];
        Json mutated = doc;
        auto& arr = mutated[pos.ptr];
        const auto i = uniform_index(rng, arr.size());
        arr[i] = wrong_kind(arr[i]);
        const auto r = matches(mutated, s);
        ++mutations;
        if (r.ok || r.path != instance_path(pos.path)) failures.push_back("array corruption at " + pos.path);
      }
    }
  }
  std::string detail = std::to_string(docs_total) + " documents, " + std::to_string(mutations) + " mutations";
  if (!failures.empty()) detail += ", first failure: " + failures.front();
  return {failures.empty() && docs_total >= 10000, detail};
}

// ---------------------------------------------------------------------------
// 7. transform oracle

Outcome c7_transform() {
  Rng rng(107);
  std::size_t edges = 0;
  std::vector<std::string> failures;
  for (int t = 0; t < 500; ++t) {
    const std::size_t nl = gen::pick(rng, 1, 12), nr = gen::pick(rng, 1, 12);
    const double density = uniform(rng, 0.05, 0.6);
    BipartiteRelation rel;
    for (std::size_t u = 0; u < nl; ++u)
      for (std::size_t b = 0; b < nr; ++b)
        if (synth::uniform01(rng) < density) rel.add_edge("u" + std::to_string(u), "b" + std::to_string(b));
    const auto g = transform(rel);
    std::set<std::pair<std::size_t, std::size_t>> bip(rel.edges.begin(), rel.edges.end());
    const auto expect = oracle::projection(rel.left.size(), rel.right.size(), bip);
    edges += expect.size();
    if (g.edge_count() != expect.size()) failures.push_back("edge count");
    for (const auto& [uv, wit] : expect) {
      const auto* w = g.witnesses(uv.first, uv.second);
      if (!w || !g.has_edge(uv.second, uv.first)) {
        failures.push_back("missing edge");
        continue;
      }
      if (w->count != wit.size() || std::set<std::size_t>(w->sample.begin(), w->sample.end()) != wit)
        failures.push_back("witness set");
      for (auto b : w->sample)  // soundness straight from the bipartite edges
        if (!bip.count({uv.first, b}) || !bip.count({uv.second, b})) failures.push_back("unsound witness");
    }
    for (auto [u, v] : g.edge_list())
      if (!expect.count({u, v})) failures.push_back("spurious edge");
  }
  return {failures.empty(), "500 graphs, " + std::to_string(edges) + " projected edges" +
                                (failures.empty() ? "" : ", first failure: " + failures.front())};
}

// ---------------------------------------------------------------------------
// 8. edge features

Outcome c8_features() {
  std::vector<std::string> failures;
  {
    BipartiteRelation rel;
    rel.add_edge("d1", "c1");
    rel.add_edge("d1", "c2");
    rel.add_edge("d2", "c1");
    const auto g = transform(rel);
    const double ln2 = std::log(2.0);
    const std::array<double, 9> expect{1, 1 + ln2, 1, 1, 1 + ln2, 1 - ln2, 1 + ln2, 1, 0};
    if (edge_features(g, rel, 0, 1, false) != expect) failures.push_back("hand example");
    auto flipped = expect;
    flipped[7] = 0;
    flipped[8] = 1;
    if (edge_features(g, rel, 0, 1, true) != flipped) failures.push_back("listed one-hot");
  }
  Rng rng(108);
  for (int t = 0; t < 200; ++t) {
    BipartiteRelation rel;
    const std::size_t nl = gen::pick(rng, 2, 12), nr = gen::pick(rng, 1, 12);
    for (std::size_t u = 0; u < nl; ++u)
      for (std::size_t b = 0; b < nr; ++b)
        if (synth::uniform01(rng) < 0.3) rel.add_edge("u" + std::to_string(u), "b" + std::to_string(b));
    const auto g = transform(rel);
    for (auto [u, v] : g.edge_list()) {
      const auto a = raw_edge_features(g, rel, v, u);
      const auto b = raw_edge_features(g, rel, u, v);
      if (a[1] != b[2] || a[2] != b[1]) failures.push_back("degree swap");
      for (std::size_t i = 3; i < 7; ++i)
        if (a[i] != b[i]) failures.push_back("symmetric component " + std::to_string(i));
    }
  }
  {
    // star: hub h joined to leaf l_i through client c_i
    BipartiteRelation rel;
    for (int i = 0; i < 6; ++i) {
      rel.add_edge("h", "c" + std::to_string(i));
      rel.add_edge("l" + std::to_string(i), "c" + std::to_string(i));
    }
    const auto g = transform(rel);
    const auto h = *rel.find_left("h");
    std::set<double> hub_degree;
    for (int i = 0; i < 6; ++i) hub_degree.insert(raw_edge_features(g, rel, *rel.find_left("l" + std::to_string(i)), h)[2]);
    if (hub_degree.size() != 1) failures.push_back("star");
  }
  return {failures.empty(), failures.empty() ? "hand example exact, symmetries hold on 200 graphs"
                                             : "first failure: " + failures.front()};
}

// ---------------------------------------------------------------------------
// 9. k-step extraction against walks

void collect(const DataNode& node, std::size_t depth, const std::vector<double>& parents,
             std::vector<std::multiset<std::size_t>>& levels, bool& feedback_seen) {
  const auto& p = node.as_product();
  const auto& ids = p.children[p.find("payload")].as_array().x;
  for (std::size_t j = 0; j < p.n; ++j) levels[depth].insert(static_cast<std::size_t>(ids(0, j)));
  for (std::size_t c = 0; c < p.keys.size(); ++c) {
    if (p.keys[c] == "payload") continue;
    const auto& bag = p.children[c].as_bag();
    std::vector<double> child_parents;
    std::vector<double> child_ids;
    const auto& inst = bag.child->as_product();
    const auto& cx = inst.children[inst.find("payload")].as_array().x;
    for (std::size_t j = 0; j < p.n; ++j) {
      for (auto i : bag.bags.bag(j)) {
        if (cx(0, i) == parents[j]) feedback_seen = true;
        child_parents.push_back(ids(0, j));
      }
    }
    if (inst.n > 0) collect(*bag.child, depth + 1, child_parents, levels, feedback_seen);
  }
}

Outcome c9_kstep() {
  Rng rng(109);
  std::vector<std::string> failures;
  const PayloadFn payload = [](std::size_t v) { return DataNode::array(Matrix(1, 1, static_cast<double>(v))); };
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = gen::pick(rng, 2, 20);
    const std::size_t ntypes = gen::pick(rng, 1, 2);
    std::vector<std::string> types{"follows", "links"};
    types.resize(ntypes);
    TypedGraph g(n, types);
    const double density = uniform(rng, 0.05, 0.25);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        for (const auto& ty : types)
          if (synth::uniform01(rng) < density) {
            if (ty == "follows") g.add_edge(ty, a, b, true);
            else g.add_edge(ty, a, b);
          }
    const std::size_t k = gen::pick(rng, 1, 3);
    const std::size_t v = gen::pick(rng, 0, n - 1);
    for (bool fb : {false, true}) {
      const auto sample = k_step_sample(g, v, k, fb, payload, kUnlimited, 7);
      std::vector<std::multiset<std::size_t>> levels(k + 1);
      bool feedback = false;
      collect(sample, 0, {-1.0}, levels, feedback);
      if (levels != oracle::walk_levels(g.adj, v, k, fb))
        failures.push_back("levels (exclude_feedback " + std::to_string(fb) + ")");
      if (fb && feedback) failures.push_back("originating vertex in child bag");
    }
  }
  return {failures.empty(), failures.empty() ? "100 graphs, level multisets identical with and without feedback"
                                             : "first failure: " + failures.front()};
}

// ---------------------------------------------------------------------------
// 10. PTP

Outcome c10_ptp() {
  std::vector<std::string> failures;
  {
    const std::vector<std::pair<std::size_t, std::size_t>> path{{0, 1}, {1, 2}};
    const auto p = ptp(PtpGraph::from_edges(3, path), std::vector<std::size_t>{0}, 1);
    if (p[1] != 0.5 || p[2] != 0.0) failures.push_back("path example");
  }
  Rng rng(110);
  const std::size_t n = 1000;
  std::set<std::pair<std::size_t, std::size_t>> es;
  while (es.size() < 5000) {
    const auto a = static_cast<std::size_t>(uniform_index(rng, n)), b = static_cast<std::size_t>(uniform_index(rng, n));
    if (a != b) es.insert({std::min(a, b), std::max(a, b)});
  }
  const std::vector<std::pair<std::size_t, std::size_t>> edges(es.begin(), es.end());
  std::vector<std::size_t> seeds;
  for (std::size_t i = 0; i < 20; ++i) seeds.push_back(i * 37);
  const auto g = PtpGraph::from_edges(n, edges);
  for (std::size_t it = 1; it <= 20; ++it) {
    const auto p = ptp(g, seeds, it);
    for (auto s : seeds)
      if (p[s] != 1.0) failures.push_back("seed not 1 after iteration " + std::to_string(it));
  }
  const auto t0 = Clock::now();
  const auto fast = ptp(g, seeds, 20);
  const double secs = seconds_since(t0);
  const auto slow = oracle::ptp(n, edges, seeds, 20);
  double worst = 0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::fabs(fast[i] - slow[i]));
  if (worst > 1e-12) failures.push_back("oracle mismatch");
  if (secs >= 1.0) failures.push_back("too slow");
  return {failures.empty(), "1e3 vertices / 20 iterations in " + fmt("%.4f", secs) + " s, max |diff| " +
                                fmt("%.3g", worst) + (failures.empty() ? "" : ", first failure: " + failures.front())};
}

// ---------------------------------------------------------------------------
// 11. MIL end-to-end

struct MilRun {
  double accuracy = 0;
  std::string bundle;
  std::string metrics;
};

// Each instance is a JSON point {"x", "y"}, so the pipeline runs from schema
// inference through extraction and reflection exactly as for documents.
MilRun mil_run() {
  const auto set = synth::disc_mil(2000, 42);
  std::vector<Json> docs;
  for (std::size_t b = 0; b < set.bags.size(); ++b) {
    const auto& x = set.bags[b].as_bag().child->as_array().x;
    Json pts = Json::array();
    for (std::size_t i = 0; i < x.cols(); ++i) pts.push_back(Json{{"x", x(0, i)}, {"y", x(1, i)}});
    docs.push_back(Json{{"points", pts}, {"label", set.labels[b]}});
  }
  const std::size_t n_train = 1500;
  const std::vector<Json> train_docs(docs.begin(), docs.begin() + n_train);
  const std::vector<Json> test_docs(docs.begin() + n_train, docs.end());
  const std::vector<int> y_train(set.labels.begin(), set.labels.begin() + n_train);
  const std::vector<int> y_test(set.labels.begin() + n_train, set.labels.end());

  ExtractorPolicy policy;
  policy.label_path = "label";
  ModelBundle bundle;
  bundle.extractor = build_extractor(infer_schema(train_docs), policy);
  bundle.labels = LabelVocabulary({"0", "1"});
  Prescription p;
  p.hidden = 50;
  p.output_dim = 2;
  p.seed = 7;
  bundle.model = reflect_model(bundle.extractor.root, p);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch = 100;
  cfg.seed = 11;
  train(bundle.model, extract_batch(bundle.extractor, train_docs), y_train, cfg);

  const Matrix probs = predict_proba(bundle.model, extract_batch(bundle.extractor, test_docs));
  const auto report = evaluate(probs, y_test);
  MilRun out;
  out.accuracy = report.accuracy;
  out.bundle = dump_json(bundle_to_json(bundle));
  out.metrics = dump_json(Json{{"accuracy", report.accuracy}, {"macroF1", report.macro_f1},
                               {"AUROC", *report.auroc}, {"AUPRC", *report.auprc}});
  return out;
}

// ---------------------------------------------------------------------------
// 12. graph end-to-end

struct GraphRun {
  double learned = 0;
  double baseline = 0;
  std::string models;
  std::string metrics;
};

GraphRun graph_run() {
  const auto pg = synth::planted_cliques(synth::PlantedSpec{}, 5);
  std::vector<RelationGraph> rels;
  for (std::size_t r = 0; r < pg.rel_names.size(); ++r) {
    RelationGraph rg;
    rg.relation.name = pg.rel_names[r];
    for (const auto& [a, b] : pg.edges[r]) rg.relation.add_edge(a, b);
    rg.graph = transform(rg.relation);
    rels.push_back(std::move(rg));
  }
  GraphInferConfig cfg;
  cfg.folds = 5;
  cfg.K = 100;
  cfg.model.hidden = 20;
  cfg.train.epochs = 10;
  cfg.train.loss = LossKind::WeightedBce;
  cfg.train.balancing = Balancing::Balanced;
  cfg.seed = 3;
  const auto learned = kfold_graph_inference(rels, pg.blacklist, cfg);
  const auto base = kfold_ptp(rels, pg.blacklist, cfg.folds, 20, cfg.seed);

  GraphRun out;
  out.learned = auroc(learned.scores, learned.labels);
  out.baseline = auroc(base.scores, base.labels);
  Json models = Json::array();
  for (const auto& m : learned.models) models.push_back(model_to_json(m));
  out.models = dump_json(models);
  Json scores = Json::array();
  for (double s : learned.scores) scores.push_back(s);
  out.metrics = dump_json(Json{{"AUROC", out.learned},
                               {"AUPRC", auprc(learned.scores, learned.labels)},
                               {"PTP_AUROC", out.baseline},
                               {"scores", scores}});
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit;  // seconds; 0 = none
    std::function<Outcome()> run;
  };

  MilRun mil1;
  GraphRun graph1;
  const std::vector<Criterion> criteria{
      {1, "aggregation identities", 5, c1_identities},
      {2, "aggregation limits", 5, c2_limits},
      {3, "tree gradients", 60, c3_gradients},
      {4, "batch merge equivalence", 30, c4_merge},
      {5, "missing-data exactness", 0, c5_missing},
      {6, "schema suite", 0, c6_schema},
      {7, "transform oracle", 10, c7_transform},
      {8, "edge features", 0, c8_features},
      {9, "k-step vs walks", 0, c9_kstep},
      {10, "threat propagation", 0, c10_ptp},
      {11, "synthetic MIL end-to-end", 60,
       [&] {
         mil1 = mil_run();
         return Outcome{mil1.accuracy >= 0.95, "test accuracy " + fmt("%.4f", mil1.accuracy) + " (>= 0.95)"};
       }},
      {12, "synthetic graph end-to-end", 300,
       [&] {
         graph1 = graph_run();
         return Outcome{graph1.learned >= 0.9 && graph1.learned > graph1.baseline,
                        "learned AUROC " + fmt("%.4f", graph1.learned) + " vs PTP " + fmt("%.4f", graph1.baseline)};
       }},
      {13, "determinism", 0,
       [&] {
         const auto mil2 = mil_run();
         const auto graph2 = graph_run();
         const bool same_mil = mil2.bundle == mil1.bundle && mil2.metrics == mil1.metrics;
         const bool same_graph = graph2.models == graph1.models && graph2.metrics == graph1.metrics;
         return Outcome{same_mil && same_graph && !mil1.bundle.empty() && !graph1.models.empty(),
                        std::string("MIL model+metrics ") + (same_mil ? "identical" : "DIFFER") +
                            ", graph models+metrics " + (same_graph ? "identical" : "DIFFER") + " (threads " +
                            std::to_string(thread_count()) + ")"};
       }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.limit > 0 && secs >= c.limit) {
      o.pass = false;
      o.detail += ", exceeded " + fmt("%.0f", c.limit) + " s";
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %-28s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
