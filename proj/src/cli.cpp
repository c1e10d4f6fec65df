#include "hmill/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "hmill/encode.hpp"
#include "hmill/error.hpp"
#include "hmill/graph.hpp"
#include "hmill/infer.hpp"
#include "hmill/io.hpp"
#include "hmill/metrics.hpp"
#include "hmill/ptp.hpp"
#include "hmill/schema.hpp"
#include "hmill/serialize.hpp"
#include "hmill/train.hpp"

namespace hmill::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir + "'");
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

/// Record of one invocation, written next to its outputs.
struct Manifest {
  explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  Json config = Json::object();
  std::uint64_t seed = 0;
  Json inputs = Json::object();
  std::vector<std::string> outputs;
  Clock::time_point start = Clock::now();

  void input(const std::string& path) { inputs[path] = file_digest(path); }

  void write(const std::string& path) const {
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    Json j{{"command", command},
           {"config", config},
           {"seed", seed},
           {"formats", {{"model", kModelFormatVersion}, {"schema", 1}}},
           {"inputs", inputs},
           {"outputs", outputs},
           {"threads", thread_count()},
           {"wall_time_seconds", secs}};
    write_file_atomic(path, dump_json(j));
  }
};

// ---------------------------------------------------------------------------

struct SchemaArgs {
  std::string input;
  std::string out;
  std::size_t max_unique = 100;
};

int cmd_schema(const SchemaArgs& a, std::ostream& out, std::ostream& err) {
  Manifest m("schema");
  m.config = {{"input", a.input}, {"out", a.out}, {"max_unique", a.max_unique}};
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw IoError("cannot read '" + a.input + "'");
  SchemaBuilder builder(SchemaOptions{a.max_unique});
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json doc;
    try {
      doc = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(a.input + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    try {
      builder.add(doc);
    } catch (const SchemaError& e) {
      err << "schema conflict at " << StructureError::display(e.path()) << " (line " << lineno
          << "): " << e.what() << "\n";
      return kExitInvalid;
    }
  }
  if (in.bad()) throw IoError("error while reading '" + a.input + "'");
  write_file_atomic(a.out, dump_json(schema_to_json(builder.schema(), SchemaOptions{a.max_unique})));
  m.input(a.input);
  m.outputs.push_back(a.out);
  m.write(a.out + ".manifest.json");
  out << "inferred schema from " << builder.documents() << " documents\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string schema;
  std::string label;
  std::size_t hidden = 50;
  std::string agg = "max,mean,lse,pnorm";
  std::size_t epochs = 30;
  std::size_t batch = 100;
  double lr = 0.001;
  std::uint64_t seed = 0;
  std::string out;
  std::string loss = "ce";
  double w0 = 0.9;
  double w1 = 0.1;
  bool balanced = false;
  bool freeze_psi = false;
  std::string exclude;
  std::string numeric = "identity";
  std::size_t max_categories = 100;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream&) {
  Manifest m("train");
  m.seed = a.seed;
  const auto docs = read_jsonl(a.data);
  if (docs.empty()) throw Error("no training documents in '" + a.data + "'");
  SchemaOptions sopts;
  const SchemaNode schema = schema_from_json(Json::parse(read_file(a.schema)), &sopts);

  ExtractorPolicy policy;
  policy.categorical_max = a.max_categories;
  policy.label_path = a.label;
  policy.exclude_paths = split(a.exclude, ',');
  if (a.numeric == "identity") {
    policy.numeric = NumericEncoding::Identity;
  } else if (a.numeric == "log1p") {
    policy.numeric = NumericEncoding::Log1p;
  } else {
    throw Error("--numeric must be identity or log1p");
  }
  ModelBundle bundle;
  bundle.extractor = build_extractor(schema, policy);
  bundle.labels = LabelVocabulary::build(docs, a.label);
  const auto labels = extract_labels(docs, a.label, bundle.labels);
  const DataNode data = extract_batch(bundle.extractor, docs);

  Prescription p;
  p.hidden = a.hidden;
  p.aggregations = parse_agg_kinds(a.agg);
  p.output_dim = std::max<std::size_t>(2, bundle.labels.size());
  p.seed = stream_seed(a.seed, "init");
  bundle.model = reflect_model(bundle.extractor.root, p);

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.alpha = a.lr;
  cfg.seed = stream_seed(a.seed, "train");
  cfg.balancing = a.balanced ? Balancing::Balanced : Balancing::None;
  cfg.train_psi = !a.freeze_psi;
  cfg.w0 = a.w0;
  cfg.w1 = a.w1;
  if (a.loss == "ce") {
    cfg.loss = LossKind::CrossEntropy;
  } else if (a.loss == "wbce") {
    cfg.loss = LossKind::WeightedBce;
  } else {
    throw Error("--loss must be ce or wbce");
  }
  train(bundle.model, data, labels, cfg,
        [&](std::size_t epoch, double loss) { out << (epoch + 1) << "\t" << fmt(loss) << "\n"; });

  m.config = {{"data", a.data},     {"schema", a.schema},   {"label", a.label},
              {"hidden", a.hidden}, {"agg", a.agg},         {"epochs", a.epochs},
              {"batch", a.batch},   {"lr", a.lr},           {"loss", a.loss},
              {"w0", a.w0},         {"w1", a.w1},           {"balanced", a.balanced},
              {"freeze_psi", a.freeze_psi}, {"exclude", a.exclude}, {"numeric", a.numeric},
              {"max_categories", a.max_categories}, {"out", a.out}};
  bundle.meta = {{"label_path", a.label}, {"train", m.config}, {"seed", a.seed}};
  save_bundle(bundle, a.out);
  m.input(a.data);
  m.input(a.schema);
  m.outputs.push_back(a.out);
  m.write(a.out + ".manifest.json");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string data;
  std::string labels;  // label path inside documents
  std::string curves = "pr,roc,logroc";
  std::size_t points = 100;
  std::string out_dir;
  std::string id_path = "id";
  std::string schema;  // optional: validate documents before scoring
  bool ignore_extra_keys = false;
};

void write_curve(const std::string& path, const std::vector<CurvePoint>& pts) {
  std::string s = "x,y\n";
  for (const auto& p : pts) s += fmt(p.x) + "," + fmt(p.y) + "\n";
  write_file_atomic(path, s);
}

int cmd_predict(const PredictArgs& a, bool require_labels, std::ostream& out, std::ostream&) {
  Manifest m(require_labels ? "eval" : "predict");
  const ModelBundle bundle = load_bundle(a.model);
  const auto docs = read_jsonl(a.data);
  if (!a.schema.empty()) {
    const SchemaNode schema = schema_from_json(Json::parse(read_file(a.schema)));
    for (std::size_t j = 0; j < docs.size(); ++j) {
      const auto r = matches(docs[j], schema, MatchOptions{a.ignore_extra_keys});
      if (!r) throw SchemaError(r.path, "document " + std::to_string(j + 1) + ": " + r.reason);
    }
  }
  const DataNode data = docs.empty() ? empty_like(bundle.extractor.root) : extract_batch(bundle.extractor, docs);
  const Matrix probs = predict_proba(bundle.model, data);
  ensure_dir(a.out_dir);

  std::string tsv = "id";
  const auto& classes = bundle.labels.classes();
  for (std::size_t c = 0; c < probs.rows(); ++c) tsv += "\t" + (c < classes.size() ? classes[c] : std::to_string(c));
  tsv += "\n";
  for (std::size_t j = 0; j < docs.size(); ++j) {
    const auto id = value_at_path(docs[j], a.id_path);
    tsv += id ? label_text(*id) : std::to_string(j);
    for (std::size_t c = 0; c < probs.rows(); ++c) tsv += "\t" + fmt(probs(c, j));
    tsv += "\n";
  }
  const auto pred_path = in_dir(a.out_dir, "predictions.tsv");
  write_file_atomic(pred_path, tsv);
  m.outputs.push_back(pred_path);

  std::string label_path = a.labels;
  if (label_path.empty() && require_labels && bundle.meta.contains("label_path")) {
    label_path = bundle.meta["label_path"].get<std::string>();
  }
  if (require_labels && label_path.empty()) throw Error("eval needs --labels");
  if (!label_path.empty()) {
    if (docs.empty()) throw Error("no documents to evaluate");
    const auto labels = extract_labels(docs, label_path, bundle.labels);
    const MetricsReport r = evaluate(probs, labels);
    Json j{{"documents", docs.size()},
           {"accuracy", r.accuracy},
           {"macroF1", r.macro_f1},
           {"AUPRC", r.auprc ? Json(*r.auprc) : Json(nullptr)},
           {"AUROC", r.auroc ? Json(*r.auroc) : Json(nullptr)}};
    const auto metrics_path = in_dir(a.out_dir, "metrics.json");
    write_file_atomic(metrics_path, dump_json(j));
    m.outputs.push_back(metrics_path);
    if (r.auroc) {
      const auto scores = probs.row(1);
      for (const auto& name : split(a.curves, ',')) {
        CurveSpec spec{a.points, XScale::Linear};
        CurveKind kind = CurveKind::Roc;
        if (name == "pr") {
          kind = CurveKind::Pr;
        } else if (name == "roc") {
          kind = CurveKind::Roc;
        } else if (name == "logroc") {
          spec.scale = XScale::Log;
        } else if (name == "logpr") {
          kind = CurveKind::Pr;
          spec.scale = XScale::Log;
        } else {
          throw Error("unknown curve '" + name + "' (expected pr, roc, logroc or logpr)");
        }
        const auto path = in_dir(a.out_dir, name + ".csv");
        write_curve(path, curve(scores, labels, spec, kind));
        m.outputs.push_back(path);
      }
    }
    out << "accuracy\t" << fmt(r.accuracy) << "\n";
    out << "macroF1\t" << fmt(r.macro_f1) << "\n";
    if (r.auroc) out << "AUROC\t" << fmt(*r.auroc) << "\nAUPRC\t" << fmt(*r.auprc) << "\n";
  }
  m.config = {{"model", a.model}, {"data", a.data}, {"labels", label_path}, {"curves", a.curves},
              {"points", a.points}, {"out_dir", a.out_dir}, {"id_path", a.id_path}, {"schema", a.schema},
              {"ignore_extra_keys", a.ignore_extra_keys}};
  m.input(a.model);
  m.input(a.data);
  if (!a.schema.empty()) m.input(a.schema);
  m.write(in_dir(a.out_dir, "manifest.json"));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GraphArgs {
  std::string relations;
  std::string only;
  std::string blacklist;
  std::size_t K = 100;
  std::size_t k_steps = 1;
  std::size_t folds = 10;
  std::size_t iters = 20;
  std::uint64_t seed = 0;
  std::string out;
  std::string out_dir;
  std::size_t hidden = 20;
  std::size_t epochs = 10;
  std::size_t batch = 100;
  double lr = 0.001;
  std::string agg = "max,mean,lse,pnorm";
  bool compare_ptp = false;
};

std::vector<RelationGraph> load_relations(const GraphArgs& a, Manifest& m) {
  std::vector<std::pair<std::string, std::string>> specs;
  for (const auto& item : split(a.relations, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw Error("relation '" + item + "' must be given as name=path");
    }
    specs.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  if (specs.empty()) throw Error("--relations is empty");
  std::sort(specs.begin(), specs.end());
  for (std::size_t i = 1; i < specs.size(); ++i) {
    if (specs[i].first == specs[i - 1].first) throw Error("relation '" + specs[i].first + "' given twice");
  }
  const auto only = split(a.only, ',');
  for (const auto& name : only) {
    const bool known = std::any_of(specs.begin(), specs.end(), [&](const auto& s) { return s.first == name; });
    if (!known) throw Error("unknown relation name '" + name + "'");
  }
  std::vector<RelationGraph> out;
  for (const auto& [name, path] : specs) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    auto rel = load_relation(path, name);
    m.input(path);
    auto g = transform(rel);
    out.push_back(RelationGraph{std::move(rel), std::move(g)});
  }
  return out;
}

Blacklist maybe_blacklist(const GraphArgs& a, Manifest& m) {
  if (a.blacklist.empty()) return {};
  m.input(a.blacklist);
  return load_blacklist(a.blacklist);
}

Json graph_config(const GraphArgs& a) {
  return {{"relations", a.relations}, {"only", a.only}, {"blacklist", a.blacklist},
          {"K", a.K},                 {"k_steps", a.k_steps}, {"folds", a.folds},
          {"iters", a.iters},         {"hidden", a.hidden},   {"epochs", a.epochs},
          {"batch", a.batch},         {"lr", a.lr},           {"agg", a.agg},
          {"compare_ptp", a.compare_ptp}};
}

std::string require_out(const std::string& v, const char* flag) {
  if (v.empty()) throw Error(std::string(flag) + " is required");
  return v;
}

int cmd_graph(const std::string& sub, const GraphArgs& a, std::ostream& out, std::ostream& err) {
  Manifest m("graph " + sub);
  m.seed = a.seed;
  m.config = graph_config(a);
  const auto rels = load_relations(a, m);
  const Blacklist bl = maybe_blacklist(a, m);

  if (sub == "transform") {
    const auto dir = require_out(a.out_dir, "--out-dir");
    ensure_dir(dir);
    for (const auto& rg : rels) {
      std::vector<std::tuple<std::string, std::string, std::size_t>> rows;
      for (const auto& [u, v] : rg.graph.edge_list()) {
        auto a_id = rg.relation.left[u];
        auto b_id = rg.relation.left[v];
        if (b_id < a_id) std::swap(a_id, b_id);
        rows.emplace_back(a_id, b_id, rg.graph.witnesses(u, v)->count);
      }
      std::sort(rows.begin(), rows.end());
      std::string tsv = "u\tv\twitnesses\n";
      for (const auto& [u, v, c] : rows) tsv += u + "\t" + v + "\t" + std::to_string(c) + "\n";
      const auto path = in_dir(dir, rg.relation.name + ".edges.tsv");
      write_file_atomic(path, tsv);
      m.outputs.push_back(path);
      out << rg.relation.name << "\t" << rg.relation.left.size() << " vertices\t" << rows.size() << " edges\n";
    }
    m.write(in_dir(dir, "manifest.json"));
    return kExitOk;
  }

  if (sub == "features") {
    const auto path = require_out(a.out, "--out");
    std::string tsv = "relation\tv\tu";
    for (std::size_t i = 0; i < kEdgeFeatureDim; ++i) tsv += "\tf" + std::to_string(i + 1);
    tsv += "\n";
    for (const auto& rg : rels) {
      std::vector<std::size_t> order(rg.relation.left.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t x, std::size_t y) { return rg.relation.left[x] < rg.relation.left[y]; });
      for (auto v : order) {
        std::vector<std::size_t> nb = rg.graph.adj[v];
        std::sort(nb.begin(), nb.end(),
                  [&](std::size_t x, std::size_t y) { return rg.relation.left[x] < rg.relation.left[y]; });
        for (auto u : nb) {
          const auto f = edge_features(rg.graph, rg.relation, v, u, bl.contains(rg.relation.left[u]));
          tsv += rg.relation.name + "\t" + rg.relation.left[v] + "\t" + rg.relation.left[u];
          for (double x : f) tsv += "\t" + fmt(x);
          tsv += "\n";
        }
      }
    }
    write_file_atomic(path, tsv);
    m.outputs.push_back(path);
    m.write(path + ".manifest.json");
    return kExitOk;
  }

  if (sub == "sample") {
    const auto path = require_out(a.out, "--out");
    const auto vertices = vertex_universe(rels);
    std::string jsonl;
    for (const auto& v : vertices) {
      const ListedFn listed = [&](const std::string& id) { return id != v && bl.contains(id); };
      const DataNode s = build_vertex_sample(v, rels, listed, a.K, a.seed);
      const auto& p = s.as_product();
      Json relations = Json::object();
      for (std::size_t i = 0; i < p.keys.size(); ++i) {
        if (p.is_missing(i, 0)) {
          relations[p.keys[i]] = nullptr;
          continue;
        }
        const auto& bag = p.children[i].as_bag();
        const auto& x = bag.child->as_array().x;
        Json inst = Json::array();
        for (std::size_t c = 0; c < x.cols(); ++c) {
          inst.push_back(Json{{"weight", (*bag.weights)[c]}, {"features", x.col(c)}});
        }
        relations[p.keys[i]] = std::move(inst);
      }
      jsonl += Json{{"id", v}, {"label", bl.contains(v) ? 1 : 0}, {"relations", std::move(relations)}}.dump() + "\n";
    }
    write_file_atomic(path, jsonl);
    m.outputs.push_back(path);
    m.write(path + ".manifest.json");
    out << "wrote " << vertices.size() << " vertex samples\n";
    return kExitOk;
  }

  if (sub == "ptp") {
    const auto path = require_out(a.out, "--out");
    if (a.blacklist.empty()) throw Error("ptp needs --blacklist");
    const auto vertices = vertex_universe(rels);
    std::vector<BipartiteRelation> plain;
    for (const auto& rg : rels) plain.push_back(rg.relation);
    const PtpGraph g = ptp_graph_from_relations(plain, vertices);
    std::vector<std::size_t> seeds;
    std::size_t unknown = 0;
    for (const auto& id : bl.members) {
      auto it = std::lower_bound(vertices.begin(), vertices.end(), id);
      if (it != vertices.end() && *it == id) {
        seeds.push_back(static_cast<std::size_t>(it - vertices.begin()));
      } else {
        ++unknown;
      }
    }
    std::sort(seeds.begin(), seeds.end());
    if (unknown) err << unknown << " blacklisted ids do not occur in any relation\n";
    const auto scores = ptp(g, seeds, a.iters);
    std::string tsv = "id\tscore\n";
    for (std::size_t v = 0; v < vertices.size(); ++v) tsv += vertices[v] + "\t" + fmt(scores[v]) + "\n";
    write_file_atomic(path, tsv);
    m.outputs.push_back(path);
    m.write(path + ".manifest.json");
    return kExitOk;
  }

  if (sub == "infer") {
    const auto dir = require_out(a.out_dir, "--out-dir");
    if (a.blacklist.empty()) throw Error("infer needs --blacklist");
    GraphInferConfig cfg;
    cfg.K = a.K;
    cfg.k_steps = a.k_steps;
    cfg.folds = a.folds;
    cfg.seed = a.seed;
    cfg.model.hidden = a.hidden;
    cfg.model.aggregations = parse_agg_kinds(a.agg);
    cfg.train.epochs = a.epochs;
    cfg.train.batch = a.batch;
    cfg.train.alpha = a.lr;
    cfg.train.loss = LossKind::WeightedBce;
    cfg.train.balancing = Balancing::Balanced;
    const auto res = kfold_graph_inference(rels, bl, cfg);
    ensure_dir(dir);
    std::vector<std::size_t> fold_of(res.vertices.size(), 0);
    for (std::size_t f = 0; f < res.folds.size(); ++f) {
      for (auto v : res.folds[f]) fold_of[v] = f + 1;
    }
    std::string tsv = "id\tscore\tlabel\tfold\n";
    for (std::size_t v = 0; v < res.vertices.size(); ++v) {
      tsv += res.vertices[v] + "\t" + fmt(res.scores[v]) + "\t" + std::to_string(res.labels[v]) + "\t" +
             (fold_of[v] ? std::to_string(fold_of[v]) : std::string("-")) + "\n";
    }
    const auto scores_path = in_dir(dir, "scores.tsv");
    write_file_atomic(scores_path, tsv);
    Json metrics{{"vertices", res.vertices.size()}, {"blacklisted", bl.size()}, {"folds", a.folds}};
    const bool both = std::count(res.labels.begin(), res.labels.end(), 1) > 0 &&
                      std::count(res.labels.begin(), res.labels.end(), 0) > 0;
    if (both) {
      metrics["AUROC"] = auroc(res.scores, res.labels);
      metrics["AUPRC"] = auprc(res.scores, res.labels);
      if (a.compare_ptp) {
        const auto base = kfold_ptp(rels, bl, a.folds, a.iters, a.seed);
        metrics["ptp"] = {{"AUROC", auroc(base.scores, base.labels)}, {"AUPRC", auprc(base.scores, base.labels)}};
      }
    }
    const auto metrics_path = in_dir(dir, "metrics.json");
    write_file_atomic(metrics_path, dump_json(metrics));
    m.outputs = {scores_path, metrics_path};
    m.write(in_dir(dir, "manifest.json"));
    out << metrics.dump() << "\n";
    return kExitOk;
  }
  throw Error("unknown graph command '" + sub + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical multi-instance learning toolkit", "hmill"};
  app.require_subcommand(1);

  SchemaArgs sa;
  auto* schema = app.add_subcommand("schema", "Infer a schema from a JSONL corpus");
  schema->add_option("--input", sa.input, "JSONL documents")->required();
  schema->add_option("--out", sa.out, "Output schema JSON")->required();
  schema->add_option("--max-unique", sa.max_unique, "Unique values kept per leaf");

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "Build and train a model");
  trainc->add_option("--data", ta.data, "JSONL documents")->required();
  trainc->add_option("--schema", ta.schema, "Schema JSON")->required();
  trainc->add_option("--label", ta.label, "Dotted path of the label")->required();
  trainc->add_option("--hidden", ta.hidden, "Width of every hidden layer");
  trainc->add_option("--agg", ta.agg, "Aggregations, comma separated");
  trainc->add_option("--epochs", ta.epochs);
  trainc->add_option("--batch", ta.batch);
  trainc->add_option("--lr", ta.lr, "Adam step size");
  trainc->add_option("--seed", ta.seed);
  trainc->add_option("--out", ta.out, "Output model JSON")->required();
  trainc->add_option("--loss", ta.loss, "ce or wbce");
  trainc->add_option("--w0", ta.w0, "wbce weight of negatives");
  trainc->add_option("--w1", ta.w1, "wbce weight of positives");
  trainc->add_flag("--balanced", ta.balanced, "Class-balanced minibatches");
  trainc->add_flag("--freeze-psi", ta.freeze_psi, "Keep missing-value defaults at zero");
  trainc->add_option("--exclude", ta.exclude, "Paths left out of the features, comma separated");
  trainc->add_option("--numeric", ta.numeric, "identity or log1p");
  trainc->add_option("--max-categories", ta.max_categories, "Largest one-hot vocabulary");

  PredictArgs pa;
  auto add_predict = [&](CLI::App* c) {
    c->add_option("--model", pa.model)->required();
    c->add_option("--data", pa.data)->required();
    c->add_option("--labels", pa.labels, "Dotted path of the label in the documents");
    c->add_option("--curves", pa.curves, "pr, roc, logroc, logpr");
    c->add_option("--points", pa.points);
    c->add_option("--out-dir", pa.out_dir)->required();
    c->add_option("--id-path", pa.id_path, "Dotted path of the document id");
    c->add_option("--schema", pa.schema, "Reject documents that do not match this schema");
    c->add_flag("--ignore-extra-keys", pa.ignore_extra_keys, "With --schema, allow keys the schema never saw");
  };
  auto* predict = app.add_subcommand("predict", "Score documents");
  add_predict(predict);
  auto* eval = app.add_subcommand("eval", "Score documents and compute metrics");
  add_predict(eval);

  GraphArgs ga;
  auto* graph = app.add_subcommand("graph", "Graph commands");
  graph->require_subcommand(1);
  std::string graph_sub;
  for (const char* name : {"transform", "features", "sample", "ptp", "infer"}) {
    auto* c = graph->add_subcommand(name);
    c->add_option("--relations", ga.relations, "name=path,...")->required();
    c->add_option("--only", ga.only, "Use only these relations");
    c->add_option("--blacklist", ga.blacklist);
    c->add_option("--K", ga.K, "Instance cap per bag");
    c->add_option("--k-steps", ga.k_steps);
    c->add_option("--folds", ga.folds);
    c->add_option("--iters", ga.iters);
    c->add_option("--seed", ga.seed);
    c->add_option("--out", ga.out);
    c->add_option("--out-dir", ga.out_dir);
    c->add_option("--hidden", ga.hidden);
    c->add_option("--epochs", ga.epochs);
    c->add_option("--batch", ga.batch);
    c->add_option("--lr", ga.lr);
    c->add_option("--agg", ga.agg);
    c->add_flag("--compare-ptp", ga.compare_ptp);
    c->callback([&graph_sub, name] { graph_sub = name; });
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (schema->parsed()) return cmd_schema(sa, out, err);
    if (trainc->parsed()) return cmd_train(ta, out, err);
    if (predict->parsed()) return cmd_predict(pa, false, out, err);
    if (eval->parsed()) return cmd_predict(pa, true, out, err);
    if (graph->parsed()) return cmd_graph(graph_sub, ga, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace hmill::cli
