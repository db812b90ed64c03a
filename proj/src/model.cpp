#include "gldgcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "gldgcn/errors.hpp"

namespace gldgcn {
namespace {

DenseMatrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, RngStream& rng) {
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = (2.0 * rng.uniform() - 1.0) * bound;
  return m;
}

DenseMatrix glorot(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  return uniform_matrix(fan_in, fan_out, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

Var branch(Tape& t, Var x, const std::vector<Var>& weights, const GraphView& view, Var s,
           const std::shared_ptr<const CsrMatrix>& fixed_op, const ModelConfig& cfg, bool training,
           RngStream* rng) {
  Var h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (training) h = ad::dropout(t, h, cfg.dropout_rate, *rng, true);
    Var hw = ad::matmul(t, h, weights[l]);
    h = fixed_op ? ad::propagate(t, fixed_op, hw) : ad::propagate_normalized(t, view.support, s, hw);
    if (l + 1 < weights.size()) h = ad::relu(t, h);
  }
  return ad::row_softmax(t, h);
}

// Records the learned S on the tape. Returns an invalid Var when S is frozen.
Var record_s(Tape& t, Var x, const GraphView& view, ModelParams& params, const ModelConfig& cfg) {
  if (!cfg.learn_graph) return Var{};
  Var h = x;
  if (!params.w_gl.value.empty()) h = ad::matmul(t, x, t.parameter(params.w_gl));
  return learn_s(t, h, t.parameter(params.a), view.support);
}

void write_tensor(std::ostream& out, const Parameter& p) {
  out << "tensor " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
  char buf[40];
  for (std::size_t i = 0; i < p.value.rows(); ++i) {
    for (std::size_t j = 0; j < p.value.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%a", p.value(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (depth < 2) throw ConfigError("depth must be >= 2");
  if (hidden_gcn < 1) throw ConfigError("hidden_gcn must be >= 1");
  if (hidden_gl < 0) throw ConfigError("hidden_gl must be >= 0");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1 and lambda2 must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(lr1 > 0.0) || !(lr2 > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (ppmi_refresh < 0) throw ConfigError("ppmi_refresh must be >= 0");
  if (!(stop_tolerance >= 0.0)) throw ConfigError("stop_tolerance must be >= 0");
  walk.validate();
  gl.validate();
}

void apply_dataset_defaults(ModelConfig& cfg, const std::string& dataset_name) {
  std::string lower = dataset_name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower.find("citeseer") != std::string::npos) {
    cfg.hidden_gcn = 30;
    cfg.lr2 = 0.001;
  }
  // Karate has one-hot features, so the scorer reads them directly.
  if (lower == "karate") cfg.hidden_gl = 0;
}

std::vector<Parameter*> ModelParams::graph_learner() {
  std::vector<Parameter*> out;
  if (!a.value.empty()) out.push_back(&a);
  if (!w_gl.value.empty()) out.push_back(&w_gl);
  return out;
}

std::vector<Parameter*> ModelParams::convolutions() {
  std::vector<Parameter*> out;
  for (Parameter& p : w_a) out.push_back(&p);
  for (Parameter& p : w_p) out.push_back(&p);
  return out;
}

std::vector<Parameter*> ModelParams::all() {
  std::vector<Parameter*> out = graph_learner();
  for (Parameter* p : convolutions()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> ModelParams::all() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<ModelParams*>(this)->all()) out.push_back(p);
  return out;
}

double ModelParams::max_abs_change(const ModelParams& other) const {
  const auto mine = all();
  const auto theirs = other.all();
  if (mine.size() != theirs.size()) throw ShapeError("max_abs_change: parameter sets differ");
  double worst = 0.0;
  for (std::size_t k = 0; k < mine.size(); ++k) {
    const auto& x = mine[k]->value.values();
    const auto& y = theirs[k]->value.values();
    if (x.size() != y.size()) throw ShapeError("max_abs_change: shape mismatch in " + mine[k]->name);
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  }
  return worst;
}

ModelParams init_params(const ModelConfig& cfg, std::size_t features, int classes) {
  cfg.validate();
  if (features == 0 || classes < 1) throw ShapeError("init_params: empty features or classes");
  ModelParams p;
  if (cfg.learn_graph) {
    RngStream rng(derive_seed(cfg.seed, "init.graph_learner"));
    std::size_t score_dim = features;
    if (cfg.hidden_gl > 0) {
      score_dim = static_cast<std::size_t>(cfg.hidden_gl);
      p.w_gl = Parameter("w_gl", glorot(features, score_dim, rng));
    }
    p.a = Parameter("a", uniform_matrix(score_dim, 1, 1.0 / std::sqrt(static_cast<double>(score_dim)), rng));
  }
  auto layers = [&](const std::string& prefix, std::string_view label) {
    RngStream rng(derive_seed(cfg.seed, label));
    std::vector<Parameter> ws;
    std::size_t in = features;
    for (int l = 0; l < cfg.depth; ++l) {
      const std::size_t out = l + 1 == cfg.depth ? static_cast<std::size_t>(classes)
                                                 : static_cast<std::size_t>(cfg.hidden_gcn);
      ws.emplace_back(prefix + "." + std::to_string(l), glorot(in, out, rng));
      in = out;
    }
    return ws;
  };
  p.w_a = layers("w_a", "init.w_a");
  if (!cfg.share_weights) p.w_p = layers("w_p", "init.w_p");
  return p;
}

GraphView make_view(std::shared_ptr<const DenseMatrix> x, const Graph* graph, const ModelConfig& cfg) {
  GraphView v;
  v.x = std::move(x);
  v.has_graph = graph != nullptr;
  if (graph) {
    if (graph->num_nodes() != v.x->rows()) {
      throw DataError("graph has " + std::to_string(graph->num_nodes()) + " nodes, features have " +
                      std::to_string(v.x->rows()) + " rows");
    }
    v.support = masked_support(add_self_loops(*graph));
  } else {
    v.support = dense_support(v.x->rows());
  }
  if (!cfg.learn_graph) v.frozen_op = std::make_shared<const CsrMatrix>(sym_normalize(*v.support));
  v.dist2 = pair_sq_distances(*v.x, *v.support);
  return v;
}

bool needs_p_branch(const ModelConfig& cfg) { return cfg.lambda1 > 0.0 || cfg.supervise != Supervise::a; }

ForwardCache forward(Tape& t, const GraphView& view, ModelParams& params, const ModelConfig& cfg,
                     const std::shared_ptr<const CsrMatrix>& p_op, bool training,
                     DropoutStreams* streams, bool with_p) {
  if (training && !streams) throw std::invalid_argument("forward: training needs dropout streams");
  if (with_p && !p_op) throw std::invalid_argument("forward: PPMI branch needs an operator");
  ForwardCache cache;
  Var x = t.constant(view.x);
  cache.s = record_s(t, x, view, params, cfg);
  std::vector<Var> wa;
  for (Parameter& w : params.w_a) wa.push_back(t.parameter(w));
  cache.z_a = branch(t, x, wa, view, cache.s, cfg.learn_graph ? nullptr : view.frozen_op, cfg, training,
                     streams ? &streams->a : nullptr);
  if (with_p) {
    std::vector<Var> wp = wa;
    if (!cfg.share_weights) {
      wp.clear();
      for (Parameter& w : params.w_p) wp.push_back(t.parameter(w));
    }
    cache.z_p = branch(t, x, wp, view, Var{}, p_op, cfg, training, streams ? &streams->p : nullptr);
  }
  return cache;
}

LossTerms total_loss(Tape& t, const ForwardCache& cache, const GraphView& view,
                     std::span<const int> labels, std::span<const std::size_t> train,
                     const ModelConfig& cfg, double weight) {
  if (train.empty()) throw DataError("total_loss: empty train mask");
  LossTerms out;
  Var l0;
  switch (cfg.supervise) {
    case Supervise::a:
      l0 = ad::masked_cross_entropy(t, cache.z_a, labels, train, cfg.reduction);
      break;
    case Supervise::p:
      l0 = ad::masked_cross_entropy(t, cache.z_p, labels, train, cfg.reduction);
      break;
    case Supervise::both:
      l0 = ad::scale(t, ad::add(t, ad::masked_cross_entropy(t, cache.z_a, labels, train, cfg.reduction),
                                ad::masked_cross_entropy(t, cache.z_p, labels, train, cfg.reduction)),
                     0.5);
      break;
  }
  out.l0 = t.scalar(l0);
  Var total = l0;
  if (cache.z_p.valid()) {
    Var reg = ad::branch_agreement(t, cache.z_p, cache.z_a);
    if (cfg.agreement == AgreementNorm::total) reg = ad::scale(t, reg, static_cast<double>(view.num_nodes()));
    out.lreg = t.scalar(reg);
    if (cfg.lambda1 > 0.0) total = ad::add(t, total, ad::scale(t, reg, cfg.lambda1));
  }
  if (cache.s.valid()) {
    Var gl = ad::graph_learning_loss(t, cache.s, view.dist2, cfg.gl.gamma_reg, cfg.gl.beta, view.has_graph);
    out.lgl = t.scalar(gl);
    if (cfg.lambda2 > 0.0) total = ad::add(t, total, ad::scale(t, gl, cfg.lambda2));
  }
  if (weight != 1.0) total = ad::scale(t, total, weight);
  out.total = total;
  return out;
}

CsrMatrix current_s(const GraphView& view, ModelParams& params, const ModelConfig& cfg) {
  CsrMatrix s = *view.support;
  if (!cfg.learn_graph) return s;
  Tape t;
  Var sv = record_s(t, t.constant(view.x), view, params, cfg);
  s.values = t.value(sv).values();
  return s;
}

std::shared_ptr<const CsrMatrix> build_p_operator(const CsrMatrix& weights, const WalkConfig& walk) {
  return std::make_shared<const CsrMatrix>(ppmi_operator(ppmi(frequency_matrix(weights, walk))));
}

DenseMatrix predict_proba(const GraphView& view, ModelParams& params, const ModelConfig& cfg) {
  Tape t;
  ForwardCache c = forward(t, view, params, cfg, nullptr, false, nullptr, false);
  return t.value(c.z_a);
}

std::vector<int> predict(const GraphView& view, ModelParams& params, const ModelConfig& cfg) {
  return row_argmax(predict_proba(view, params, cfg));
}

double accuracy(std::span<const int> pred, std::span<const int> labels, std::span<const std::size_t> mask) {
  if (mask.empty()) throw DataError("accuracy: empty mask");
  std::size_t correct = 0;
  for (std::size_t i : mask) {
    if (i >= pred.size() || i >= labels.size()) throw DataError("accuracy: mask index out of range");
    if (pred[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

void write_checkpoint(std::ostream& out, const ModelParams& params,
                      const std::vector<std::pair<std::string, std::string>>& config_echo) {
  out << "gldgcn-checkpoint 1\n";
  for (const auto& [k, v] : config_echo) out << "config " << k << '=' << v << '\n';
  for (const Parameter* p : params.all()) write_tensor(out, *p);
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "gldgcn-checkpoint 1") {
    throw DataError("checkpoint: missing or unsupported version line");
  }
  Checkpoint ck;
  while (std::getline(in, line)) {
    if (line == "end") return ck;
    if (line.rfind("config ", 0) == 0) {
      const std::string kv = line.substr(7);
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw DataError("checkpoint: bad config line '" + line + "'");
      ck.config.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      continue;
    }
    std::istringstream head(line);
    std::string tag, name;
    std::size_t rows = 0, cols = 0;
    if (!(head >> tag >> name >> rows >> cols) || tag != "tensor") {
      throw DataError("checkpoint: unexpected line '" + line + "'");
    }
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      if (!std::getline(in, line)) throw DataError("checkpoint: truncated tensor " + name);
      const char* p = line.c_str();
      for (std::size_t j = 0; j < cols; ++j) {
        char* end = nullptr;
        m(i, j) = std::strtod(p, &end);
        if (end == p) throw DataError("checkpoint: bad value in tensor " + name);
        p = end;
      }
    }
    ck.tensors.emplace_back(name, std::move(m));
  }
  throw DataError("checkpoint: missing end marker");
}

void load_params(ModelParams& params, const Checkpoint& ck) {
  auto targets = params.all();
  if (targets.size() != ck.tensors.size()) {
    throw DataError("checkpoint holds " + std::to_string(ck.tensors.size()) + " tensors, model expects " +
                    std::to_string(targets.size()));
  }
  for (Parameter* p : targets) {
    auto it = std::find_if(ck.tensors.begin(), ck.tensors.end(),
                           [&](const Parameter& c) { return c.name == p->name; });
    if (it == ck.tensors.end()) throw DataError("checkpoint: missing tensor " + p->name);
    if (!it->value.same_shape(p->value)) throw DataError("checkpoint: shape mismatch for " + p->name);
    p->value = it->value;
    p->zero_grad();
  }
}

}  // namespace gldgcn
