#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gldgcn/dense.hpp"
#include "gldgcn/graph.hpp"
#include "gldgcn/graph_learning.hpp"
#include "gldgcn/optim.hpp"
#include "gldgcn/ppmi.hpp"
#include "gldgcn/tape.hpp"

namespace gldgcn {

enum class Supervise { a, p, both };

/// How the branch-agreement distance is normalized.
enum class AgreementNorm {
  per_node,  ///< (1/n) ||Zp - Za||^2
  total,     ///< ||Zp - Za||^2
};

struct ModelConfig {
  int hidden_gl = 200;  ///< width of the projection in front of the pair scorer; 0 scores raw features
  int hidden_gcn = 16;
  int depth = 2;
  bool share_weights = true;
  double lambda1 = 0.01;
  double lambda2 = 0.01;
  double dropout_rate = 0.6;
  double lr1 = 0.005;  ///< graph learner
  double lr2 = 0.005;  ///< convolutions
  double weight_decay = 5e-3;
  int epochs = 1000;
  std::uint64_t seed = 0;
  int ppmi_refresh = 25;  ///< epochs between PPMI rebuilds; 0 builds once
  WalkConfig walk;
  GlConfig gl;
  Supervise supervise = Supervise::a;
  Reduction reduction = Reduction::sum;
  AgreementNorm agreement = AgreementNorm::per_node;
  /// When false S is frozen to the normalized A + I and no graph learner exists.
  bool learn_graph = true;
  bool normalize_features = true;
  /// Stop once no parameter moved more than this in an epoch; 0 disables.
  double stop_tolerance = 1e-5;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Citeseer-like data gets the wider hidden layer and the smaller conv rate;
/// karate scores pairs on the raw features.
void apply_dataset_defaults(ModelConfig& cfg, const std::string& dataset_name);

struct ModelParams {
  Parameter a;                 ///< pair-scorer weights, hidden_gl x 1 (or p x 1)
  Parameter w_gl;              ///< p x hidden_gl projection; empty when unused
  std::vector<Parameter> w_a;  ///< per-layer weights of the S branch
  std::vector<Parameter> w_p;  ///< per-layer weights of the PPMI branch; empty when shared

  std::vector<Parameter*> graph_learner();
  std::vector<Parameter*> convolutions();
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  /// Largest |x - y| over all entries; shapes must agree.
  double max_abs_change(const ModelParams& other) const;
};

/// Glorot-uniform weights and a ~ U[-1/sqrt(p), 1/sqrt(p)].
ModelParams init_params(const ModelConfig& cfg, std::size_t features, int classes);

/// Everything the forward pass needs about one graph (or batch subgraph).
struct GraphView {
  std::shared_ptr<const DenseMatrix> x;
  std::shared_ptr<const CsrMatrix> support;  ///< A + I, or the dense pattern
  std::shared_ptr<const CsrMatrix> frozen_op; ///< sym-normalized support, used when S is frozen
  std::shared_ptr<const std::vector<double>> dist2;
  bool has_graph = false;

  std::size_t num_nodes() const { return x->rows(); }
};

/// Builds the view for an optional graph (self-loops are added here).
GraphView make_view(std::shared_ptr<const DenseMatrix> x, const Graph* graph, const ModelConfig& cfg);

struct ForwardCache {
  Var s;    ///< learned S values over the support (invalid when frozen)
  Var z_a;  ///< softmax output of the S branch
  Var z_p;  ///< softmax output of the PPMI branch (invalid when not computed)
};

/// Dropout streams for one step, one per branch.
struct DropoutStreams {
  RngStream a;
  RngStream p;
};

/// Both branches, or the S branch only when `with_p` is false. `p_op` is the
/// normalized PPMI operator and may be null when with_p is false.
ForwardCache forward(Tape& t, const GraphView& view, ModelParams& params, const ModelConfig& cfg,
                     const std::shared_ptr<const CsrMatrix>& p_op, bool training,
                     DropoutStreams* streams, bool with_p);

/// Whether the current objective needs the PPMI branch at all.
bool needs_p_branch(const ModelConfig& cfg);

struct LossTerms {
  Var total;
  double l0 = 0.0;
  double lreg = 0.0;
  double lgl = 0.0;
};

/// L0 + lambda1 Lreg + lambda2 Lgl, all scaled by `weight`.
LossTerms total_loss(Tape& t, const ForwardCache& cache, const GraphView& view,
                     std::span<const int> labels, std::span<const std::size_t> train,
                     const ModelConfig& cfg, double weight = 1.0);

/// Plain S values of the current parameters on the view.
CsrMatrix current_s(const GraphView& view, ModelParams& params, const ModelConfig& cfg);

/// Normalized PPMI operator built from walks over the given weights.
std::shared_ptr<const CsrMatrix> build_p_operator(const CsrMatrix& weights, const WalkConfig& walk);

/// Eval-mode S-branch output.
DenseMatrix predict_proba(const GraphView& view, ModelParams& params, const ModelConfig& cfg);
/// argmax of the S-branch output, lowest class on ties.
std::vector<int> predict(const GraphView& view, ModelParams& params, const ModelConfig& cfg);
/// Fraction of mask nodes whose prediction matches; DataError on an empty mask.
double accuracy(std::span<const int> pred, std::span<const int> labels, std::span<const std::size_t> mask);

/// Text checkpoint: a version line, the config echo as key=value lines, then
/// each tensor with its shape and hexadecimal float entries.
void write_checkpoint(std::ostream& out, const ModelParams& params,
                      const std::vector<std::pair<std::string, std::string>>& config_echo);
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<Parameter> tensors;
};
Checkpoint read_checkpoint(std::istream& in);
/// Copies checkpoint tensors into params by name; DataError on a mismatch.
void load_params(ModelParams& params, const Checkpoint& ck);

}  // namespace gldgcn
