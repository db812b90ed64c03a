#include "gldgcn/train.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "engine.hpp"
#include "gldgcn/errors.hpp"

namespace gldgcn {
namespace detail {
namespace {

class FullBatch final : public BatchSource {
 public:
  FullBatch(const DatasetBundle& d, const PreparedData& prep) {
    batch_.view = prep.view;
    batch_.labels = d.y;
    batch_.train = d.train;
  }
  std::vector<std::vector<std::uint32_t>> epoch_sets(int) override { return {{0}}; }
  Batch make(const std::vector<std::uint32_t>&) override { return batch_; }

 private:
  Batch batch_;
};

void step_adam(std::vector<Parameter*> params, std::map<const Parameter*, AdamState>& states, double lr,
               double weight_decay) {
  for (Parameter* p : params) adam_step(*p, states[p], lr, weight_decay);
}

}  // namespace

std::uint64_t cluster_set_key(std::span<const std::uint32_t> clusters) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint32_t c : clusters) h = mix64(h ^ (static_cast<std::uint64_t>(c) + 1));
  return h;
}

FitResult run_training(const DatasetBundle& d, const ModelConfig& cfg, const PreparedData& prep,
                       BatchSource& source, const EpochCallback& on_epoch) {
  cfg.validate();
  if (d.train.empty()) throw DataError("training needs at least one labeled training node");
  ModelParams params = init_params(cfg, prep.x->cols(), d.classes);
  std::map<const Parameter*, AdamState> states;
  const bool with_p = needs_p_branch(cfg);
  // (cluster-set key) -> (refresh window, operator)
  std::map<std::uint64_t, std::pair<int, std::shared_ptr<const CsrMatrix>>> p_cache;

  FitResult result;
  result.best = params;
  bool have_best = false;
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const ModelParams before = params;
    HistoryRow row;
    row.epoch = epoch;
    const int window = cfg.ppmi_refresh > 0 ? (epoch - 1) / cfg.ppmi_refresh : 0;

    for (const auto& set : source.epoch_sets(epoch)) {
      Batch batch = source.make(set);
      if (batch.train.empty()) {
        ++result.skipped_batches;
        continue;
      }
      const std::uint64_t key = cluster_set_key(set);
      std::shared_ptr<const CsrMatrix> p_op;
      if (with_p) {
        auto it = p_cache.find(key);
        if (it == p_cache.end() || it->second.first != window) {
          WalkConfig walk = cfg.walk;
          walk.seed = derive_seed(cfg.seed ^ mix64(cfg.walk.seed), "ppmi",
                                  mix64(key) ^ static_cast<std::uint64_t>(window));
          auto op = build_p_operator(current_s(batch.view, params, cfg), walk);
          it = p_cache.insert_or_assign(key, std::make_pair(window, std::move(op))).first;
        }
        p_op = it->second.second;
      }

      DropoutStreams streams{RngStream(derive_seed(cfg.seed, "dropout.a", step)),
                             RngStream(derive_seed(cfg.seed, "dropout.p", step))};
      ++step;
      Tape tape;
      ForwardCache cache = forward(tape, batch.view, params, cfg, p_op, true, &streams, with_p);
      LossTerms terms = total_loss(tape, cache, batch.view, batch.labels, batch.train, cfg, batch.weight);
      const double loss = tape.scalar(terms.total);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " (l0=" << terms.l0 << ", lreg=" << terms.lreg
            << ", lgl=" << terms.lgl << ")";
        throw NumericError(msg.str());
      }
      tape.backward(terms.total);
      result.peak_step_bytes = std::max(result.peak_step_bytes, tape.peak_bytes());
      result.max_batch_nodes = std::max(result.max_batch_nodes, batch.view.num_nodes());
      step_adam(params.graph_learner(), states, cfg.lr1, 0.0);
      step_adam(params.convolutions(), states, cfg.lr2, cfg.weight_decay);
      ++result.batches;

      row.train_loss += loss;
      row.l0 += terms.l0 * batch.weight;
      row.lreg += terms.lreg * batch.weight;
      row.lgl += terms.lgl * batch.weight;
    }

    if (!d.val.empty()) {
      const auto pred = predict(prep.view, params, cfg);
      row.val_acc = accuracy(pred, d.y, d.val);
      if (!have_best || row.val_acc > result.best_val_acc) {
        result.best = params;
        result.best_epoch = epoch;
        result.best_val_acc = row.val_acc;
        have_best = true;
      }
    } else {
      result.best = params;
      result.best_epoch = epoch;
    }
    result.history.push_back(row);
    result.epochs_run = epoch;
    if (on_epoch) on_epoch(row);

    if (cfg.stop_tolerance > 0.0 && result.batches > 0 &&
        params.max_abs_change(before) < cfg.stop_tolerance) {
      result.converged = true;
      break;
    }
  }
  result.last = std::move(params);
  return result;
}

}  // namespace detail

PreparedData prepare(const DatasetBundle& d, const ModelConfig& cfg) {
  d.validate();
  PreparedData p;
  p.x = std::make_shared<const DenseMatrix>(cfg.normalize_features ? row_normalize(d.x) : d.x);
  p.view = make_view(p.x, d.graph ? &*d.graph : nullptr, cfg);
  return p;
}

FitResult fit(const DatasetBundle& d, const ModelConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const PreparedData prep = prepare(d, cfg);
  detail::FullBatch source(d, prep);
  return detail::run_training(d, cfg, prep, source, on_epoch);
}

Evaluation evaluate(const DatasetBundle& d, const PreparedData& prep, ModelParams& params,
                    const ModelConfig& cfg) {
  Evaluation e;
  e.pred = predict(prep.view, params, cfg);
  if (!d.train.empty()) e.train_acc = accuracy(e.pred, d.y, d.train);
  if (!d.val.empty()) e.val_acc = accuracy(e.pred, d.y, d.val);
  if (!d.test.empty()) e.test_acc = accuracy(e.pred, d.y, d.test);
  return e;
}

}  // namespace gldgcn
