#include "gldgcn/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gldgcn/cluster_train.hpp"
#include "gldgcn/config.hpp"
#include "gldgcn/errors.hpp"
#include "gldgcn/gradcheck.hpp"
#include "gldgcn/ppmi.hpp"
#include "gldgcn/simd.hpp"

namespace gldgcn {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Raised when the gradient check fails, after the report has been printed.
struct GradcheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Invocation {
  std::string config_file;
  std::map<std::string, std::string> flags;
  std::vector<std::string> cluster;
  std::string sabotage;
};

RunConfig build_config(const Invocation& inv, const KeyValues& base = {}) {
  KeyValues file;
  if (!inv.config_file.empty()) file = read_config_file(inv.config_file);
  std::string dataset = RunConfig{}.dataset;
  for (const auto& src : {base, file}) {
    for (const auto& [k, v] : src) {
      if (k == "dataset") dataset = v;
    }
  }
  if (auto it = inv.flags.find("dataset"); it != inv.flags.end()) dataset = it->second;

  RunConfig cfg;
  apply_dataset_defaults(cfg.model, fs::path(dataset).filename().string());
  for (const auto& [k, v] : base) apply_setting(cfg, k, v);
  for (const auto& [k, v] : file) apply_setting(cfg, k, v);
  for (const auto& [k, v] : inv.flags) apply_setting(cfg, k, v);
  if (!inv.cluster.empty()) {
    cfg.cluster = true;
    for (const std::string& tok : inv.cluster) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw ConfigError("--cluster expects c=<clusters> q=<per batch>, got '" + tok + "'");
      const std::string k = tok.substr(0, eq);
      const std::string v = tok.substr(eq + 1);
      if (k == "c") {
        apply_setting(cfg, "cluster_c", v);
      } else if (k == "q") {
        apply_setting(cfg, "cluster_q", v);
      } else {
        throw ConfigError("--cluster: unknown field '" + k + "' (use c and q)");
      }
    }
  }
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  cfg.model.validate();
  set_kernel_threads(cfg.threads);
  return cfg;
}

void echo_config(std::ostream& out, const RunConfig& cfg) {
  out << "effective config:\n";
  for (const auto& [k, v] : config_echo(cfg)) out << "  " << k << " = " << v << '\n';
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : config_echo(cfg)) j[k] = v;
  return j;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw DataError("cannot write " + p.string());
}

int cmd_train(const Invocation& inv, std::ostream& out) {
  const RunConfig cfg = build_config(inv);
  echo_config(out, cfg);
  const DatasetBundle d = load_configured_dataset(cfg);
  out << "dataset " << d.name << ": n=" << d.num_nodes() << " edges="
      << (d.graph ? d.graph->num_edges() : 0) << " (" << d.edge_lines << " lines) features=" << d.x.cols()
      << " classes=" << d.classes << " train/val/test=" << d.train.size() << '/' << d.val.size() << '/'
      << d.test.size() << '\n';
  if (!d.graph) {
    out << "no edges: dense graph learning, about " << dense_graph_bytes(d.num_nodes()) / (1024 * 1024)
        << " MiB for S and its gradients\n";
  }

  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  std::ofstream history(dir / "history.csv", std::ios::binary);
  if (!history) throw DataError("cannot write " + (dir / "history.csv").string());
  history << "epoch,train_loss,l0,lreg,lgl,val_acc\n" << std::flush;
  auto on_epoch = [&](const HistoryRow& r) {
    history << r.epoch << ',' << fmt_double(r.train_loss) << ',' << fmt_double(r.l0) << ','
            << fmt_double(r.lreg) << ',' << fmt_double(r.lgl) << ',' << fmt_double(r.val_acc) << '\n'
            << std::flush;
  };

  const auto start = std::chrono::steady_clock::now();
  FitResult res;
  std::optional<Partition> part;
  if (cfg.cluster) {
    if (!d.graph) throw DataError("cluster training needs a graph (edges.tsv)");
    ClusterConfig cc = cfg.cluster_cfg;
    cc.part.seed = cfg.model.seed;
    part = partition_graph(*d.graph, cc.part);
    res = cluster_fit(d, cfg.model, cc, on_epoch, &*part);
  } else {
    res = fit(d, cfg.model, on_epoch);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const PreparedData prep = prepare(d, cfg.model);
  Evaluation best = evaluate(d, prep, res.best, cfg.model);
  Evaluation last = evaluate(d, prep, res.last, cfg.model);

  {
    std::ofstream ck(dir / "checkpoint.txt", std::ios::binary);
    write_checkpoint(ck, res.best, config_echo(cfg));
    if (!ck) throw DataError("cannot write checkpoint");
  }

  json s;
  s["command"] = "train";
  s["dataset"] = d.name;
  s["nodes"] = d.num_nodes();
  s["edges"] = d.graph ? d.graph->num_edges() : 0;
  s["edge_lines"] = d.edge_lines;
  s["features"] = d.x.cols();
  s["classes"] = d.classes;
  s["train_nodes"] = d.train.size();
  s["val_nodes"] = d.val.size();
  s["test_nodes"] = d.test.size();
  s["seed"] = cfg.model.seed;
  s["threads"] = cfg.threads;
  s["simd"] = std::string(simd::backend_name(simd::active().backend));
  s["mode"] = cfg.cluster ? "cluster" : "full";
  s["partition_edge_cut"] = part ? json(part->edge_cut) : json(nullptr);
  s["epochs_run"] = res.epochs_run;
  s["converged"] = res.converged;
  s["batches"] = res.batches;
  s["skipped_batches"] = res.skipped_batches;
  s["best_epoch"] = res.best_epoch;
  s["best_val_acc"] = res.best_val_acc;
  s["train_acc"] = best.train_acc;
  s["val_acc"] = best.val_acc;
  s["test_acc"] = best.test_acc;
  s["final_val_acc"] = last.val_acc;
  s["final_test_acc"] = last.test_acc;
  s["config"] = config_json(cfg);
  s["wall_time_sec"] = wall;
  write_text(dir / "summary.json", s.dump(2) + "\n");

  out << "best epoch " << res.best_epoch << ": val_acc=" << fmt_double(best.val_acc)
      << " test_acc=" << fmt_double(best.test_acc) << " (final epoch test_acc=" << fmt_double(last.test_acc)
      << ", " << fmt_double(wall) << " s)\n";
  return kExitOk;
}

int cmd_eval(const Invocation& inv, std::ostream& out) {
  std::string path;
  if (auto it = inv.flags.find("checkpoint"); it != inv.flags.end()) path = it->second;
  if (path.empty()) {
    const RunConfig probe = build_config(inv);
    path = probe.checkpoint.empty() ? (fs::path(probe.out) / "checkpoint.txt").string() : probe.checkpoint;
  }
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path);
  const Checkpoint ck = read_checkpoint(in);
  const RunConfig cfg = build_config(inv, ck.config);
  const DatasetBundle d = load_configured_dataset(cfg);
  ModelParams params = init_params(cfg.model, d.x.cols(), d.classes);
  load_params(params, ck);
  const PreparedData prep = prepare(d, cfg.model);
  const Evaluation e = evaluate(d, prep, params, cfg.model);
  json j;
  j["dataset"] = d.name;
  j["checkpoint"] = path;
  j["train_acc"] = e.train_acc;
  j["val_acc"] = e.val_acc;
  j["test_acc"] = e.test_acc;
  out << j.dump() << '\n';
  return kExitOk;
}

// Eight nodes on a ring with random chords, five random features, three
// classes and five labeled nodes.
DatasetBundle gradcheck_instance(std::uint64_t seed) {
  RngStream rng(derive_seed(seed, "gradcheck.instance"));
  constexpr std::uint32_t n = 8;
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 2; j < n; ++j) {
      if (rng.uniform() < 0.25) edges.push_back({i, j});
    }
  }
  DatasetBundle d;
  d.name = "gradcheck";
  d.graph = build_graph(edges, n);
  d.x = DenseMatrix(n, 5);
  for (double& v : d.x.values()) v = rng.uniform();
  d.classes = 3;
  for (std::uint32_t i = 0; i < n; ++i) d.y.push_back(static_cast<int>(rng.uniform_index(3)));
  d.train = {0, 2, 3, 5, 6};
  return d;
}

int cmd_gradcheck(const Invocation& inv, std::ostream& out) {
  RunConfig cfg = build_config(inv);
  ModelConfig mc = cfg.model;
  mc.dropout_rate = 0.0;
  mc.hidden_gcn = 4;
  if (mc.hidden_gl > 0) mc.hidden_gl = 3;
  mc.normalize_features = false;
  echo_config(out, cfg);

  const DatasetBundle d = gradcheck_instance(mc.seed);
  const PreparedData prep = prepare(d, mc);
  ModelParams params = init_params(mc, d.x.cols(), d.classes);
  const bool with_p = needs_p_branch(mc);
  std::shared_ptr<const CsrMatrix> p_op;
  if (with_p) {
    WalkConfig walk = mc.walk;
    walk.seed = derive_seed(mc.seed, "gradcheck.walk");
    p_op = build_p_operator(current_s(prep.view, params, mc), walk);
  }
  CheckedLoss loss = [&](bool with_grad) {
    Tape t;
    ForwardCache c = forward(t, prep.view, params, mc, p_op, false, nullptr, with_p);
    LossTerms terms = total_loss(t, c, prep.view, d.y, d.train, mc);
    if (with_grad) t.backward(terms.total);
    return t.scalar(terms.total);
  };
  std::vector<CheckedParam> checked;
  for (Parameter* p : params.graph_learner()) checked.push_back({p, "graph_learner"});
  for (Parameter* p : params.convolutions()) checked.push_back({p, "convolution"});
  const GradCheckReport rep = finite_diff_check(loss, checked, 1e-5, 1e-4, inv.sabotage);

  bool has_learner = false;
  for (const GradCheckGroup& g : rep.groups) {
    has_learner = has_learner || g.name == "graph_learner";
    if (!g.has_grad) {
      out << g.name << ": no-grad, skipped\n";
    } else {
      out << g.name << ": max relative error " << fmt_double(g.max_rel_error) << (g.passed ? " ok" : " FAILED")
          << '\n';
    }
  }
  if (!has_learner) out << "graph_learner: no-grad, skipped\n";
  for (const GradCheckEntry& e : rep.entries) {
    out << "  " << e.name << " [" << e.group << "] rel=" << fmt_double(e.max_rel_error)
        << " abs=" << fmt_double(e.max_abs_error) << '\n';
  }
  if (!rep.passed()) {
    std::string failed;
    for (const GradCheckGroup& g : rep.groups) {
      if (!g.passed) failed += (failed.empty() ? "" : ", ") + g.name;
    }
    throw GradcheckFailed("gradient check failed for: " + failed);
  }
  out << "gradient check passed (tolerance " << rep.tolerance << ")\n";
  return kExitOk;
}

int cmd_ppmi(const Invocation& inv, std::ostream& out) {
  const RunConfig cfg = build_config(inv);
  const DatasetBundle d = load_configured_dataset(cfg);
  if (!d.graph) throw DataError("ppmi needs a graph (edges.tsv)");
  WalkConfig walk = cfg.model.walk;
  walk.seed = cfg.model.seed;
  const PpmiCacheKey key{d.num_nodes(), walk};
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  const fs::path cache = dir / "ppmi.tsv";

  std::optional<CsrMatrix> p;
  bool hit = false;
  if (std::ifstream in(cache); in) {
    p = read_ppmi_cache(in, key);
    hit = p.has_value();
  }
  WalkStats stats;
  if (!p) {
    p = ppmi(frequency_matrix(d.graph->adjacency(), walk, &stats));
    std::ofstream o(cache, std::ios::binary);
    write_ppmi_cache(o, *p, key);
    if (!o) throw DataError("cannot write " + cache.string());
  }
  double max_entry = 0.0;
  for (double v : p->values) max_entry = std::max(max_entry, v);
  json j;
  j["cache"] = cache.string();
  j["cache_hit"] = hit;
  j["n"] = d.num_nodes();
  j["nnz"] = p->nnz();
  j["max_entry"] = max_entry;
  j["truncated_walks"] = stats.truncated;
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_partition(const Invocation& inv, std::ostream& out) {
  const RunConfig cfg = build_config(inv);
  const DatasetBundle d = load_configured_dataset(cfg);
  if (!d.graph) throw DataError("partition needs a graph (edges.tsv)");
  PartitionConfig pc = cfg.cluster_cfg.part;
  pc.seed = cfg.model.seed;
  pc.q = 1;
  pc.validate(d.num_nodes());
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  const fs::path cache = dir / "partition.txt";

  std::optional<Partition> p;
  bool hit = false;
  if (std::ifstream in(cache); in) {
    p = read_partition_cache(in, *d.graph, pc.c, pc.seed);
    hit = p.has_value();
  }
  if (!p) {
    p = partition_graph(*d.graph, pc);
    std::ofstream o(cache, std::ios::binary);
    write_partition_cache(o, *p, pc.seed);
    if (!o) throw DataError("cannot write " + cache.string());
  }
  RngStream rng(derive_seed(pc.seed, "partition.baseline"));
  double baseline = 0.0;
  constexpr int kTrials = 20;
  for (int t = 0; t < kTrials; ++t) {
    baseline += static_cast<double>(random_balanced_partition(*d.graph, pc.c, rng).edge_cut);
  }
  json j = json::parse(to_json(edge_cut_report(*d.graph, *p)));
  j["random_baseline_cut"] = baseline / kTrials;
  j["cache"] = cache.string();
  j["cache_hit"] = hit;
  out << j.dump() << '\n';
  return kExitOk;
}

void add_common(CLI::App* cmd, Invocation& inv, bool with_cluster) {
  cmd->add_option("--config", inv.config_file, "flat key = value config file");
  for (const ConfigKey& k : config_keys()) {
    if (with_cluster && k.name == "cluster") continue;  // covered by --cluster c=.. q=..
    cmd->add_option_function<std::string>(
        "--" + k.name, [&inv, name = k.name](const std::string& v) { inv.flags[name] = v; }, k.help);
  }
  if (with_cluster) {
    cmd->add_option("--cluster", inv.cluster, "cluster training, e.g. --cluster c=10 q=2")
        ->expected(1, 2);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GLDGCN semi-supervised node classification"};
  app.require_subcommand(1);
  Invocation inv;
  CLI::App* train = app.add_subcommand("train", "train a model and write history, summary and checkpoint");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  CLI::App* grad = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  CLI::App* ppmi_cmd = app.add_subcommand("ppmi", "compute and cache the PPMI matrix of a graph");
  CLI::App* part = app.add_subcommand("partition", "partition a graph and report the edge cut");
  add_common(train, inv, true);
  add_common(eval, inv, false);
  add_common(grad, inv, false);
  add_common(ppmi_cmd, inv, false);
  add_common(part, inv, false);
  grad->add_option("--sabotage", inv.sabotage, "test hook: flip the gradient sign of this group");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(inv, out);
    if (eval->parsed()) return cmd_eval(inv, out);
    if (grad->parsed()) return cmd_gradcheck(inv, out);
    if (ppmi_cmd->parsed()) return cmd_ppmi(inv, out);
    if (part->parsed()) return cmd_partition(inv, out);
  } catch (const GradcheckFailed& e) {
    err << "error: " << e.what() << '\n';
    return kExitGradcheck;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace gldgcn
