#include "gldgcn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "gldgcn/errors.hpp"

namespace gldgcn {
namespace fs = std::filesystem;
namespace {

struct Field {
  ConfigKey key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError("config: bad value '" + s + "' for " + key);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError("config: bad boolean '" + s + "' for " + key);
}

template <typename T, typename Get>
Field number_field(std::string name, std::string help, Get access) {
  return Field{{name, std::move(help)},
               [name, access](RunConfig& c, const std::string& s) { access(c) = parse_number<T>(name, s); },
               [access](const RunConfig& c) {
                 const T v = access(const_cast<RunConfig&>(c));
                 if constexpr (std::is_floating_point_v<T>) {
                   return fmt(static_cast<double>(v));
                 } else {
                   return std::to_string(v);
                 }
               }};
}

template <typename Get>
Field bool_field(std::string name, std::string help, Get access) {
  return Field{{name, std::move(help)},
               [name, access](RunConfig& c, const std::string& s) { access(c) = parse_bool(name, s); },
               [access](const RunConfig& c) { return fmt(access(const_cast<RunConfig&>(c))); }};
}

template <typename Get>
Field string_field(std::string name, std::string help, Get access) {
  return Field{{name, std::move(help)}, [access](RunConfig& c, const std::string& s) { access(c) = s; },
               [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); }};
}

template <typename E, typename Get>
Field enum_field(std::string name, std::string help, std::vector<std::pair<std::string, E>> names, Get access) {
  return Field{{name, std::move(help)},
               [name, names, access](RunConfig& c, const std::string& s) {
                 for (const auto& [n, v] : names) {
                   if (n == s) {
                     access(c) = v;
                     return;
                   }
                 }
                 std::string options;
                 for (const auto& [n, v] : names) options += (options.empty() ? "" : "|") + n;
                 throw ConfigError("config: " + name + " must be one of " + options + ", got '" + s + "'");
               },
               [names, access](const RunConfig& c) {
                 const E v = access(const_cast<RunConfig&>(c));
                 for (const auto& [n, e] : names) {
                   if (e == v) return n;
                 }
                 return std::string("?");
               }};
}

#define FIELD(expr) [](RunConfig& c) -> decltype(auto) { return (expr); }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(string_field("dataset", "built-in name (karate), directory, or name under GLDGCN_DATA_DIR", FIELD(c.dataset)));
    f.push_back(string_field("out", "output directory", FIELD(c.out)));
    f.push_back(number_field<int>("threads", "kernel worker threads", FIELD(c.threads)));
    f.push_back(number_field<std::uint64_t>("seed", "master seed; every stream is derived from it", FIELD(c.model.seed)));
    f.push_back(number_field<int>("epochs", "training epochs", FIELD(c.model.epochs)));
    f.push_back(number_field<int>("depth", "convolution layers (>= 2)", FIELD(c.model.depth)));
    f.push_back(number_field<int>("hidden_gcn", "convolution hidden width", FIELD(c.model.hidden_gcn)));
    f.push_back(number_field<int>("hidden_gl", "graph-learner projection width (0 = raw features)", FIELD(c.model.hidden_gl)));
    f.push_back(bool_field("share_weights", "both branches use the same layer weights", FIELD(c.model.share_weights)));
    f.push_back(number_field<double>("lambda1", "weight of the branch-agreement term", FIELD(c.model.lambda1)));
    f.push_back(number_field<double>("lambda2", "weight of the graph-learning term", FIELD(c.model.lambda2)));
    f.push_back(number_field<double>("dropout", "dropout rate on every convolution input", FIELD(c.model.dropout_rate)));
    f.push_back(number_field<double>("lr1", "graph-learner learning rate", FIELD(c.model.lr1)));
    f.push_back(number_field<double>("lr2", "convolution learning rate", FIELD(c.model.lr2)));
    f.push_back(number_field<double>("weight_decay", "L2 coefficient on convolution weights", FIELD(c.model.weight_decay)));
    f.push_back(number_field<int>("ppmi_refresh", "epochs between PPMI rebuilds (0 = once)", FIELD(c.model.ppmi_refresh)));
    f.push_back(number_field<int>("walk_q", "random-walk path length", FIELD(c.model.walk.q)));
    f.push_back(number_field<int>("walk_w", "co-occurrence window", FIELD(c.model.walk.w)));
    f.push_back(number_field<int>("walk_gamma", "walks started per node", FIELD(c.model.walk.gamma_walks)));
    f.push_back(number_field<std::uint64_t>("walk_seed", "extra seed mixed into walk streams", FIELD(c.model.walk.seed)));
    f.push_back(number_field<double>("gamma_reg", "graph-learning sparsity weight", FIELD(c.model.gl.gamma_reg)));
    f.push_back(number_field<double>("beta", "graph-learning adjacency-fidelity weight", FIELD(c.model.gl.beta)));
    f.push_back(enum_field<Supervise>("supervise", "branch carrying the cross-entropy (a|p|both)",
                                      {{"a", Supervise::a}, {"p", Supervise::p}, {"both", Supervise::both}},
                                      FIELD(c.model.supervise)));
    f.push_back(enum_field<Reduction>("reduction", "cross-entropy reduction (sum|mean)",
                                      {{"sum", Reduction::sum}, {"mean", Reduction::mean}}, FIELD(c.model.reduction)));
    f.push_back(enum_field<AgreementNorm>("agreement", "branch-agreement normalization (per_node|total)",
                                          {{"per_node", AgreementNorm::per_node}, {"total", AgreementNorm::total}},
                                          FIELD(c.model.agreement)));
    f.push_back(bool_field("learn_graph", "learn S; false freezes it to the normalized A + I", FIELD(c.model.learn_graph)));
    f.push_back(bool_field("normalize_features", "scale feature rows to unit L1 norm", FIELD(c.model.normalize_features)));
    f.push_back(number_field<double>("stop_tolerance", "stop when no parameter moves more than this per epoch (0 = off)",
                                     FIELD(c.model.stop_tolerance)));
    f.push_back(number_field<int>("split_per_class", "training nodes per class for generated splits", FIELD(c.split.per_class_train)));
    f.push_back(number_field<std::size_t>("split_val", "validation nodes for generated splits", FIELD(c.split.val_size)));
    f.push_back(number_field<std::size_t>("split_test", "test nodes for generated splits", FIELD(c.split.test_size)));
    f.push_back(number_field<std::uint64_t>("split_seed", "seed of generated splits", FIELD(c.split.seed)));
    f.push_back(number_field<long long>("karate_train_seed", "random karate training nodes (-1 = lowest index)",
                                        FIELD(c.karate_train_seed)));
    f.push_back(bool_field("cluster", "train on cluster batches", FIELD(c.cluster)));
    f.push_back(number_field<int>("cluster_c", "number of clusters", FIELD(c.cluster_cfg.part.c)));
    f.push_back(number_field<int>("cluster_q", "clusters per batch", FIELD(c.cluster_cfg.part.q)));
    f.push_back(number_field<double>("balance_tolerance", "max cluster size / ceil(n / c)",
                                     FIELD(c.cluster_cfg.part.balance_tolerance)));
    f.push_back(bool_field("weighted_loss", "scale batch losses by batch size / n", FIELD(c.cluster_cfg.weighted_loss)));
    f.push_back(string_field("checkpoint", "checkpoint read by eval", FIELD(c.checkpoint)));
    return f;
  }();
  return table;
}

#undef FIELD

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key.name == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key.name, f.get(cfg));
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

fs::path resolve_dataset(const std::string& name) {
  if (name == "karate") return {};
  if (fs::is_directory(name)) return name;
  if (const char* root = std::getenv("GLDGCN_DATA_DIR")) {
    const fs::path p = fs::path(root) / name;
    if (fs::is_directory(p)) return p;
  }
  throw DataError("dataset '" + name + "' not found (checked the path and $GLDGCN_DATA_DIR)");
}

DatasetBundle load_configured_dataset(const RunConfig& cfg) {
  const fs::path dir = resolve_dataset(cfg.dataset);
  if (dir.empty()) {
    std::optional<std::uint64_t> seed;
    if (cfg.karate_train_seed >= 0) seed = static_cast<std::uint64_t>(cfg.karate_train_seed);
    return builtin_karate(seed);
  }
  return load_dataset(dir, cfg.split);
}

}  // namespace gldgcn
