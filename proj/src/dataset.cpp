#include "gldgcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gldgcn/errors.hpp"

namespace gldgcn {
namespace fs = std::filesystem;
namespace {

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("missing file: " + p.string());
  return in;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

DenseMatrix read_features(const fs::path& p) {
  auto in = open_in(p);
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::size_t count = 0;
    const char* ptr = sv.data();
    const char* end = sv.data() + sv.size();
    while (true) {
      while (ptr < end && (*ptr == ' ' || *ptr == '\t')) ++ptr;
      double v = 0.0;
      const auto r = std::from_chars(ptr, end, v);
      if (r.ec != std::errc()) {
        throw DataError(p.filename().string() + " line " + std::to_string(lineno) + ": bad number");
      }
      data.push_back(v);
      ++count;
      ptr = r.ptr;
      while (ptr < end && (*ptr == ' ' || *ptr == '\t')) ++ptr;
      if (ptr == end) break;
      if (*ptr != ',') {
        throw DataError(p.filename().string() + " line " + std::to_string(lineno) + ": expected ','");
      }
      ++ptr;
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      throw DataError(p.filename().string() + " line " + std::to_string(lineno) + ": " +
                      std::to_string(count) + " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw DataError(p.string() + " holds no feature rows");
  return DenseMatrix(rows, cols, std::move(data));
}

std::vector<int> read_labels(const fs::path& p) {
  auto in = open_in(p);
  std::vector<int> y;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    int v = 0;
    const auto r = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (r.ec != std::errc() || r.ptr != sv.data() + sv.size()) {
      throw DataError("labels.txt line " + std::to_string(lineno) + ": expected an integer");
    }
    y.push_back(v);
  }
  return y;
}

std::vector<std::size_t> read_ids(const fs::path& p) {
  auto in = open_in(p);
  std::vector<std::size_t> ids;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::size_t v = 0;
    const auto r = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (r.ec != std::errc() || r.ptr != sv.data() + sv.size()) {
      throw DataError(p.filename().string() + ": bad node id '" + std::string(sv) + "'");
    }
    ids.push_back(v);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::map<std::string, std::string> read_manifest(const fs::path& p) {
  auto in = open_in(p);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::string flat(sv);
    std::replace(flat.begin(), flat.end(), ',', ' ');
    std::istringstream ss(flat);
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw DataError("manifest.txt: expected key=value, got '" + tok + "'");
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  return kv;
}

std::size_t manifest_number(const std::map<std::string, std::string>& kv, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(kv.at(key), &used);
    if (used != kv.at(key).size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("manifest.txt: bad value for " + key);
  }
}

void write_ids(const fs::path& p, const std::vector<std::size_t>& ids) {
  std::ofstream out(p);
  for (std::size_t i : ids) out << i << '\n';
  if (!out) throw DataError("cannot write " + p.string());
}

}  // namespace

void DatasetBundle::validate() const {
  const std::size_t n = num_nodes();
  if (y.size() != n) {
    throw DataError("labels: " + std::to_string(y.size()) + " entries for " + std::to_string(n) + " nodes");
  }
  if (graph && graph->num_nodes() != n) {
    throw DataError("graph has " + std::to_string(graph->num_nodes()) + " nodes, features " + std::to_string(n));
  }
  if (classes < 1) throw DataError("dataset needs at least one class");
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != kUnlabeled && (y[i] < 0 || y[i] >= classes)) {
      throw DataError("label " + std::to_string(y[i]) + " of node " + std::to_string(i) + " outside [0, " +
                      std::to_string(classes) + ")");
    }
  }
  std::vector<char> seen(n, 0);
  auto check = [&](const std::vector<std::size_t>& ids, const char* what) {
    for (std::size_t i : ids) {
      if (i >= n) throw DataError(std::string(what) + " split: node " + std::to_string(i) + " out of range");
      if (y[i] == kUnlabeled) throw DataError(std::string(what) + " split: node " + std::to_string(i) + " is unlabeled");
      if (seen[i]) throw DataError(std::string(what) + " split: node " + std::to_string(i) + " appears twice or in two splits");
      seen[i] = 1;
    }
  };
  check(train, "train");
  check(val, "val");
  check(test, "test");
}

Splits make_planetoid_split(const std::vector<int>& y, int classes, const SplitSpec& spec) {
  if (spec.per_class_train < 1) throw ConfigError("split: per_class_train must be >= 1");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != kUnlabeled) order.push_back(i);
  }
  RngStream rng(derive_seed(spec.seed, "split"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  std::vector<int> taken(static_cast<std::size_t>(classes), 0);
  Splits s;
  std::vector<std::size_t> rest;
  for (std::size_t i : order) {
    const int c = y[i];
    if (c < 0 || c >= classes) throw DataError("split: label outside class range");
    if (taken[static_cast<std::size_t>(c)] < spec.per_class_train) {
      ++taken[static_cast<std::size_t>(c)];
      s.train.push_back(i);
    } else {
      rest.push_back(i);
    }
  }
  for (int c = 0; c < classes; ++c) {
    if (taken[static_cast<std::size_t>(c)] < spec.per_class_train) {
      throw DataError("split: class " + std::to_string(c) + " has only " +
                      std::to_string(taken[static_cast<std::size_t>(c)]) + " labeled nodes");
    }
  }
  if (spec.val_size + spec.test_size > rest.size()) {
    throw DataError("split: " + std::to_string(rest.size()) + " nodes left for val+test, need " +
                    std::to_string(spec.val_size + spec.test_size));
  }
  s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(spec.val_size));
  s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(spec.val_size),
                rest.begin() + static_cast<std::ptrdiff_t>(spec.val_size + spec.test_size));
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

DatasetBundle load_dataset(const fs::path& dir, const SplitSpec& split) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  DatasetBundle d;
  d.name = dir.filename().string();
  if (d.name.empty()) d.name = dir.parent_path().filename().string();
  d.x = read_features(dir / "features.csv");
  d.y = read_labels(dir / "labels.txt");
  const std::size_t n = d.x.rows();
  if (d.y.size() != n) {
    throw DataError("labels.txt has " + std::to_string(d.y.size()) + " rows, features.csv " + std::to_string(n));
  }
  int max_label = -1;
  for (int v : d.y) {
    if (v < kUnlabeled) throw DataError("labels.txt: negative label " + std::to_string(v));
    max_label = std::max(max_label, v);
  }
  d.classes = max_label + 1;

  std::map<std::string, std::string> manifest;
  if (fs::exists(dir / "manifest.txt")) manifest = read_manifest(dir / "manifest.txt");
  if (manifest.count("classes")) {
    const std::size_t c = manifest_number(manifest, "classes");
    if (static_cast<std::size_t>(d.classes) > c) {
      throw DataError("labels.txt uses " + std::to_string(d.classes) + " classes, manifest says " + std::to_string(c));
    }
    d.classes = static_cast<int>(c);
  }
  if (manifest.count("n") && manifest_number(manifest, "n") != n) {
    throw DataError("manifest n=" + manifest.at("n") + " but features.csv has " + std::to_string(n) + " rows");
  }
  if (manifest.count("features") && manifest_number(manifest, "features") != d.x.cols()) {
    throw DataError("manifest features=" + manifest.at("features") + " but features.csv has " +
                    std::to_string(d.x.cols()) + " columns");
  }
  if (manifest.count("name")) d.name = manifest.at("name");

  if (fs::exists(dir / "edges.tsv")) {
    const EdgeListFile el = read_edge_list((dir / "edges.tsv").string());
    if (!el.edges.empty() && el.max_index >= n) {
      throw DataError("edges.tsv references node " + std::to_string(el.max_index) + " but only " +
                      std::to_string(n) + " nodes exist");
    }
    d.graph = build_graph(el.edges, n);
    d.edge_lines = el.data_lines;
    if (manifest.count("edges")) {
      const std::size_t e = manifest_number(manifest, "edges");
      if (e != el.data_lines && e != d.graph->num_edges()) {
        throw DataError("manifest edges=" + manifest.at("edges") + " matches neither the " +
                        std::to_string(el.data_lines) + " edge lines nor the " +
                        std::to_string(d.graph->num_edges()) + " distinct undirected edges");
      }
    }
  }

  const bool has_train = fs::exists(dir / "train.txt");
  if (has_train) {
    d.train = read_ids(dir / "train.txt");
    if (fs::exists(dir / "val.txt")) d.val = read_ids(dir / "val.txt");
    if (fs::exists(dir / "test.txt")) d.test = read_ids(dir / "test.txt");
  } else {
    Splits s = make_planetoid_split(d.y, d.classes, split);
    d.train = std::move(s.train);
    d.val = std::move(s.val);
    d.test = std::move(s.test);
  }
  d.validate();
  return d;
}

void save_dataset(const DatasetBundle& d, const fs::path& dir) {
  d.validate();
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "features.csv");
    char buf[40];
    for (std::size_t i = 0; i < d.x.rows(); ++i) {
      for (std::size_t j = 0; j < d.x.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", d.x(i, j));
        out << (j ? "," : "") << buf;
      }
      out << '\n';
    }
    if (!out) throw DataError("cannot write features.csv");
  }
  {
    std::ofstream out(dir / "labels.txt");
    for (int v : d.y) out << v << '\n';
  }
  if (d.graph) {
    std::ofstream out(dir / "edges.tsv");
    write_edge_list(out, *d.graph);
  } else {
    fs::remove(dir / "edges.tsv");
  }
  write_ids(dir / "train.txt", d.train);
  write_ids(dir / "val.txt", d.val);
  write_ids(dir / "test.txt", d.test);
  std::ofstream m(dir / "manifest.txt");
  if (!d.name.empty() && d.name.find_first_of(" \t,=") == std::string::npos) m << "name=" << d.name << '\n';
  m << "n=" << d.num_nodes() << ", classes=" << d.classes << ", features=" << d.x.cols();
  if (d.graph) m << ", edges=" << d.graph->num_edges();
  m << '\n';
}

}  // namespace gldgcn
