#include "gldgcn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "gldgcn/errors.hpp"

namespace gldgcn {
namespace {

// Weighted graph used across coarsening levels.
struct Level {
  std::size_t n = 0;
  std::vector<std::size_t> xadj{0};
  std::vector<std::uint32_t> adj;
  std::vector<double> ewgt;
  std::vector<std::int64_t> vwgt;
  std::vector<std::uint32_t> cmap;  // node -> node of the next coarser level
};

Level from_graph(const Graph& g) {
  const CsrMatrix& a = g.adjacency();
  Level l;
  l.n = a.rows;
  l.vwgt.assign(l.n, 1);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      if (a.col_idx[k] == i) continue;
      l.adj.push_back(a.col_idx[k]);
      l.ewgt.push_back(a.values[k]);
    }
    l.xadj.push_back(l.adj.size());
  }
  return l;
}

std::vector<std::uint32_t> shuffled(std::size_t n, RngStream& rng) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  return order;
}

// Heavy-edge matching, then pairing of leftover nodes that share their
// heaviest neighbor (stars otherwise stall coarsening), then pairing of
// isolated nodes.
Level coarsen(Level& fine, std::int64_t max_vwgt, RngStream& rng) {
  constexpr std::uint32_t kNone = UINT32_MAX;
  std::vector<std::uint32_t> match(fine.n, kNone);
  const auto order = shuffled(fine.n, rng);
  for (std::uint32_t u : order) {
    if (match[u] != kNone) continue;
    std::uint32_t best = kNone;
    double best_w = -1.0;
    for (std::size_t k = fine.xadj[u]; k < fine.xadj[u + 1]; ++k) {
      const std::uint32_t v = fine.adj[k];
      if (match[v] != kNone || fine.vwgt[u] + fine.vwgt[v] > max_vwgt) continue;
      if (fine.ewgt[k] > best_w) {
        best_w = fine.ewgt[k];
        best = v;
      }
    }
    if (best != kNone) {
      match[u] = best;
      match[best] = u;
    }
  }
  std::vector<std::uint32_t> pending(fine.n, kNone);
  std::uint32_t pending_isolated = kNone;
  for (std::uint32_t u : order) {
    if (match[u] != kNone) continue;
    std::uint32_t hub = kNone;
    double hub_w = -1.0;
    for (std::size_t k = fine.xadj[u]; k < fine.xadj[u + 1]; ++k) {
      if (fine.ewgt[k] > hub_w) {
        hub_w = fine.ewgt[k];
        hub = fine.adj[k];
      }
    }
    std::uint32_t& slot = hub == kNone ? pending_isolated : pending[hub];
    if (slot != kNone && slot != u && fine.vwgt[u] + fine.vwgt[slot] <= max_vwgt) {
      match[u] = slot;
      match[slot] = u;
      slot = kNone;
    } else {
      slot = u;
    }
  }

  fine.cmap.assign(fine.n, kNone);
  Level coarse;
  for (std::uint32_t u = 0; u < fine.n; ++u) {
    if (fine.cmap[u] != kNone) continue;
    const std::uint32_t id = static_cast<std::uint32_t>(coarse.n++);
    fine.cmap[u] = id;
    std::int64_t w = fine.vwgt[u];
    if (match[u] != kNone && match[u] != u) {
      fine.cmap[match[u]] = id;
      w += fine.vwgt[match[u]];
    }
    coarse.vwgt.push_back(w);
  }
  std::vector<std::vector<std::uint32_t>> groups(coarse.n);
  for (std::uint32_t u = 0; u < fine.n; ++u) groups[fine.cmap[u]].push_back(u);
  std::vector<double> acc(coarse.n, 0.0);
  std::vector<std::uint32_t> touched;
  for (std::size_t cu = 0; cu < coarse.n; ++cu) {
    touched.clear();
    for (std::uint32_t u : groups[cu]) {
      for (std::size_t k = fine.xadj[u]; k < fine.xadj[u + 1]; ++k) {
        const std::uint32_t cv = fine.cmap[fine.adj[k]];
        if (cv == cu) continue;
        if (acc[cv] == 0.0) touched.push_back(cv);
        acc[cv] += fine.ewgt[k];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::uint32_t cv : touched) {
      coarse.adj.push_back(cv);
      coarse.ewgt.push_back(acc[cv]);
      acc[cv] = 0.0;
    }
    coarse.xadj.push_back(coarse.adj.size());
  }
  return coarse;
}

struct Refiner {
  const Level& g;
  int c;
  std::int64_t cap;
  std::vector<std::uint32_t>& assign;
  std::vector<std::int64_t> size;
  std::vector<std::size_t> count;
  std::vector<double> conn;
  std::vector<std::uint32_t> touched;

  Refiner(const Level& lvl, int clusters, std::int64_t cap_, std::vector<std::uint32_t>& a)
      : g(lvl), c(clusters), cap(cap_), assign(a), size(clusters, 0), count(clusters, 0), conn(clusters, 0.0) {
    for (std::size_t v = 0; v < g.n; ++v) {
      size[assign[v]] += g.vwgt[v];
      ++count[assign[v]];
    }
  }

  void gather(std::uint32_t v) {
    for (std::uint32_t t : touched) conn[t] = 0.0;
    touched.clear();
    for (std::size_t k = g.xadj[v]; k < g.xadj[v + 1]; ++k) {
      const std::uint32_t t = assign[g.adj[k]];
      if (conn[t] == 0.0) touched.push_back(t);
      conn[t] += g.ewgt[k];
    }
  }

  void move(std::uint32_t v, std::uint32_t to) {
    const std::uint32_t from = assign[v];
    size[from] -= g.vwgt[v];
    --count[from];
    size[to] += g.vwgt[v];
    ++count[to];
    assign[v] = to;
  }

  // Greedy boundary passes: move a node to the neighboring cluster with the
  // largest cut reduction, or with an equal cut when that evens out sizes.
  void refine(int passes) {
    for (int pass = 0; pass < passes; ++pass) {
      std::size_t moved = 0;
      for (std::uint32_t v = 0; v < g.n; ++v) {
        const std::uint32_t own = assign[v];
        if (count[own] <= 1) continue;
        gather(v);
        const double internal = conn[own];
        std::uint32_t best = own;
        double best_gain = 0.0;
        for (std::uint32_t t : touched) {
          if (t == own || size[t] + g.vwgt[v] > cap) continue;
          const double gain = conn[t] - internal;
          const bool evens = size[own] > size[t] + g.vwgt[v];
          if (gain < 0.0 || (gain == 0.0 && !evens)) continue;
          if (best == own || gain > best_gain || (gain == best_gain && size[t] < size[best])) {
            best = t;
            best_gain = gain;
          }
        }
        if (best != own) {
          move(v, best);
          ++moved;
        }
      }
      if (moved == 0) break;
    }
  }

  // Moves nodes out of clusters above the cap, cheapest cut increase first.
  void rebalance() {
    for (int guard = 0; guard < 4 * c + 4; ++guard) {
      int over = -1;
      for (int t = 0; t < c; ++t) {
        if (size[t] > cap && (over < 0 || size[t] > size[over])) over = t;
      }
      if (over < 0) return;
      struct Cand {
        double gain;
        std::uint32_t v;
        std::uint32_t to;
      };
      std::vector<Cand> cands;
      std::uint32_t smallest = 0;
      for (int t = 1; t < c; ++t) {
        if (size[t] < size[smallest]) smallest = static_cast<std::uint32_t>(t);
      }
      for (std::uint32_t v = 0; v < g.n; ++v) {
        if (assign[v] != static_cast<std::uint32_t>(over)) continue;
        gather(v);
        const double internal = conn[over];
        Cand best{-internal, v, smallest};
        for (std::uint32_t t : touched) {
          if (t == static_cast<std::uint32_t>(over)) continue;
          if (conn[t] - internal > best.gain || best.to == smallest) {
            if (size[t] + g.vwgt[v] <= cap) best = {conn[t] - internal, v, t};
          }
        }
        cands.push_back(best);
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.gain > b.gain; });
      bool progress = false;
      for (const Cand& cd : cands) {
        if (size[over] <= cap || count[over] <= 1) break;
        std::uint32_t to = cd.to;
        if (size[to] + g.vwgt[cd.v] > cap) {
          to = smallest;
          for (int t = 0; t < c; ++t) {
            if (size[t] < size[to]) to = static_cast<std::uint32_t>(t);
          }
          if (to == static_cast<std::uint32_t>(over) || size[to] + g.vwgt[cd.v] > cap) continue;
        }
        move(cd.v, to);
        progress = true;
      }
      if (!progress) return;
    }
  }

  double cut() const {
    double total = 0.0;
    for (std::uint32_t v = 0; v < g.n; ++v) {
      for (std::size_t k = g.xadj[v]; k < g.xadj[v + 1]; ++k) {
        if (assign[g.adj[k]] != assign[v]) total += g.ewgt[k];
      }
    }
    return total / 2.0;
  }
};

// Node farthest (in BFS hops) from `start` among unassigned nodes reachable
// from it.
std::uint32_t peripheral(const Level& g, std::uint32_t start, const std::vector<std::uint32_t>& assign,
                         std::uint32_t unset) {
  std::vector<int> dist(g.n, -1);
  std::queue<std::uint32_t> bfs;
  bfs.push(start);
  dist[start] = 0;
  std::uint32_t last = start;
  while (!bfs.empty()) {
    const std::uint32_t u = bfs.front();
    bfs.pop();
    last = u;
    for (std::size_t k = g.xadj[u]; k < g.xadj[u + 1]; ++k) {
      const std::uint32_t v = g.adj[k];
      if (dist[v] < 0 && assign[v] == unset) {
        dist[v] = dist[u] + 1;
        bfs.push(v);
      }
    }
  }
  return last;
}

// Grows clusters one at a time from peripheral seeds, always absorbing the
// frontier node most connected to the growing cluster. When a component is
// exhausted the cluster continues in the next unassigned component, which
// packs small components together.
std::vector<std::uint32_t> grow(const Level& g, int c, std::int64_t cap, RngStream& rng) {
  constexpr std::uint32_t kUnset = UINT32_MAX;
  std::vector<std::uint32_t> assign(g.n, kUnset);
  std::int64_t remaining = std::accumulate(g.vwgt.begin(), g.vwgt.end(), std::int64_t{0});
  std::size_t unassigned = g.n;
  const auto order = shuffled(g.n, rng);
  std::size_t cursor = 0;
  auto next_free = [&]() -> std::uint32_t {
    while (cursor < order.size() && assign[order[cursor]] != kUnset) ++cursor;
    return cursor < order.size() ? order[cursor] : kUnset;
  };
  std::vector<double> conn(g.n, 0.0);
  for (int k = 0; k < c; ++k) {
    const std::uint32_t cluster = static_cast<std::uint32_t>(k);
    if (k == c - 1) {
      for (std::uint32_t v = 0; v < g.n; ++v) {
        if (assign[v] == kUnset) assign[v] = cluster;
      }
      break;
    }
    const double target = static_cast<double>(remaining) / static_cast<double>(c - k);
    const std::size_t keep_free = static_cast<std::size_t>(c - 1 - k);
    std::int64_t weight = 0;
    std::priority_queue<std::pair<double, std::uint32_t>> frontier;
    auto absorb = [&](std::uint32_t v) {
      assign[v] = cluster;
      weight += g.vwgt[v];
      --unassigned;
      for (std::size_t e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
        const std::uint32_t u = g.adj[e];
        if (assign[u] != kUnset) continue;
        conn[u] += g.ewgt[e];
        frontier.push({conn[u], u});
      }
    };
    while (static_cast<double>(weight) < target && unassigned > keep_free) {
      std::uint32_t v = kUnset;
      while (!frontier.empty()) {
        auto [w, u] = frontier.top();
        frontier.pop();
        if (assign[u] == kUnset && w == conn[u]) {
          v = u;
          break;
        }
      }
      if (v == kUnset) {
        const std::uint32_t free = next_free();
        if (free == kUnset) break;
        v = peripheral(g, free, assign, kUnset);
      }
      if (weight > 0 && weight + g.vwgt[v] > cap) break;
      absorb(v);
    }
    remaining -= weight;
    for (std::uint32_t u = 0; u < g.n; ++u) conn[u] = 0.0;
  }
  return assign;
}

}  // namespace

void PartitionConfig::validate(std::size_t n) const {
  if (c < 1) throw ConfigError("partition: c must be >= 1");
  if (static_cast<std::size_t>(c) > n) {
    throw ConfigError("partition: c=" + std::to_string(c) + " exceeds node count " + std::to_string(n));
  }
  if (q < 1 || q > c) throw ConfigError("partition: q must satisfy 1 <= q <= c");
  if (!(balance_tolerance >= 1.0)) throw ConfigError("partition: balance_tolerance must be >= 1");
}

std::size_t count_edge_cut(const Graph& g, const std::vector<std::uint32_t>& assign) {
  const CsrMatrix& a = g.adjacency();
  std::size_t cut = 0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const std::size_t j = a.col_idx[k];
      if (j > i && assign[i] != assign[j]) ++cut;
    }
  }
  return cut;
}

Partition make_partition(const Graph& g, std::vector<std::uint32_t> assign, int c) {
  if (assign.size() != g.num_nodes()) throw DataError("partition: assignment length differs from node count");
  Partition p;
  p.c = c;
  p.members.resize(static_cast<std::size_t>(c));
  for (std::uint32_t v = 0; v < assign.size(); ++v) {
    if (assign[v] >= static_cast<std::uint32_t>(c)) {
      throw DataError("partition: node " + std::to_string(v) + " has cluster " + std::to_string(assign[v]) +
                      " outside [0, " + std::to_string(c) + ")");
    }
    p.members[assign[v]].push_back(v);
  }
  for (int t = 0; t < c; ++t) {
    if (p.members[static_cast<std::size_t>(t)].empty()) throw DataError("partition: cluster " + std::to_string(t) + " is empty");
  }
  p.assign = std::move(assign);
  p.edge_cut = count_edge_cut(g, p.assign);
  return p;
}

Partition partition_graph(const Graph& g, const PartitionConfig& cfg) {
  const std::size_t n = g.num_nodes();
  cfg.validate(n);
  const std::size_t c = static_cast<std::size_t>(cfg.c);
  if (c == 1) return make_partition(g, std::vector<std::uint32_t>(n, 0), 1);
  if (c == n) {
    std::vector<std::uint32_t> a(n);
    std::iota(a.begin(), a.end(), 0u);
    return make_partition(g, std::move(a), cfg.c);
  }
  const std::size_t ideal = (n + c - 1) / c;
  const std::int64_t cap = std::max<std::int64_t>(
      static_cast<std::int64_t>(ideal), static_cast<std::int64_t>(std::floor(cfg.balance_tolerance * static_cast<double>(ideal) + 1e-9)));

  RngStream rng(derive_seed(cfg.seed, "partition"));
  std::vector<Level> levels;
  levels.push_back(from_graph(g));
  const std::int64_t max_vwgt = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(1.5 * static_cast<double>(n) / static_cast<double>(4 * c))));
  while (levels.back().n > 4 * c) {
    Level next = coarsen(levels.back(), max_vwgt, rng);
    if (static_cast<double>(next.n) > 0.95 * static_cast<double>(levels.back().n)) {
      levels.back().cmap.clear();
      break;
    }
    levels.push_back(std::move(next));
  }

  // Several growing trials on the coarsest level; keep the smallest cut.
  std::vector<std::uint32_t> assign;
  double best_cut = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    auto cand = grow(levels.back(), cfg.c, cap, rng);
    Refiner r(levels.back(), cfg.c, cap, cand);
    r.refine(8);
    r.rebalance();
    const double cut = r.cut();
    if (assign.empty() || cut < best_cut) {
      best_cut = cut;
      assign = std::move(cand);
    }
  }

  for (std::size_t lv = levels.size() - 1; lv-- > 0;) {
    const Level& fine = levels[lv];
    std::vector<std::uint32_t> projected(fine.n);
    for (std::size_t v = 0; v < fine.n; ++v) projected[v] = assign[fine.cmap[v]];
    assign = std::move(projected);
    Refiner r(fine, cfg.c, cap, assign);
    r.rebalance();
    r.refine(8);
  }

  // At the finest level every node weighs 1, so empty clusters can always be
  // filled from the largest one.
  Refiner fix(levels.front(), cfg.c, cap, assign);
  for (int t = 0; t < cfg.c; ++t) {
    if (fix.count[static_cast<std::size_t>(t)] > 0) continue;
    std::uint32_t largest = 0;
    for (int s = 1; s < cfg.c; ++s) {
      if (fix.count[static_cast<std::size_t>(s)] > fix.count[largest]) largest = static_cast<std::uint32_t>(s);
    }
    for (std::uint32_t v = 0; v < levels.front().n; ++v) {
      if (assign[v] == largest) {
        fix.move(v, static_cast<std::uint32_t>(t));
        break;
      }
    }
  }
  fix.rebalance();
  return make_partition(g, std::move(assign), cfg.c);
}

Partition random_balanced_partition(const Graph& g, int c, RngStream& rng) {
  const std::size_t n = g.num_nodes();
  if (c < 1 || static_cast<std::size_t>(c) > n) throw ConfigError("random partition: need 1 <= c <= n");
  const auto order = shuffled(n, rng);
  std::vector<std::uint32_t> assign(n);
  for (std::size_t k = 0; k < n; ++k) assign[order[k]] = static_cast<std::uint32_t>(k % static_cast<std::size_t>(c));
  return make_partition(g, std::move(assign), c);
}

EdgeCutReport edge_cut_report(const Graph& g, const Partition& p) {
  EdgeCutReport r;
  r.edge_cut = p.edge_cut;
  r.edges = g.num_edges();
  std::size_t largest = 0;
  for (const auto& m : p.members) {
    r.sizes.push_back(m.size());
    largest = std::max(largest, m.size());
  }
  const std::size_t c = static_cast<std::size_t>(std::max(p.c, 1));
  const std::size_t ideal = (g.num_nodes() + c - 1) / c;
  r.balance = ideal ? static_cast<double>(largest) / static_cast<double>(ideal) : 0.0;
  return r;
}

std::string to_json(const EdgeCutReport& r) {
  nlohmann::ordered_json j;
  j["edge_cut"] = r.edge_cut;
  j["edges"] = r.edges;
  j["clusters"] = r.sizes.size();
  j["sizes"] = r.sizes;
  j["balance"] = r.balance;
  return j.dump();
}

void write_partition_cache(std::ostream& out, const Partition& p, std::uint64_t seed) {
  out << "# partition n=" << p.assign.size() << " c=" << p.c << " seed=" << seed << '\n';
  for (std::uint32_t a : p.assign) out << a << '\n';
}

std::optional<Partition> read_partition_cache(std::istream& in, const Graph& g, int c, std::uint64_t seed) {
  std::ostringstream expect;
  expect << "# partition n=" << g.num_nodes() << " c=" << c << " seed=" << seed;
  std::string line;
  if (!std::getline(in, line) || line != expect.str()) return std::nullopt;
  std::vector<std::uint32_t> assign;
  assign.reserve(g.num_nodes());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(line, &pos);
    } catch (const std::exception&) {
      throw DataError("partition cache: bad line '" + line + "'");
    }
    if (pos != line.size()) throw DataError("partition cache: bad line '" + line + "'");
    assign.push_back(static_cast<std::uint32_t>(v));
  }
  return make_partition(g, std::move(assign), c);
}

}  // namespace gldgcn
