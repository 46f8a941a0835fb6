#include "fedgm/partition.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "fedgm/random.hpp"

namespace fedgm {

std::vector<std::vector<int>> PartitionAssignment::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(num_clients));
  for (std::size_t v = 0; v < client_of.size(); ++v) out[static_cast<std::size_t>(client_of[v])].push_back(static_cast<int>(v));
  return out;
}

double modularity(const Graph& g, const std::vector<int>& community) {
  const double m = static_cast<double>(g.edges.size());
  if (m == 0.0) return 0.0;
  std::vector<double> degree(static_cast<std::size_t>(g.num_nodes), 0.0);
  std::unordered_map<int, double> internal, total;
  for (auto [u, v] : g.edges) {
    degree[static_cast<std::size_t>(u)] += 1.0;
    degree[static_cast<std::size_t>(v)] += 1.0;
    if (community[static_cast<std::size_t>(u)] == community[static_cast<std::size_t>(v)]) {
      internal[community[static_cast<std::size_t>(u)]] += 1.0;
    }
  }
  for (int v = 0; v < g.num_nodes; ++v) total[community[static_cast<std::size_t>(v)]] += degree[static_cast<std::size_t>(v)];
  double q = 0.0;
  for (const auto& [c, tot] : total) {
    const double in = internal.count(c) ? internal[c] : 0.0;
    q += in / m - (tot / (2.0 * m)) * (tot / (2.0 * m));
  }
  return q;
}

namespace {

// Weighted symmetric graph; a self-loop entry holds the full A_ii weight
// (twice the internal edge weight of an aggregated community).
struct WeightedGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::size_t size() const { return adj.size(); }
};

double weighted_modularity(const WeightedGraph& wg, const std::vector<int>& comm, double m2) {
  if (m2 == 0.0) return 0.0;
  std::vector<double> in(wg.size(), 0.0), tot(wg.size(), 0.0);
  for (std::size_t i = 0; i < wg.size(); ++i) {
    for (auto [j, w] : wg.adj[i]) {
      tot[static_cast<std::size_t>(comm[i])] += w;
      if (comm[i] == comm[static_cast<std::size_t>(j)]) in[static_cast<std::size_t>(comm[i])] += w;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < wg.size(); ++c) q += in[c] / m2 - (tot[c] / m2) * (tot[c] / m2);
  return q;
}

// One level of local moving. Returns true if any node changed community.
bool local_moving(const WeightedGraph& wg, std::vector<int>& comm, double m2, Rng& rng, LouvainTrace& trace) {
  const std::size_t n = wg.size();
  std::vector<double> k(n, 0.0), tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto [j, w] : wg.adj[i]) k[i] += w;
    tot[static_cast<std::size_t>(comm[i])] += k[i];
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  bool any_move = false;
  double last_q = weighted_modularity(wg, comm, m2);
  std::vector<double> link(n, 0.0);
  std::vector<int> touched;
  for (;;) {
    int moves = 0;
    for (int node : order) {
      const auto i = static_cast<std::size_t>(node);
      const int own = comm[i];
      touched.clear();
      for (auto [j, w] : wg.adj[i]) {
        if (static_cast<std::size_t>(j) == i) continue;
        const int cj = comm[static_cast<std::size_t>(j)];
        if (link[static_cast<std::size_t>(cj)] == 0.0) touched.push_back(cj);
        link[static_cast<std::size_t>(cj)] += w;
      }
      tot[static_cast<std::size_t>(own)] -= k[i];
      auto gain = [&](int c) { return link[static_cast<std::size_t>(c)] - tot[static_cast<std::size_t>(c)] * k[i] / m2; };
      int best = own;
      double best_gain = gain(own);
      std::sort(touched.begin(), touched.end());
      for (int c : touched) {
        const double gc = gain(c);
        if (gc > best_gain + 1e-12) {
          best = c;
          best_gain = gc;
        }
      }
      tot[static_cast<std::size_t>(best)] += k[i];
      for (int c : touched) link[static_cast<std::size_t>(c)] = 0.0;
      if (best != own) {
        comm[i] = best;
        ++moves;
      }
    }
    const double q = weighted_modularity(wg, comm, m2);
    trace.pass_modularity.push_back(q);
    if (q < last_q - 1e-10) throw std::logic_error("louvain: modularity decreased during a local-moving pass");
    last_q = q;
    if (moves == 0) break;
    any_move = true;
  }
  return any_move;
}

// Renumbers communities densely in order of first appearance by node id.
int renumber(std::vector<int>& comm) {
  std::unordered_map<int, int> ids;
  for (int& c : comm) {
    auto [it, inserted] = ids.try_emplace(c, static_cast<int>(ids.size()));
    c = it->second;
  }
  return static_cast<int>(ids.size());
}

WeightedGraph aggregate(const WeightedGraph& wg, const std::vector<int>& comm, int count) {
  std::vector<std::map<int, double>> acc(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < wg.size(); ++i) {
    for (auto [j, w] : wg.adj[i]) acc[static_cast<std::size_t>(comm[i])][comm[static_cast<std::size_t>(j)]] += w;
  }
  WeightedGraph out;
  out.adj.resize(static_cast<std::size_t>(count));
  for (std::size_t c = 0; c < acc.size(); ++c) out.adj[c].assign(acc[c].begin(), acc[c].end());
  return out;
}

}  // namespace

PartitionAssignment louvain_partition(const Graph& g, int k, std::uint64_t seed, LouvainTrace* trace_out) {
  if (k < 1) throw Error("louvain_partition: K must be >= 1");
  if (k > g.num_nodes) {
    throw Error("louvain_partition: K=" + std::to_string(k) + " exceeds node count " + std::to_string(g.num_nodes));
  }
  LouvainTrace trace;
  Rng rng(seed);

  WeightedGraph wg;
  wg.adj.resize(static_cast<std::size_t>(g.num_nodes));
  for (auto [u, v] : g.edges) {
    wg.adj[static_cast<std::size_t>(u)].emplace_back(v, 1.0);
    wg.adj[static_cast<std::size_t>(v)].emplace_back(u, 1.0);
  }
  const double m2 = 2.0 * static_cast<double>(g.edges.size());

  std::vector<int> node_comm(static_cast<std::size_t>(g.num_nodes));
  std::iota(node_comm.begin(), node_comm.end(), 0);
  if (m2 > 0.0) {
    for (;;) {
      std::vector<int> comm(wg.size());
      std::iota(comm.begin(), comm.end(), 0);
      const bool moved = local_moving(wg, comm, m2, rng, trace);
      ++trace.levels;
      if (!moved) break;
      const int count = renumber(comm);
      for (int& c : node_comm) c = comm[static_cast<std::size_t>(c)];
      wg = aggregate(wg, comm, count);
    }
  }
  int count = renumber(node_comm);
  trace.natural_communities = count;

  // Exact-K adjustment on the original graph.
  std::vector<std::vector<int>> members(static_cast<std::size_t>(count));
  for (int v = 0; v < g.num_nodes; ++v) members[static_cast<std::size_t>(node_comm[static_cast<std::size_t>(v)])].push_back(v);

  auto edges_between = [&]() {
    std::map<std::pair<int, int>, int> cut;
    for (auto [u, v] : g.edges) {
      int a = node_comm[static_cast<std::size_t>(u)], b = node_comm[static_cast<std::size_t>(v)];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      ++cut[{a, b}];
    }
    return cut;
  };

  while (count > k) {
    const auto cut = edges_between();
    int smallest = -1;
    for (int c = 0; c < static_cast<int>(members.size()); ++c) {
      if (members[static_cast<std::size_t>(c)].empty()) continue;
      if (smallest < 0 || members[static_cast<std::size_t>(c)].size() < members[static_cast<std::size_t>(smallest)].size()) smallest = c;
    }
    int partner = -1;
    int partner_edges = -1;
    std::size_t partner_size = 0;
    for (int c = 0; c < static_cast<int>(members.size()); ++c) {
      if (c == smallest || members[static_cast<std::size_t>(c)].empty()) continue;
      auto it = cut.find({std::min(c, smallest), std::max(c, smallest)});
      const int e = it == cut.end() ? 0 : it->second;
      const std::size_t combined = members[static_cast<std::size_t>(c)].size() + members[static_cast<std::size_t>(smallest)].size();
      if (e > partner_edges || (e == partner_edges && combined < partner_size)) {
        partner = c;
        partner_edges = e;
        partner_size = combined;
      }
    }
    const int keep = std::min(smallest, partner);
    const int drop = std::max(smallest, partner);
    for (int v : members[static_cast<std::size_t>(drop)]) node_comm[static_cast<std::size_t>(v)] = keep;
    auto& dst = members[static_cast<std::size_t>(keep)];
    dst.insert(dst.end(), members[static_cast<std::size_t>(drop)].begin(), members[static_cast<std::size_t>(drop)].end());
    std::sort(dst.begin(), dst.end());
    members[static_cast<std::size_t>(drop)].clear();
    --count;
  }

  while (count < k) {
    int largest = -1;
    for (int c = 0; c < static_cast<int>(members.size()); ++c) {
      if (largest < 0 || members[static_cast<std::size_t>(c)].size() > members[static_cast<std::size_t>(largest)].size()) largest = c;
    }
    auto nodes = members[static_cast<std::size_t>(largest)];
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const std::size_t half = nodes.size() / 2;
    std::vector<int> stay(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(nodes.size() - half));
    std::vector<int> leave(nodes.begin() + static_cast<std::ptrdiff_t>(nodes.size() - half), nodes.end());
    std::sort(stay.begin(), stay.end());
    std::sort(leave.begin(), leave.end());
    const int fresh = static_cast<int>(members.size());
    for (int v : leave) node_comm[static_cast<std::size_t>(v)] = fresh;
    members[static_cast<std::size_t>(largest)] = std::move(stay);
    members.push_back(std::move(leave));
    ++count;
  }

  PartitionAssignment out;
  out.client_of = std::move(node_comm);
  out.num_clients = renumber(out.client_of);
  if (trace_out) *trace_out = std::move(trace);
  return out;
}

}  // namespace fedgm
