#include "kgprompt/structure.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"

namespace kgprompt {

std::string_view to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::NN: return "NN";
    case StructureKind::CNN: return "CNN";
    case StructureKind::MP: return "MP";
  }
  return "NN";
}

StructureKind structure_kind_from_string(std::string_view s) {
  if (s == "NN") return StructureKind::NN;
  if (s == "CNN") return StructureKind::CNN;
  if (s == "MP") return StructureKind::MP;
  throw Error(ErrorCode::ValidationError, "unknown structure kind '" + std::string(s) + "'");
}

void ExtractionLimits::validate() const {
  if (max_hops < 1) throw Error(ErrorCode::ValidationError, "max_hops must be >= 1");
  if (path_ceiling < 1) throw Error(ErrorCode::ValidationError, "path_ceiling must be >= 1");
}

std::vector<std::string> Metapath::node_types() const {
  std::vector<std::string> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.node_type);
  return out;
}

std::size_t StructureBundle::payload_size() const {
  switch (kind) {
    case StructureKind::NN: return neighbors.size();
    case StructureKind::CNN: return common.size();
    case StructureKind::MP: return metapaths.size();
  }
  return 0;
}

std::uint64_t extraction_seed(std::uint64_t seed, StructureKind kind, const NodeId& x,
                              const NodeId* y) {
  return derive_seed(seed, {to_string(kind), x.value, y ? std::string_view(y->value) : "-"});
}

std::vector<NeighborEntry> neighbor_entries(const KnowledgeGraph& kg, NodeIndex x,
                                            DirectionPolicy policy) {
  std::vector<NeighborEntry> out;
  for (auto n : kg.neighbor_indices(x, policy)) {
    NeighborEntry entry{kg.node(n), {}};
    for (auto [e, dir] : kg.edges_between(x, n)) {
      if (policy == DirectionPolicy::out_only && dir != Direction::out) continue;
      if (policy == DirectionPolicy::in_only && dir != Direction::in) continue;
      entry.labels.push_back({RelationLabel{kg.label_name(kg.edge_records()[e].label)}, dir});
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<NodeIndex> common_neighbor_indices(const KnowledgeGraph& kg, NodeIndex x, NodeIndex y,
                                               DirectionPolicy policy) {
  auto nx = kg.neighbor_indices(x, policy);
  auto ny = kg.neighbor_indices(y, policy);
  std::sort(nx.begin(), nx.end());
  std::sort(ny.begin(), ny.end());
  std::vector<NodeIndex> out;
  std::set_intersection(nx.begin(), nx.end(), ny.begin(), ny.end(), std::back_inserter(out));
  return out;
}

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

// Undirected hop distance to `target`, explored no further than `radius`.
std::vector<std::size_t> distances_to(const KnowledgeGraph& kg, NodeIndex target,
                                      std::size_t radius) {
  std::vector<std::size_t> dist(kg.node_count(), kUnreached);
  dist[target] = 0;
  std::deque<NodeIndex> queue{target};
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    if (dist[u] == radius) continue;
    for (auto v : kg.neighbor_indices(u, DirectionPolicy::undirected)) {
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

struct PathSearch {
  const KnowledgeGraph& kg;
  NodeIndex target;
  std::size_t max_hops;
  std::size_t ceiling;
  std::vector<std::size_t> dist;
  std::vector<char> on_path;
  std::vector<NodeIndex> path;
  PathEnumeration result;

  void visit(NodeIndex u) {
    const std::size_t hops = path.size() - 1;
    for (auto v : kg.neighbor_indices(u, DirectionPolicy::undirected)) {
      if (result.truncated) return;
      if (v == target) {
        if (hops >= 1) {  // at least one intermediate node
          if (result.paths.size() == ceiling) {
            result.truncated = true;
            return;
          }
          path.push_back(v);
          result.paths.push_back(path);
          path.pop_back();
        }
        continue;
      }
      if (on_path[v]) continue;
      // v sits at hop count hops+1 and must still reach the target in budget.
      if (dist[v] == kUnreached || hops + 1 + dist[v] > max_hops) continue;
      on_path[v] = 1;
      path.push_back(v);
      visit(v);
      path.pop_back();
      on_path[v] = 0;
    }
  }
};

}  // namespace

PathEnumeration enumerate_simple_paths(const KnowledgeGraph& kg, NodeIndex x, NodeIndex y,
                                       std::size_t max_hops, std::size_t ceiling) {
  if (x == y) throw Error(ErrorCode::SamePairNode, "metapath endpoints must differ");
  PathSearch search{kg, y, max_hops, ceiling, distances_to(kg, y, max_hops),
                    std::vector<char>(kg.node_count(), 0), {x}, {}};
  search.on_path[x] = 1;
  if (max_hops >= 2) search.visit(x);
  return std::move(search.result);
}

Metapath make_metapath(const KnowledgeGraph& kg, const std::vector<NodeIndex>& path) {
  Metapath mp;
  for (std::size_t i = 0; i < path.size(); ++i) {
    mp.nodes.push_back(kg.node(path[i]));
    if (i + 1 == path.size()) break;
    auto between = kg.edges_between(path[i], path[i + 1]);
    if (between.empty()) {
      throw Error(ErrorCode::InvalidArgument, "path step " + kg.node(path[i]).id.value + " -> " +
                                                  kg.node(path[i + 1]).id.value + " has no edge");
    }
    // Lowest-index edge stands for the hop.
    auto [e, dir] = between.front();
    mp.edges.push_back({RelationLabel{kg.label_name(kg.edge_records()[e].label)}, dir});
  }
  return mp;
}

StructureBundle extract_neighbors(const KnowledgeGraph& kg, const NodeId& x,
                                  const ExtractionLimits& limits, std::uint64_t seed) {
  limits.validate();
  auto xi = kg.index_of(x);
  auto all = neighbor_entries(kg, xi, limits.policy);
  StructureBundle b;
  b.kind = StructureKind::NN;
  b.source = kg.node(xi);
  b.total_candidates = all.size();
  b.selection_seed = seed;
  b.neighbors = select_subset(all, limits.max_neighbors,
                              extraction_seed(seed, StructureKind::NN, x, nullptr));
  return b;
}

StructureBundle extract_common_neighbors(const KnowledgeGraph& kg, const NodeId& x, const NodeId& y,
                                         const ExtractionLimits& limits, std::uint64_t seed) {
  limits.validate();
  auto xi = kg.index_of(x);
  auto yi = kg.index_of(y);
  if (xi == yi) throw Error(ErrorCode::SamePairNode, "common neighbors of '" + x.value + "' with itself");
  auto all = common_neighbor_indices(kg, xi, yi, limits.policy);
  StructureBundle b;
  b.kind = StructureKind::CNN;
  b.source = kg.node(xi);
  b.target = kg.node(yi);
  b.total_candidates = all.size();
  b.selection_seed = seed;
  for (auto i : select_subset(all, limits.max_common_neighbors,
                              extraction_seed(seed, StructureKind::CNN, x, &y))) {
    b.common.push_back(kg.node(i));
  }
  return b;
}

StructureBundle enumerate_metapaths(const KnowledgeGraph& kg, const NodeId& x, const NodeId& y,
                                    const ExtractionLimits& limits, std::uint64_t seed) {
  limits.validate();
  if (limits.max_hops < 2) {
    throw Error(ErrorCode::ValidationError, "metapaths need max_hops >= 2");
  }
  auto xi = kg.index_of(x);
  auto yi = kg.index_of(y);
  if (xi == yi) throw Error(ErrorCode::SamePairNode, "metapaths from '" + x.value + "' to itself");
  auto found = enumerate_simple_paths(kg, xi, yi, limits.max_hops, limits.path_ceiling);
  StructureBundle b;
  b.kind = StructureKind::MP;
  b.source = kg.node(xi);
  b.target = kg.node(yi);
  b.total_candidates = found.paths.size();
  b.truncated = found.truncated;
  b.selection_seed = seed;
  for (const auto& p : select_subset(found.paths, limits.max_metapaths,
                                     extraction_seed(seed, StructureKind::MP, x, &y))) {
    b.metapaths.push_back(make_metapath(kg, p));
  }
  return b;
}

}  // namespace kgprompt
