#include "kgprompt/graph.hpp"

#include <algorithm>
#include <deque>

#include "kgprompt/error.hpp"

namespace kgprompt {

std::string_view to_string(Direction d) { return d == Direction::out ? "out" : "in"; }

Direction direction_from_string(std::string_view s) {
  if (s == "out") return Direction::out;
  if (s == "in") return Direction::in;
  throw Error(ErrorCode::SchemaError, "unknown direction '" + std::string(s) + "'");
}

std::string_view to_string(DirectionPolicy p) {
  switch (p) {
    case DirectionPolicy::undirected: return "undirected";
    case DirectionPolicy::out_only: return "out_only";
    case DirectionPolicy::in_only: return "in_only";
  }
  return "undirected";
}

DirectionPolicy direction_policy_from_string(std::string_view s) {
  if (s == "undirected") return DirectionPolicy::undirected;
  if (s == "out_only") return DirectionPolicy::out_only;
  if (s == "in_only") return DirectionPolicy::in_only;
  throw Error(ErrorCode::ValidationError, "unknown direction policy '" + std::string(s) + "'");
}

std::optional<NodeIndex> KnowledgeGraph::find(const NodeId& id) const {
  auto it = index_.find(id.value);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex KnowledgeGraph::index_of(const NodeId& id) const {
  auto it = index_.find(id.value);
  if (it == index_.end()) throw Error(ErrorCode::UnknownNode, "no node '" + id.value + "'");
  return it->second;
}

Edge KnowledgeGraph::edge(EdgeIndex i) const {
  const auto& e = edges_[i];
  return Edge{nodes_[e.source].id, nodes_[e.target].id, RelationLabel{labels_[e.label]}};
}

std::vector<Edge> KnowledgeGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (EdgeIndex i = 0; i < edges_.size(); ++i) out.push_back(edge(i));
  return out;
}

std::vector<NodeIndex> KnowledgeGraph::neighbor_indices(NodeIndex x, DirectionPolicy policy) const {
  std::span<const AdjacencyEntry> outs;
  std::span<const AdjacencyEntry> ins;
  if (policy != DirectionPolicy::in_only) outs = out_[x];
  if (policy != DirectionPolicy::out_only) ins = in_[x];

  std::vector<NodeIndex> result;
  result.reserve(outs.size() + ins.size());
  std::unordered_set<NodeIndex> seen;
  seen.reserve(outs.size() + ins.size());
  auto take = [&](const AdjacencyEntry& e) {
    if (e.node != x && seen.insert(e.node).second) result.push_back(e.node);
  };
  // Both lists are sorted by edge index; merging yields first-edge order.
  std::size_t i = 0, j = 0;
  while (i < outs.size() || j < ins.size()) {
    if (j == ins.size() || (i < outs.size() && outs[i].edge < ins[j].edge)) {
      take(outs[i++]);
    } else {
      take(ins[j++]);
    }
  }
  return result;
}

std::vector<std::pair<EdgeIndex, Direction>> KnowledgeGraph::edges_between(NodeIndex a,
                                                                           NodeIndex b) const {
  std::vector<std::pair<EdgeIndex, Direction>> found;
  for (const auto& e : out_[a]) {
    if (e.node == b) found.emplace_back(e.edge, Direction::out);
  }
  if (a != b) {
    for (const auto& e : in_[a]) {
      if (e.node == b) found.emplace_back(e.edge, Direction::in);
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

bool KnowledgeGraph::adjacent(NodeIndex a, NodeIndex b) const {
  // Scan whichever endpoint has fewer incident edges.
  const bool from_a = out_[a].size() + in_[a].size() <= out_[b].size() + in_[b].size();
  NodeIndex probe = from_a ? a : b;
  NodeIndex other = from_a ? b : a;
  for (const auto& e : out_[probe]) {
    if (e.node == other) return true;
  }
  for (const auto& e : in_[probe]) {
    if (e.node == other) return true;
  }
  return false;
}

void KnowledgeGraph::rebuild_indexes(std::vector<std::vector<AdjacencyEntry>>& out,
                                     std::vector<std::vector<AdjacencyEntry>>& in) const {
  out.assign(nodes_.size(), {});
  in.assign(nodes_.size(), {});
  for (EdgeIndex i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    out[e.source].push_back({e.target, i});
    in[e.target].push_back({e.source, i});
  }
}

bool KnowledgeGraph::indexes_consistent() const {
  std::vector<std::vector<AdjacencyEntry>> out, in;
  rebuild_indexes(out, in);
  auto same = [](const std::vector<std::vector<AdjacencyEntry>>& a,
                 const std::vector<std::vector<AdjacencyEntry>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].size() != b[i].size()) return false;
      for (std::size_t j = 0; j < a[i].size(); ++j) {
        if (a[i][j].node != b[i][j].node || a[i][j].edge != b[i][j].edge) return false;
      }
    }
    return true;
  };
  return same(out, out_) && same(in, in_);
}

std::size_t GraphBuilder::TripleHash::operator()(
    const std::tuple<NodeIndex, NodeIndex, LabelIndex>& t) const {
  std::uint64_t h = std::get<0>(t);
  h = h * 0x9e3779b97f4a7c15ULL ^ std::get<1>(t);
  h = h * 0x9e3779b97f4a7c15ULL ^ std::get<2>(t);
  return static_cast<std::size_t>(h ^ (h >> 29));
}

NodeIndex GraphBuilder::add_node(Node node) {
  if (node.id.value.empty()) throw Error(ErrorCode::SchemaError, "node id is empty");
  if (node.name.empty()) {
    throw Error(ErrorCode::SchemaError, "node '" + node.id.value + "' has an empty name");
  }
  if (node.node_type.empty()) node.node_type = "unknown";
  auto idx = static_cast<NodeIndex>(graph_.nodes_.size());
  if (!graph_.index_.emplace(node.id.value, idx).second) {
    throw Error(ErrorCode::SchemaError, "duplicate node id '" + node.id.value + "'");
  }
  graph_.nodes_.push_back(std::move(node));
  graph_.out_.emplace_back();
  graph_.in_.emplace_back();
  return idx;
}

bool GraphBuilder::add_edge(const NodeId& source, const NodeId& target,
                            const RelationLabel& label) {
  auto s = graph_.find(source);
  if (!s) throw Error(ErrorCode::SchemaError, "edge source '" + source.value + "' is not a node");
  auto t = graph_.find(target);
  if (!t) throw Error(ErrorCode::SchemaError, "edge target '" + target.value + "' is not a node");
  if (label.value.empty()) {
    throw Error(ErrorCode::SchemaError,
                "edge " + source.value + " -> " + target.value + " has an empty label");
  }
  auto [lit, inserted] =
      label_index_.emplace(label.value, static_cast<LabelIndex>(graph_.labels_.size()));
  if (inserted) graph_.labels_.push_back(label.value);
  LabelIndex l = lit->second;
  if (!seen_.emplace(*s, *t, l).second) return false;

  auto e = static_cast<EdgeIndex>(graph_.edges_.size());
  graph_.edges_.push_back({*s, *t, l});
  graph_.out_[*s].push_back({*t, e});
  graph_.in_[*t].push_back({*s, e});
  return true;
}

KnowledgeGraph GraphBuilder::build() && {
  seen_.clear();
  label_index_.clear();
  return std::move(graph_);
}

std::vector<Node> neighbors(const KnowledgeGraph& kg, const NodeId& x, DirectionPolicy policy) {
  std::vector<Node> out;
  for (auto i : kg.neighbor_indices(kg.index_of(x), policy)) out.push_back(kg.node(i));
  return out;
}

std::vector<std::vector<Node>> k_hop_neighbors(const KnowledgeGraph& kg, const NodeId& x,
                                               std::size_t k, DirectionPolicy policy) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  NodeIndex start = kg.index_of(x);
  std::vector<std::vector<Node>> hops;
  std::unordered_set<NodeIndex> visited{start};
  std::vector<NodeIndex> frontier{start};
  for (std::size_t h = 1; h <= k; ++h) {
    std::vector<NodeIndex> next;
    for (auto u : frontier) {
      for (auto v : kg.neighbor_indices(u, policy)) {
        if (visited.insert(v).second) next.push_back(v);
      }
    }
    std::vector<Node> level;
    level.reserve(next.size());
    for (auto v : next) level.push_back(kg.node(v));
    hops.push_back(std::move(level));
    frontier = std::move(next);
  }
  return hops;
}

bool has_direct_edge(const KnowledgeGraph& kg, const NodeId& x, const NodeId& y) {
  return kg.adjacent(kg.index_of(x), kg.index_of(y));
}

std::vector<LabeledDirection> relation_labels_between(const KnowledgeGraph& kg, const NodeId& x,
                                                      const NodeId& y) {
  std::vector<LabeledDirection> out;
  for (auto [e, dir] : kg.edges_between(kg.index_of(x), kg.index_of(y))) {
    out.push_back({RelationLabel{kg.label_name(kg.edge_records()[e].label)}, dir});
  }
  return out;
}

}  // namespace kgprompt
