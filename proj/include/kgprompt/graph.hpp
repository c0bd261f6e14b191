#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgprompt {

/// Opaque node identifier (Wikidata Q-id, Hetionet "Kind::identifier", ...).
struct NodeId {
  std::string value;

  auto operator<=>(const NodeId&) const = default;
};

struct RelationLabel {
  std::string value;

  auto operator<=>(const RelationLabel&) const = default;
};

struct Node {
  NodeId id;
  std::string name;
  std::string node_type = "unknown";

  bool operator==(const Node&) const = default;
};

struct Edge {
  NodeId source;
  NodeId target;
  RelationLabel label;

  bool operator==(const Edge&) const = default;
};

enum class DirectionPolicy { undirected, out_only, in_only };

/// Orientation of an edge relative to the queried node: out means the
/// queried node is the edge source.
enum class Direction { out, in };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);
std::string_view to_string(DirectionPolicy p);
DirectionPolicy direction_policy_from_string(std::string_view s);

struct LabeledDirection {
  RelationLabel label;
  Direction direction;

  bool operator==(const LabeledDirection&) const = default;
};

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;
using LabelIndex = std::uint32_t;

struct EdgeRecord {
  NodeIndex source;
  NodeIndex target;
  LabelIndex label;
};

struct AdjacencyEntry {
  NodeIndex node;
  EdgeIndex edge;
};

class GraphBuilder;

/// Immutable directed labeled graph. Nodes and edges keep insertion order;
/// out/in adjacency lists are ordered by edge index. Safe for concurrent
/// readers once built.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  bool contains(const NodeId& id) const { return index_.contains(id.value); }
  std::optional<NodeIndex> find(const NodeId& id) const;
  /// Throws UnknownNode.
  NodeIndex index_of(const NodeId& id) const;

  const Node& node(NodeIndex i) const { return nodes_[i]; }
  const Node& node(const NodeId& id) const { return nodes_[index_of(id)]; }
  std::span<const Node> nodes() const { return nodes_; }

  std::span<const EdgeRecord> edge_records() const { return edges_; }
  Edge edge(EdgeIndex i) const;
  std::vector<Edge> edges() const;
  const std::string& label_name(LabelIndex i) const { return labels_[i]; }

  std::span<const AdjacencyEntry> out_edges(NodeIndex i) const { return out_[i]; }
  std::span<const AdjacencyEntry> in_edges(NodeIndex i) const { return in_[i]; }

  /// Neighbor indices under the policy, deduplicated, ordered by the index
  /// of the first contributing edge. The node itself is never included.
  std::vector<NodeIndex> neighbor_indices(NodeIndex x, DirectionPolicy policy) const;

  /// Edges between a and b in either orientation, ascending edge index,
  /// direction relative to a.
  std::vector<std::pair<EdgeIndex, Direction>> edges_between(NodeIndex a, NodeIndex b) const;

  bool adjacent(NodeIndex a, NodeIndex b) const;

  /// True iff the stored indexes equal those rebuilt from the edge list.
  bool indexes_consistent() const;

 private:
  friend class GraphBuilder;

  void rebuild_indexes(std::vector<std::vector<AdjacencyEntry>>& out,
                       std::vector<std::vector<AdjacencyEntry>>& in) const;

  std::vector<Node> nodes_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<std::string> labels_;
  std::vector<EdgeRecord> edges_;
  std::vector<std::vector<AdjacencyEntry>> out_;
  std::vector<std::vector<AdjacencyEntry>> in_;
};

/// Single-threaded construction of a KnowledgeGraph.
class GraphBuilder {
 public:
  /// Throws SchemaError on an empty id or name, or a repeated id.
  NodeIndex add_node(Node node);
  bool has_node(const NodeId& id) const { return graph_.contains(id); }

  /// Returns false (and adds nothing) for an exact duplicate
  /// (source, target, label). Throws SchemaError for dangling endpoints or
  /// an empty label.
  bool add_edge(const NodeId& source, const NodeId& target, const RelationLabel& label);

  std::size_t node_count() const { return graph_.node_count(); }
  std::size_t edge_count() const { return graph_.edge_count(); }

  KnowledgeGraph build() &&;

 private:
  struct TripleHash {
    std::size_t operator()(const std::tuple<NodeIndex, NodeIndex, LabelIndex>& t) const;
  };

  KnowledgeGraph graph_;
  std::unordered_map<std::string, LabelIndex> label_index_;
  std::unordered_set<std::tuple<NodeIndex, NodeIndex, LabelIndex>, TripleHash> seen_;
};

// Query operations over NodeId. All throw UnknownNode for absent ids.

std::vector<Node> neighbors(const KnowledgeGraph& kg, const NodeId& x,
                            DirectionPolicy policy = DirectionPolicy::undirected);

/// Hop h (1-based, element h-1) holds nodes whose shortest distance from x
/// under the policy is exactly h.
std::vector<std::vector<Node>> k_hop_neighbors(const KnowledgeGraph& kg, const NodeId& x,
                                               std::size_t k,
                                               DirectionPolicy policy = DirectionPolicy::undirected);

bool has_direct_edge(const KnowledgeGraph& kg, const NodeId& x, const NodeId& y);

std::vector<LabeledDirection> relation_labels_between(const KnowledgeGraph& kg, const NodeId& x,
                                                      const NodeId& y);

}  // namespace kgprompt

template <>
struct std::hash<kgprompt::NodeId> {
  std::size_t operator()(const kgprompt::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
