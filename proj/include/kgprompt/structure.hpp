#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgprompt/graph.hpp"

namespace kgprompt {

enum class StructureKind { NN, CNN, MP };

std::string_view to_string(StructureKind kind);
StructureKind structure_kind_from_string(std::string_view s);

struct ExtractionLimits {
  std::size_t max_neighbors = 4;
  std::size_t max_common_neighbors = 5;
  /// m: metapaths kept after random selection.
  std::size_t max_metapaths = 1;
  /// Edges per metapath; 4 for local graphs, 1 for remote 1-hop data.
  std::size_t max_hops = 4;
  /// Stop enumerating metapaths after this many; the bundle is flagged.
  std::size_t path_ceiling = 10'000;
  DirectionPolicy policy = DirectionPolicy::undirected;

  static ExtractionLimits remote_defaults() {
    ExtractionLimits l;
    l.max_hops = 1;
    return l;
  }

  /// Throws ValidationError.
  void validate() const;
};

struct NeighborEntry {
  Node node;
  /// Labels on edges between the anchor and this neighbor, edge order.
  std::vector<LabeledDirection> labels;

  bool operator==(const NeighborEntry&) const = default;
};

/// A simple path between a pair. edges[i] joins nodes[i] and nodes[i+1];
/// Direction::out means nodes[i] is the stored edge's source.
struct Metapath {
  std::vector<Node> nodes;
  std::vector<LabeledDirection> edges;

  std::size_t length() const { return nodes.size(); }
  std::vector<std::string> node_types() const;

  bool operator==(const Metapath&) const = default;
};

struct StructureBundle {
  StructureKind kind = StructureKind::NN;
  Node source;
  std::optional<Node> target;

  std::vector<NeighborEntry> neighbors;  // NN
  std::vector<Node> common;              // CNN
  std::vector<Metapath> metapaths;       // MP

  /// Candidates before subset selection: |N(x)|, |N(x) ∩ N(y)|, or the
  /// number of metapaths enumerated.
  std::size_t total_candidates = 0;
  /// Metapath enumeration stopped at the path ceiling.
  bool truncated = false;
  std::uint64_t selection_seed = 0;

  std::size_t payload_size() const;
  bool operator==(const StructureBundle&) const = default;
};

std::vector<NeighborEntry> neighbor_entries(const KnowledgeGraph& kg, NodeIndex x,
                                            DirectionPolicy policy);

/// N(x) ∩ N(y), ordered by node insertion order (so symmetric in x, y).
std::vector<NodeIndex> common_neighbor_indices(const KnowledgeGraph& kg, NodeIndex x, NodeIndex y,
                                               DirectionPolicy policy = DirectionPolicy::undirected);

struct PathEnumeration {
  std::vector<std::vector<NodeIndex>> paths;
  bool truncated = false;
};

/// All simple undirected paths x..y with 3 to max_hops+1 nodes, in
/// depth-first order over insertion-ordered adjacency. The 2-node direct
/// path is never produced.
PathEnumeration enumerate_simple_paths(const KnowledgeGraph& kg, NodeIndex x, NodeIndex y,
                                       std::size_t max_hops, std::size_t ceiling);

Metapath make_metapath(const KnowledgeGraph& kg, const std::vector<NodeIndex>& path);

StructureBundle extract_neighbors(const KnowledgeGraph& kg, const NodeId& x,
                                  const ExtractionLimits& limits, std::uint64_t seed);
StructureBundle extract_common_neighbors(const KnowledgeGraph& kg, const NodeId& x, const NodeId& y,
                                         const ExtractionLimits& limits, std::uint64_t seed);
StructureBundle enumerate_metapaths(const KnowledgeGraph& kg, const NodeId& x, const NodeId& y,
                                    const ExtractionLimits& limits, std::uint64_t seed);

/// Generator seed for one extraction, derived from (seed, kind, pair) so
/// batch order cannot affect the draw.
std::uint64_t extraction_seed(std::uint64_t seed, StructureKind kind, const NodeId& x,
                              const NodeId* y);

// Batch extraction. The serial loop is the reference the OpenMP kernel is
// tested against; both call the same per-pair functions above.

struct PairRequest {
  NodeId x;
  std::optional<NodeId> y;  // required for CNN and MP
};

enum class Execution { serial, parallel };

std::vector<StructureBundle> extract_batch(const KnowledgeGraph& kg, StructureKind kind,
                                           std::span<const PairRequest> requests,
                                           const ExtractionLimits& limits, std::uint64_t seed,
                                           Execution exec = Execution::parallel);

/// |N(x) ∩ N(y)| for many pairs.
std::vector<std::size_t> common_neighbor_counts(const KnowledgeGraph& kg,
                                                std::span<const std::pair<NodeIndex, NodeIndex>> pairs,
                                                Execution exec = Execution::parallel);

}  // namespace kgprompt
