#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kgprompt/graph.hpp"

namespace kgprompt {

struct IngestReport {
  std::size_t nodes_loaded = 0;
  /// Edge records accepted from the source. A Hetionet "both" record counts
  /// once here but produces two directed edges in the graph.
  std::size_t edges_loaded = 0;
  std::size_t directed_edges = 0;
  std::size_t duplicates_rejected = 0;
  /// Hetionet per-record "data" objects skipped while parsing.
  std::size_t data_payloads_dropped = 0;
  std::vector<std::string> warnings;
};

struct LoadedGraph {
  KnowledgeGraph graph;
  IngestReport report;
};

/// Hetionet JSON dump (decompressed hetionet-v1.0.json). Node ids become
/// "<kind>::<identifier>", node_type is the kind, edge labels are the edge
/// kind. Bulky "data" payloads are discarded while parsing.
LoadedGraph load_hetionet_json(const std::filesystem::path& path);

/// Line-delimited records, each exactly one of
///   {"node": {"id": ..., "name": ..., "type": ...}}
///   {"edge": {"source": ..., "target": ..., "label": ...}}
/// Blank lines are skipped.
LoadedGraph load_edge_list_jsonl(const std::filesystem::path& path);

/// Inverse of load_edge_list_jsonl: all nodes, then all edges, in graph order.
std::string to_edge_list_jsonl(const KnowledgeGraph& kg);
void export_edge_list_jsonl(const KnowledgeGraph& kg, const std::filesystem::path& path);

/// Dispatches on extension: ".jsonl" edge list, anything else Hetionet JSON.
LoadedGraph load_graph(const std::filesystem::path& path);

}  // namespace kgprompt
