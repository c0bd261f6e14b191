#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kgprompt/structure.hpp"

namespace kgprompt {

/// Literal words around rendered node names. Every field may be replaced.
struct TemplateSet {
  std::string nn_connective = "is connected to";
  std::string nn_labeled_pre = "has";
  std::string nn_labeled_post = "relation with";
  /// Used instead of nn_labeled_post for the second and later label groups
  /// ("..., has genetic association with FSHR and F6F10").
  std::string nn_labeled_post_repeat = "with";
  std::string cnn_prefix = "Common neighbor nodes of";
  std::string mp_connective = "is connected to";
  std::string mp_path_intro = "via the following paths:";
  std::string list_separator = ", ";
  std::string final_conjunction = "and";
  /// Separates consecutive metapaths when more than one is rendered.
  std::string path_separator = "; ";
  /// Joins the per-anchor sentences of a merged neighbor context.
  std::string sentence_separator = ". ";

  /// Throws ValidationError if any field is empty.
  void validate() const;
  bool operator==(const TemplateSet&) const = default;
};

/// Reads a JSON object keyed by TemplateSet field names; absent keys keep
/// their defaults, unknown keys are rejected.
TemplateSet load_template_set(const std::filesystem::path& path);

struct ContextItem {
  std::string text;
  /// Relation label for labeled neighbor items; empty otherwise.
  std::string group;
  std::vector<NodeId> nodes;
  /// Index into GraphContext::anchors this item describes (neighbor contexts).
  std::size_t anchor = 0;

  bool operator==(const ContextItem&) const = default;
};

/// Natural-language description of one structure. Keeps its items so the
/// prompt builder can drop them one at a time and re-render.
struct GraphContext {
  StructureKind kind = StructureKind::NN;
  bool labeled = false;
  std::string text;
  std::vector<NodeId> source_nodes;
  bool empty = true;

  std::vector<std::string> anchors;
  std::vector<NodeId> anchor_ids;
  std::vector<ContextItem> items;
  TemplateSet templates;

  /// Same context with its last item removed (empty-flagged when none remain).
  GraphContext without_last_item() const;
  bool operator==(const GraphContext&) const = default;
};

GraphContext empty_context(StructureKind kind);

/// Re-renders text/source_nodes/empty from anchors + items + templates.
void render(GraphContext& ctx);

// The Node arguments name the anchors; they must match the bundle's pair
// (KindMismatch is thrown for the wrong bundle kind).
GraphContext verbalize_neighbors(const Node& x, const StructureBundle& bundle,
                                 const TemplateSet& t = {});
GraphContext verbalize_neighbors_labeled(const Node& x, const StructureBundle& bundle,
                                         const TemplateSet& t = {});
GraphContext verbalize_common_neighbors(const Node& x, const Node& y, const StructureBundle& bundle,
                                        const TemplateSet& t = {});
GraphContext verbalize_metapath(const Node& x, const Node& y, const StructureBundle& bundle,
                                const TemplateSet& t = {});

/// Neighbor context covering both anchors: one sentence per anchor, joined
/// by sentence_separator. Either side may be an empty context.
GraphContext merge_neighbor_contexts(const GraphContext& first, const GraphContext& second);

/// Dispatches on bundle.kind using the bundle's own anchors.
GraphContext verbalize(const StructureBundle& bundle, const TemplateSet& t = {},
                       bool labeled_neighbors = false);

}  // namespace kgprompt
