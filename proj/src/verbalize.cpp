#include "kgprompt/verbalize.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"

namespace kgprompt {
namespace {

void require_kind(const StructureBundle& b, StructureKind expected) {
  if (b.kind != expected) {
    throw Error(ErrorCode::KindMismatch, "expected a " + std::string(to_string(expected)) +
                                             " bundle, got " + std::string(to_string(b.kind)));
  }
}

// "a", "a and b", "a, b and c"
std::string conjunction_list(const std::vector<std::string>& names, const TemplateSet& t) {
  if (names.size() <= 1) return names.empty() ? std::string() : names.front();
  std::vector<std::string> head(names.begin(), names.end() - 1);
  return join(head, t.list_separator) + " " + t.final_conjunction + " " + names.back();
}

std::string render_labeled(const GraphContext& ctx, std::size_t anchor) {
  const auto& t = ctx.templates;
  std::vector<std::string> order;
  std::vector<std::vector<std::string>> members;
  for (const auto& item : ctx.items) {
    if (item.anchor != anchor) continue;
    std::size_t g = 0;
    while (g < order.size() && order[g] != item.group) ++g;
    if (g == order.size()) {
      order.push_back(item.group);
      members.emplace_back();
    }
    members[g].push_back(item.text);
  }
  std::vector<std::string> clauses;
  for (std::size_t g = 0; g < order.size(); ++g) {
    const auto& post = g == 0 ? t.nn_labeled_post : t.nn_labeled_post_repeat;
    clauses.push_back(t.nn_labeled_pre + " " + order[g] + " " + post + " " +
                      conjunction_list(members[g], t));
  }
  return ctx.anchors.at(anchor) + " " + join(clauses, t.list_separator);
}

std::vector<std::string> item_texts(const GraphContext& ctx) {
  std::vector<std::string> out;
  out.reserve(ctx.items.size());
  for (const auto& i : ctx.items) out.push_back(i.text);
  return out;
}

// One sentence per anchor that still has items.
std::string render_neighbors(const GraphContext& ctx) {
  const auto& t = ctx.templates;
  std::vector<std::string> sentences;
  for (std::size_t a = 0; a < ctx.anchors.size(); ++a) {
    std::vector<std::string> names;
    for (const auto& i : ctx.items) {
      if (i.anchor == a) names.push_back(i.text);
    }
    if (names.empty()) continue;
    sentences.push_back(ctx.labeled ? render_labeled(ctx, a)
                                    : ctx.anchors[a] + " " + t.nn_connective + " " + join(names, t.list_separator));
  }
  return join(sentences, t.sentence_separator);
}

GraphContext start(StructureKind kind, const TemplateSet& t, std::vector<const Node*> anchors) {
  t.validate();
  GraphContext ctx;
  ctx.kind = kind;
  ctx.templates = t;
  for (const auto* a : anchors) {
    ctx.anchors.push_back(a->name);
    ctx.anchor_ids.push_back(a->id);
  }
  return ctx;
}

}  // namespace

void TemplateSet::validate() const {
  const std::pair<const char*, const std::string*> fields[] = {
      {"nn_connective", &nn_connective},
      {"nn_labeled_pre", &nn_labeled_pre},
      {"nn_labeled_post", &nn_labeled_post},
      {"nn_labeled_post_repeat", &nn_labeled_post_repeat},
      {"cnn_prefix", &cnn_prefix},
      {"mp_connective", &mp_connective},
      {"mp_path_intro", &mp_path_intro},
      {"list_separator", &list_separator},
      {"final_conjunction", &final_conjunction},
      {"path_separator", &path_separator},
      {"sentence_separator", &sentence_separator},
  };
  for (const auto& [name, value] : fields) {
    if (value->empty()) throw Error(ErrorCode::ValidationError, std::string("template field '") + name + "' is empty");
  }
}

TemplateSet load_template_set(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, path.string() + ": expected an object");
  TemplateSet t;
  std::pair<const char*, std::string*> fields[] = {
      {"nn_connective", &t.nn_connective},
      {"nn_labeled_pre", &t.nn_labeled_pre},
      {"nn_labeled_post", &t.nn_labeled_post},
      {"nn_labeled_post_repeat", &t.nn_labeled_post_repeat},
      {"cnn_prefix", &t.cnn_prefix},
      {"mp_connective", &t.mp_connective},
      {"mp_path_intro", &t.mp_path_intro},
      {"list_separator", &t.list_separator},
      {"final_conjunction", &t.final_conjunction},
      {"path_separator", &t.path_separator},
      {"sentence_separator", &t.sentence_separator},
  };
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (auto& [name, target] : fields) {
      if (it.key() == name) {
        if (!it.value().is_string()) {
          throw Error(ErrorCode::SchemaError, path.string() + ": '" + it.key() + "' must be a string");
        }
        *target = it.value().get<std::string>();
        known = true;
      }
    }
    if (!known) throw Error(ErrorCode::SchemaError, path.string() + ": unknown template field '" + it.key() + "'");
  }
  t.validate();
  return t;
}

void render(GraphContext& ctx) {
  ctx.empty = ctx.items.empty();
  ctx.source_nodes.clear();
  if (ctx.empty) {
    ctx.text.clear();
    return;
  }
  const auto& t = ctx.templates;
  switch (ctx.kind) {
    case StructureKind::NN:
      ctx.text = render_neighbors(ctx);
      break;
    case StructureKind::CNN:
      ctx.text = t.cnn_prefix + " " + ctx.anchors.at(0) + " and " + ctx.anchors.at(1) +
                 " are: " + join(item_texts(ctx), t.list_separator);
      break;
    case StructureKind::MP:
      ctx.text = ctx.anchors.at(0) + " " + t.mp_connective + " " + ctx.anchors.at(1) + " " +
                 t.mp_path_intro + " " + join(item_texts(ctx), t.path_separator);
      break;
  }
  ctx.source_nodes = ctx.anchor_ids;
  for (const auto& item : ctx.items) {
    for (const auto& id : item.nodes) {
      if (std::find(ctx.source_nodes.begin(), ctx.source_nodes.end(), id) == ctx.source_nodes.end()) {
        ctx.source_nodes.push_back(id);
      }
    }
  }
}

GraphContext GraphContext::without_last_item() const {
  GraphContext out = *this;
  if (!out.items.empty()) out.items.pop_back();
  render(out);
  return out;
}

GraphContext empty_context(StructureKind kind) {
  GraphContext ctx;
  ctx.kind = kind;
  return ctx;
}

GraphContext verbalize_neighbors(const Node& x, const StructureBundle& bundle, const TemplateSet& t) {
  require_kind(bundle, StructureKind::NN);
  auto ctx = start(StructureKind::NN, t, {&x});
  for (const auto& n : bundle.neighbors) ctx.items.push_back({n.node.name, {}, {n.node.id}});
  render(ctx);
  return ctx;
}

GraphContext verbalize_neighbors_labeled(const Node& x, const StructureBundle& bundle,
                                         const TemplateSet& t) {
  require_kind(bundle, StructureKind::NN);
  auto ctx = start(StructureKind::NN, t, {&x});
  ctx.labeled = true;
  for (const auto& n : bundle.neighbors) {
    if (n.labels.empty()) {
      throw Error(ErrorCode::MissingLabel, "neighbor '" + n.node.id.value + "' has no relation label");
    }
    std::vector<std::string> seen;
    for (const auto& l : n.labels) {
      // A neighbor joined by the same label in both directions is listed once.
      if (std::find(seen.begin(), seen.end(), l.label.value) != seen.end()) continue;
      seen.push_back(l.label.value);
      ctx.items.push_back({n.node.name, l.label.value, {n.node.id}});
    }
  }
  render(ctx);
  return ctx;
}

GraphContext verbalize_common_neighbors(const Node& x, const Node& y, const StructureBundle& bundle,
                                        const TemplateSet& t) {
  require_kind(bundle, StructureKind::CNN);
  auto ctx = start(StructureKind::CNN, t, {&x, &y});
  for (const auto& n : bundle.common) ctx.items.push_back({n.name, {}, {n.id}});
  render(ctx);
  return ctx;
}

GraphContext verbalize_metapath(const Node& x, const Node& y, const StructureBundle& bundle,
                                const TemplateSet& t) {
  require_kind(bundle, StructureKind::MP);
  auto ctx = start(StructureKind::MP, t, {&x, &y});
  for (const auto& mp : bundle.metapaths) {
    std::vector<std::string> clauses;
    ContextItem item;
    for (std::size_t i = 0; i + 1 < mp.nodes.size(); ++i) {
      const auto& e = mp.edges.at(i);
      const Node& a = mp.nodes[i];
      const Node& b = mp.nodes[i + 1];
      // The stored edge's source is named first, whichever way the walk runs.
      const Node& src = e.direction == Direction::out ? a : b;
      const Node& dst = e.direction == Direction::out ? b : a;
      clauses.push_back(src.name + " " + e.label.value + " " + dst.name);
    }
    for (const auto& n : mp.nodes) item.nodes.push_back(n.id);
    item.text = join(clauses, t.list_separator);
    ctx.items.push_back(std::move(item));
  }
  render(ctx);
  return ctx;
}

GraphContext merge_neighbor_contexts(const GraphContext& first, const GraphContext& second) {
  if (first.kind != StructureKind::NN || second.kind != StructureKind::NN) {
    throw Error(ErrorCode::KindMismatch, "only neighbor contexts can be merged");
  }
  if (first.empty && first.anchors.empty()) return second;
  if (second.empty && second.anchors.empty()) return first;
  if (first.labeled != second.labeled || first.templates != second.templates) {
    throw Error(ErrorCode::InvalidArgument, "merged contexts must share templates and labeling");
  }
  GraphContext out = first;
  const std::size_t offset = out.anchors.size();
  out.anchors.insert(out.anchors.end(), second.anchors.begin(), second.anchors.end());
  out.anchor_ids.insert(out.anchor_ids.end(), second.anchor_ids.begin(), second.anchor_ids.end());
  for (auto item : second.items) {
    item.anchor += offset;
    out.items.push_back(std::move(item));
  }
  render(out);
  return out;
}

GraphContext verbalize(const StructureBundle& bundle, const TemplateSet& t, bool labeled_neighbors) {
  switch (bundle.kind) {
    case StructureKind::NN:
      return labeled_neighbors ? verbalize_neighbors_labeled(bundle.source, bundle, t)
                               : verbalize_neighbors(bundle.source, bundle, t);
    case StructureKind::CNN:
      return verbalize_common_neighbors(bundle.source, bundle.target.value(), bundle, t);
    case StructureKind::MP:
      return verbalize_metapath(bundle.source, bundle.target.value(), bundle, t);
  }
  return empty_context(bundle.kind);
}

}  // namespace kgprompt
