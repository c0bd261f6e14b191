#include "kgprompt/ingest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"

namespace kgprompt {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::size_t line_of_byte(const std::filesystem::path& path, std::size_t byte) {
  std::ifstream in(path, std::ios::binary);
  std::size_t line = 1;
  char c;
  for (std::size_t i = 0; i < byte && in.get(c); ++i) {
    if (c == '\n') ++line;
  }
  return line;
}

const json& require(const json& obj, const char* field, const std::string& where) {
  if (!obj.is_object() || !obj.contains(field)) {
    throw Error(ErrorCode::SchemaError, where + ": missing field '" + field + "'");
  }
  return obj.at(field);
}

std::string scalar_string(const json& v, const char* field, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  throw Error(ErrorCode::SchemaError, where + ": field '" + field + "' must be a string or integer");
}

std::string hetionet_node_id(const std::string& kind, const std::string& identifier) {
  return kind + "::" + identifier;
}

std::string hetionet_ref(const json& ref, const char* field, const std::string& where) {
  if (!ref.is_array() || ref.size() != 2) {
    throw Error(ErrorCode::SchemaError, where + ": field '" + field + "' must be [kind, identifier]");
  }
  return hetionet_node_id(scalar_string(ref[0], field, where), scalar_string(ref[1], field, where));
}

void add_checked(GraphBuilder& builder, IngestReport& report, const NodeId& s, const NodeId& t,
                 const RelationLabel& label, const std::string& where) {
  if (builder.add_edge(s, t, label)) {
    ++report.directed_edges;
  } else {
    ++report.duplicates_rejected;
    report.warnings.push_back("DuplicateEdge: " + where + ": " + s.value + " -[" + label.value +
                              "]-> " + t.value);
  }
}

}  // namespace

LoadedGraph load_hetionet_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  // Drop per-record "data" objects (sources, urls, ...) as they are parsed.
  std::size_t dropped = 0;
  json::parser_callback_t drop_data = [&dropped](int depth, json::parse_event_t event, json& parsed) {
    if (event == json::parse_event_t::key && depth == 3 && parsed == "data") {
      ++dropped;
      return false;
    }
    return true;
  };
  json doc;
  try {
    doc = json::parse(in, drop_data);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_of_byte(path, e.byte)) +
                                           " (byte " + std::to_string(e.byte) + "): " + e.what());
  }

  const auto& nodes = require(doc, "nodes", "document");
  const auto& edges = require(doc, "edges", "document");
  if (!nodes.is_array() || !edges.is_array()) {
    throw Error(ErrorCode::SchemaError, "document: 'nodes' and 'edges' must be arrays");
  }

  GraphBuilder builder;
  LoadedGraph out;
  auto& report = out.report;
  report.data_payloads_dropped = dropped;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& rec = nodes[i];
    auto kind = scalar_string(require(rec, "kind", where), "kind", where);
    auto ident = scalar_string(require(rec, "identifier", where), "identifier", where);
    auto name = scalar_string(require(rec, "name", where), "name", where);
    builder.add_node(Node{NodeId{hetionet_node_id(kind, ident)}, name, kind});
    ++report.nodes_loaded;
  }

  for (std::size_t i = 0; i < edges.size(); ++i) {
    std::string where = "edges[" + std::to_string(i) + "]";
    const auto& rec = edges[i];
    NodeId source{hetionet_ref(require(rec, "source_id", where), "source_id", where)};
    NodeId target{hetionet_ref(require(rec, "target_id", where), "target_id", where)};
    RelationLabel label{scalar_string(require(rec, "kind", where), "kind", where)};
    auto direction = scalar_string(require(rec, "direction", where), "direction", where);
    for (const auto* id : {&source, &target}) {
      if (!builder.has_node(*id)) {
        throw Error(ErrorCode::SchemaError, where + ": references unknown node '" + id->value + "'");
      }
    }
    if (direction == "both") {
      add_checked(builder, report, source, target, label, where);
      add_checked(builder, report, target, source, label, where);
    } else if (direction == "forward") {
      add_checked(builder, report, source, target, label, where);
    } else if (direction == "backward") {
      add_checked(builder, report, target, source, label, where);
    } else {
      throw Error(ErrorCode::SchemaError, where + ": unknown direction '" + direction + "'");
    }
    ++report.edges_loaded;
  }
  out.graph = std::move(builder).build();
  return out;
}

LoadedGraph load_edge_list_jsonl(const std::filesystem::path& path) {
  GraphBuilder builder;
  LoadedGraph out;
  auto& report = out.report;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;
    std::string where = path.string() + ":" + std::to_string(number);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, where + " (offset " + std::to_string(e.byte) + "): " + e.what());
    }
    if (!rec.is_object()) throw Error(ErrorCode::SchemaError, where + ": record is not an object");
    bool is_node = rec.contains("node");
    bool is_edge = rec.contains("edge");
    if (is_node == is_edge) {
      throw Error(ErrorCode::SchemaError,
                  where + ": record must have exactly one of 'node' or 'edge'");
    }
    if (is_node) {
      const auto& n = rec["node"];
      Node node{NodeId{scalar_string(require(n, "id", where), "id", where)},
                scalar_string(require(n, "name", where), "name", where), "unknown"};
      if (n.contains("type")) node.node_type = scalar_string(n["type"], "type", where);
      builder.add_node(std::move(node));
      ++report.nodes_loaded;
    } else {
      const auto& e = rec["edge"];
      NodeId s{scalar_string(require(e, "source", where), "source", where)};
      NodeId t{scalar_string(require(e, "target", where), "target", where)};
      RelationLabel label{scalar_string(require(e, "label", where), "label", where)};
      for (const auto* id : {&s, &t}) {
        if (!builder.has_node(*id)) {
          throw Error(ErrorCode::SchemaError, where + ": references unknown node '" + id->value + "'");
        }
      }
      add_checked(builder, report, s, t, label, where);
      ++report.edges_loaded;
    }
  });
  out.graph = std::move(builder).build();
  return out;
}

std::string to_edge_list_jsonl(const KnowledgeGraph& kg) {
  std::string out;
  for (const auto& n : kg.nodes()) {
    ordered_json rec;
    rec["node"] = {{"id", n.id.value}, {"name", n.name}, {"type", n.node_type}};
    out += rec.dump() + "\n";
  }
  for (const auto& e : kg.edges()) {
    ordered_json rec;
    rec["edge"] = {{"source", e.source.value}, {"target", e.target.value}, {"label", e.label.value}};
    out += rec.dump() + "\n";
  }
  return out;
}

void export_edge_list_jsonl(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  write_file_atomic(path, to_edge_list_jsonl(kg));
}

LoadedGraph load_graph(const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") return load_edge_list_jsonl(path);
  return load_hetionet_json(path);
}

}  // namespace kgprompt
