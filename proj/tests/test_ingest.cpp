#include <doctest.h>

#include <filesystem>

#include "kgprompt/error.hpp"
#include "kgprompt/ingest.hpp"
#include "kgprompt/structure.hpp"
#include "kgprompt/util.hpp"
#include "support/fixtures.hpp"

using namespace kgprompt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name, const std::string& contents) {
  auto p = fs::temp_directory_path() / "kgprompt_ingest_test" / name;
  write_file_atomic(p, contents);
  return p;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("hetionet sample loads with both-direction expansion") {
    auto loaded = load_hetionet_json(fixtures::data_dir() / "hetionet_sample.json");
    const auto& r = loaded.report;
    CHECK(r.nodes_loaded == 5);
    CHECK(r.edges_loaded == 7);
    CHECK(r.directed_edges == 10);
    CHECK(r.duplicates_rejected == 1);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].rfind("DuplicateEdge:", 0) == 0);
    CHECK(r.data_payloads_dropped == 6);
    const auto& kg = loaded.graph;
    CHECK(kg.node({"Gene::2064"}).name == "ERBB2");
    CHECK(kg.node({"Disease::DOID:1612"}).node_type == "Disease");
    auto bc = kg.index_of({"Disease::DOID:1612"});
    auto erbb2 = kg.index_of({"Gene::2064"});
    CHECK(common_neighbor_indices(kg, erbb2, bc).size() == 2);
  }

  TEST_CASE("hetionet errors name the problem") {
    auto bad_json = scratch("bad.json", "{\"nodes\": [\n  {\"kind\": \"Gene\",\n  oops}\n]}");
    try {
      load_hetionet_json(bad_json);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.what()).find("bad.json:3") != std::string::npos);
    }
    auto missing = scratch("missing.json", R"({"nodes": [{"kind": "Gene", "identifier": 1}], "edges": []})");
    try {
      load_hetionet_json(missing);
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
      CHECK(std::string(e.what()).find("'name'") != std::string::npos);
    }
    auto dangling = scratch("dangling.json",
                            R"({"nodes": [{"kind": "Gene", "identifier": 1, "name": "g"}],
                                "edges": [{"source_id": ["Gene", 1], "target_id": ["Gene", 2], "kind": "x", "direction": "both"}]})");
    CHECK(code_of([&] { load_hetionet_json(dangling); }) == ErrorCode::SchemaError);
  }

  TEST_CASE("edge list round trips") {
    auto kg = fixtures::metapath_figure();
    auto text = to_edge_list_jsonl(kg);
    auto path = scratch("fig2.jsonl", text);
    auto loaded = load_edge_list_jsonl(path);
    CHECK(loaded.report.nodes_loaded == 4);
    CHECK(loaded.report.edges_loaded == 4);
    CHECK(loaded.graph.nodes().size() == kg.nodes().size());
    CHECK(loaded.graph.edges() == kg.edges());
    CHECK(to_edge_list_jsonl(loaded.graph) == text);
  }

  TEST_CASE("edge list rejects mixed and malformed records") {
    CHECK(code_of([&] { load_edge_list_jsonl(scratch("both.jsonl", R"({"node": {"id": "a", "name": "a"}, "edge": {}})")); }) ==
          ErrorCode::SchemaError);
    CHECK(code_of([&] { load_edge_list_jsonl(scratch("junk.jsonl", "{\"node\": ")); }) == ErrorCode::ParseError);
    auto dup = scratch("dup.jsonl",
                       "{\"node\": {\"id\": \"a\", \"name\": \"a\"}}\n\n{\"node\": {\"id\": \"b\", \"name\": \"b\"}}\n"
                       "{\"edge\": {\"source\": \"a\", \"target\": \"b\", \"label\": \"r\"}}\n"
                       "{\"edge\": {\"source\": \"a\", \"target\": \"b\", \"label\": \"r\"}}\n");
    auto loaded = load_edge_list_jsonl(dup);
    CHECK(loaded.graph.edge_count() == 1);
    CHECK(loaded.report.duplicates_rejected == 1);
  }

  TEST_CASE("mini fixture graph loads by extension") {
    auto loaded = load_graph(fixtures::data_dir() / "mini_kg.jsonl");
    CHECK(loaded.graph.node_count() == 34);
    CHECK(loaded.graph.indexes_consistent());
  }
}
