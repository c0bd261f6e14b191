#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "kgprompt/error.hpp"
#include "kgprompt/structure.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace kgprompt;

namespace {

int raw_index(const Node& n) { return std::stoi(n.id.value.substr(1)); }

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

TEST_SUITE("structure") {
  TEST_CASE("five neighbors of the neighbor figure in edge order") {
    auto kg = fixtures::neighbor_figure();
    ExtractionLimits l;
    l.max_neighbors = 5;
    auto b = extract_neighbors(kg, {"Q181257"}, l, 203);
    REQUIRE(b.neighbors.size() == 5);
    std::vector<std::string> names;
    for (const auto& n : b.neighbors) names.push_back(n.node.name);
    CHECK(names == std::vector<std::string>{"nilutamide", "cabazitaxel", "urology", "FSHR", "F6F10"});
    CHECK(b.neighbors[0].labels.at(0).label.value == "drug or therapy used for treatment");
    CHECK(b.total_candidates == 5);
  }

  TEST_CASE("neighbor subset is a reproducible subset of the full list") {
    GraphBuilder bld;
    bld.add_node(fixtures::node("hub", "hub"));
    for (int i = 0; i < 10; ++i) {
      bld.add_node(fixtures::node("s" + std::to_string(i), "spoke " + std::to_string(i)));
      bld.add_edge({"hub"}, {"s" + std::to_string(i)}, {"r"});
    }
    auto kg = std::move(bld).build();
    auto full = neighbors(kg, {"hub"});
    auto a = extract_neighbors(kg, {"hub"}, {}, 203);
    auto b = extract_neighbors(kg, {"hub"}, {}, 203);
    CHECK(a == b);
    REQUIRE(a.neighbors.size() == 4);
    CHECK(a.total_candidates == 10);
    std::size_t pos = 0;
    for (const auto& n : a.neighbors) {
      while (pos < full.size() && full[pos] != n.node) ++pos;
      CHECK(pos < full.size());
    }
    bool differs = false;
    for (std::uint64_t s = 0; s < 20 && !differs; ++s) differs = extract_neighbors(kg, {"hub"}, {}, s) != a;
    CHECK(differs);
  }

  TEST_CASE("common neighbors of the common-neighbor figure") {
    auto kg = fixtures::common_neighbor_figure();
    auto b = extract_common_neighbors(kg, {"BC"}, {"ERBB2"}, {}, 203);
    CHECK(b.total_candidates == 5);
    std::vector<std::string> names;
    for (const auto& n : b.common) names.push_back(n.name);
    CHECK(names == std::vector<std::string>{"ADH5", "mammary gland", "exemestane", "TGFBR2", "DPYSL2"});
    auto r = extract_common_neighbors(kg, {"ERBB2"}, {"BC"}, {}, 203);
    CHECK(r.total_candidates == b.total_candidates);
    CHECK(code_of([&] { extract_common_neighbors(kg, {"BC"}, {"BC"}, {}, 1); }) == ErrorCode::SamePairNode);
    CHECK(code_of([&] { extract_common_neighbors(kg, {"BC"}, {"nope"}, {}, 1); }) == ErrorCode::UnknownNode);
  }

  TEST_CASE("disjoint neighborhoods give an empty payload") {
    auto kg = fixtures::long_path_figure();
    auto b = extract_common_neighbors(kg, {"FGF6"}, {"PC"}, {}, 203);
    CHECK(b.common.empty());
    CHECK(b.kind == StructureKind::CNN);
  }

  TEST_CASE("two-gene metapath with its node types") {
    auto kg = fixtures::metapath_figure();
    ExtractionLimits l;
    l.max_metapaths = 10;
    auto b = enumerate_metapaths(kg, {"FGF6"}, {"PC"}, l, 203);
    CHECK(b.total_candidates == 2);
    bool found = false;
    for (const auto& mp : b.metapaths) {
      if (mp.length() == 3 && mp.nodes[1].name == "FGFR4") {
        found = true;
        CHECK(mp.node_types() == std::vector<std::string>{"gene", "gene", "disease"});
      }
    }
    CHECK(found);
  }

  TEST_CASE("direct edge alone yields no metapath") {
    GraphBuilder bld;
    bld.add_node(fixtures::node("x", "x"));
    bld.add_node(fixtures::node("y", "y"));
    bld.add_edge({"x"}, {"y"}, {"causes"});
    auto kg = std::move(bld).build();
    auto b = enumerate_metapaths(kg, {"x"}, {"y"}, {}, 203);
    CHECK(b.metapaths.empty());
    CHECK(b.total_candidates == 0);
  }

  TEST_CASE("metapath preconditions") {
    auto kg = fixtures::metapath_figure();
    ExtractionLimits l;
    l.max_hops = 1;
    CHECK(code_of([&] { enumerate_metapaths(kg, {"FGF6"}, {"PC"}, l, 1); }) == ErrorCode::ValidationError);
    CHECK(code_of([&] { enumerate_metapaths(kg, {"PC"}, {"PC"}, {}, 1); }) == ErrorCode::SamePairNode);
    l.max_hops = 0;
    CHECK(code_of([&] { extract_neighbors(kg, {"PC"}, l, 1); }) == ErrorCode::ValidationError);
  }

  TEST_CASE("path ceiling truncates and flags") {
    GraphBuilder bld;
    bld.add_node(fixtures::node("x", "x"));
    bld.add_node(fixtures::node("y", "y"));
    for (int i = 0; i < 30; ++i) {
      auto m = "m" + std::to_string(i);
      bld.add_node(fixtures::node(m, m));
      bld.add_edge({"x"}, {m}, {"r"});
      bld.add_edge({m}, {"y"}, {"r"});
    }
    auto kg = std::move(bld).build();
    ExtractionLimits l;
    l.path_ceiling = 10;
    auto b = enumerate_metapaths(kg, {"x"}, {"y"}, l, 203);
    CHECK(b.truncated);
    CHECK(b.total_candidates == 10);
    l.path_ceiling = 10'000;
    l.max_hops = 2;
    auto full = enumerate_metapaths(kg, {"x"}, {"y"}, l, 203);
    CHECK_FALSE(full.truncated);
    CHECK(full.total_candidates == 30);
  }

  TEST_CASE("random graphs match the set-intersection and simple-path oracles") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
      auto raw = oracle::random_graph(rng, trial < 100 ? 50 : 12, trial < 100 ? 200 : 30);
      if (raw.n < 2) continue;
      auto kg = oracle::to_kg(raw);
      std::uniform_int_distribution<int> pick(0, raw.n - 1);
      int x = pick(rng), y = pick(rng);
      if (x == y) continue;
      auto xi = kg.index_of({oracle::node_name(x)});
      auto yi = kg.index_of({oracle::node_name(y)});
      std::set<int> got;
      for (auto i : common_neighbor_indices(kg, xi, yi)) got.insert(raw_index(kg.node(i)));
      CHECK(got == oracle::common_neighbors(raw, x, y));
      CHECK(common_neighbor_indices(kg, xi, yi) == common_neighbor_indices(kg, yi, xi));

      std::size_t hops = 2 + static_cast<std::size_t>(trial % 3);
      auto paths = enumerate_simple_paths(kg, xi, yi, hops, 1'000'000);
      REQUIRE_FALSE(paths.truncated);
      std::set<std::vector<int>> mine;
      for (const auto& p : paths.paths) {
        std::vector<int> ints;
        for (auto i : p) ints.push_back(raw_index(kg.node(i)));
        CHECK(mine.insert(ints).second);
        for (std::size_t k = 0; k + 1 < ints.size(); ++k) CHECK(oracle::joined(raw, ints[k], ints[k + 1]));
      }
      CHECK(mine == oracle::simple_paths(raw, x, y, hops));
    }
  }

  TEST_CASE("limits hold on random graphs") {
    std::mt19937 rng(7);
    ExtractionLimits l;
    for (int trial = 0; trial < 100; ++trial) {
      auto raw = oracle::random_graph(rng, 30, 120);
      if (raw.n < 2) continue;
      auto kg = oracle::to_kg(raw);
      NodeId x{oracle::node_name(0)}, y{oracle::node_name(raw.n - 1)};
      CHECK(extract_neighbors(kg, x, l, trial).payload_size() <= l.max_neighbors);
      CHECK(extract_common_neighbors(kg, x, y, l, trial).payload_size() <= l.max_common_neighbors);
      auto mp = enumerate_metapaths(kg, x, y, l, trial);
      CHECK(mp.payload_size() <= l.max_metapaths);
      for (const auto& p : mp.metapaths) {
        CHECK(p.length() >= 3);
        CHECK(p.length() <= l.max_hops + 1);
        CHECK(p.nodes.front().id == x);
        CHECK(p.nodes.back().id == y);
        CHECK(p.edges.size() + 1 == p.nodes.size());
      }
    }
  }

  TEST_CASE("parallel batch equals the serial reference") {
    std::mt19937 rng(99);
    auto raw = oracle::random_graph(rng, 50, 200);
    while (raw.n < 10) raw = oracle::random_graph(rng, 50, 200);
    auto kg = oracle::to_kg(raw);
    std::vector<PairRequest> reqs;
    std::vector<std::pair<NodeIndex, NodeIndex>> pairs;
    for (int i = 0; i + 1 < raw.n; ++i) {
      reqs.push_back({{oracle::node_name(i)}, NodeId{oracle::node_name(raw.n - 1 - i)}});
      pairs.emplace_back(i, raw.n - 1 - i);
    }
    reqs.erase(std::remove_if(reqs.begin(), reqs.end(), [](const PairRequest& r) { return r.x == *r.y; }), reqs.end());
    for (auto kind : {StructureKind::NN, StructureKind::CNN, StructureKind::MP}) {
      auto s = extract_batch(kg, kind, reqs, {}, 203, Execution::serial);
      auto p = extract_batch(kg, kind, reqs, {}, 203, Execution::parallel);
      CHECK(s == p);
    }
    CHECK(common_neighbor_counts(kg, pairs, Execution::serial) == common_neighbor_counts(kg, pairs, Execution::parallel));
  }

  TEST_CASE("batch errors surface the lowest failing request") {
    auto kg = fixtures::metapath_figure();
    std::vector<PairRequest> reqs{{{"FGF6"}, NodeId{"PC"}}, {{"PC"}, NodeId{"PC"}}, {{"nope"}, NodeId{"PC"}}};
    for (auto exec : {Execution::serial, Execution::parallel}) {
      CHECK(code_of([&] { extract_batch(kg, StructureKind::CNN, reqs, {}, 1, exec); }) == ErrorCode::SamePairNode);
    }
  }
}
