#include <doctest.h>

#include <random>

#include "kgprompt/error.hpp"
#include "kgprompt/graph.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace kgprompt;

namespace {

std::set<int> as_ints(const std::vector<Node>& nodes) {
  std::set<int> out;
  for (const auto& n : nodes) out.insert(std::stoi(n.id.value.substr(1)));
  return out;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("builder rejects bad input") {
    GraphBuilder b;
    b.add_node(fixtures::node("a", "A"));
    CHECK_THROWS_AS(b.add_node(fixtures::node("a", "again")), Error);
    CHECK_THROWS_AS(b.add_node(fixtures::node("", "empty")), Error);
    b.add_node(fixtures::node("b", "B"));
    CHECK(b.add_edge({"a"}, {"b"}, {"r"}));
    CHECK_FALSE(b.add_edge({"a"}, {"b"}, {"r"}));
    CHECK(b.add_edge({"a"}, {"b"}, {"s"}));
    CHECK(b.add_edge({"b"}, {"a"}, {"r"}));
    CHECK_THROWS_AS(b.add_edge({"a"}, {"zz"}, {"r"}), Error);
    CHECK_THROWS_AS(b.add_edge({"a"}, {"b"}, {""}), Error);
    auto kg = std::move(b).build();
    CHECK(kg.edge_count() == 3);
    CHECK(kg.indexes_consistent());
  }

  TEST_CASE("unknown nodes raise UnknownNode") {
    auto kg = fixtures::metapath_figure();
    try {
      neighbors(kg, {"nope"});
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownNode);
    }
  }

  TEST_CASE("neighbors follow the direction policy") {
    auto kg = fixtures::metapath_figure();
    auto names = [](const std::vector<Node>& ns) {
      std::vector<std::string> out;
      for (const auto& n : ns) out.push_back(n.name);
      return out;
    };
    CHECK(names(neighbors(kg, {"FGFR4"})) == std::vector<std::string>{"FGF6", "prostate cancer"});
    CHECK(names(neighbors(kg, {"FGFR4"}, DirectionPolicy::out_only)) == std::vector<std::string>{"prostate cancer"});
    CHECK(names(neighbors(kg, {"FGFR4"}, DirectionPolicy::in_only)) == std::vector<std::string>{"FGF6"});
  }

  TEST_CASE("relation labels between a pair keep edge order and direction") {
    auto kg = fixtures::metapath_figure();
    auto ls = relation_labels_between(kg, {"PC"}, {"FGFR4"});
    REQUIRE(ls.size() == 1);
    CHECK(ls[0].label.value == "associates with");
    CHECK(ls[0].direction == Direction::in);
    CHECK(has_direct_edge(kg, {"PC"}, {"FGFR4"}));
    CHECK_FALSE(has_direct_edge(kg, {"PC"}, {"FGF6"}));
  }

  TEST_CASE("neighbors and k-hop levels match brute force on random graphs") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      auto raw = oracle::random_graph(rng, 50, 200);
      auto kg = oracle::to_kg(raw);
      REQUIRE(kg.indexes_consistent());
      int x = std::uniform_int_distribution<int>(0, raw.n - 1)(rng);
      NodeId xid{oracle::node_name(x)};
      for (auto p : {DirectionPolicy::undirected, DirectionPolicy::out_only, DirectionPolicy::in_only}) {
        CHECK(as_ints(neighbors(kg, xid, p)) == oracle::neighbors(raw, x, p));
        auto levels = k_hop_neighbors(kg, xid, 4, p);
        auto expect = oracle::hop_levels(raw, x, 4, p);
        REQUIRE(levels.size() == 4);
        for (int h = 0; h < 4; ++h) CHECK(as_ints(levels[h]) == expect[h]);
      }
    }
  }

  TEST_CASE("isolated node has no neighbors") {
    GraphBuilder b;
    b.add_node(fixtures::node("solo", "solo"));
    auto kg = std::move(b).build();
    CHECK(neighbors(kg, {"solo"}).empty());
    auto levels = k_hop_neighbors(kg, {"solo"}, 3);
    for (const auto& l : levels) CHECK(l.empty());
  }
}
