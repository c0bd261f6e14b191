#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kgprompt/error.hpp"
#include "kgprompt/verbalize.hpp"
#include "support/fixtures.hpp"

using namespace kgprompt;

namespace {

StructureBundle five_neighbors() {
  static const auto kg = fixtures::neighbor_figure();
  ExtractionLimits l;
  l.max_neighbors = 5;
  return extract_neighbors(kg, {"Q181257"}, l, 203);
}

// Same anchor without the specialty neighbor.
StructureBundle four_neighbors() {
  auto b = five_neighbors();
  b.neighbors.erase(b.neighbors.begin() + 2);
  return b;
}

}  // namespace

TEST_SUITE("verbalize") {
  TEST_CASE("unlabeled neighbor sentence") {
    auto b = five_neighbors();
    auto ctx = verbalize_neighbors(b.source, b);
    CHECK(ctx.text == "prostate cancer is connected to nilutamide, cabazitaxel, urology, FSHR, F6F10");
    CHECK_FALSE(ctx.empty);
    CHECK(ctx.source_nodes.size() == 6);
    CHECK(ctx.source_nodes.front() == NodeId{"Q181257"});
  }

  TEST_CASE("labeled neighbor sentence groups by relation") {
    auto b = four_neighbors();
    auto ctx = verbalize_neighbors_labeled(b.source, b);
    CHECK(ctx.text ==
          "prostate cancer has drug or therapy used for treatment relation with nilutamide and cabazitaxel, "
          "has genetic association with FSHR and F6F10");
    CHECK(verbalize(b, {}, true) == ctx);
  }

  TEST_CASE("common neighbor sentence") {
    auto kg = fixtures::common_neighbor_figure();
    auto b = extract_common_neighbors(kg, {"BC"}, {"ERBB2"}, {}, 203);
    auto ctx = verbalize(b);
    CHECK(ctx.text == "Common neighbor nodes of breast cancer and ERBB2 are: ADH5, mammary gland, exemestane, TGFBR2, DPYSL2");
  }

  TEST_CASE("four-hop metapath sentence") {
    auto kg = fixtures::long_path_figure();
    auto b = enumerate_metapaths(kg, {"FGF6"}, {"PC"}, {}, 203);
    REQUIRE(b.metapaths.size() == 1);
    auto ctx = verbalize(b);
    CHECK(ctx.text ==
          "FGF6 is connected to prostate cancer via the following paths: FGF6 expressed in tendon, "
          "tendon expresses SQRDL, FGFR2 regulates SQRDL, FGFR2 associates with prostate cancer");
    CHECK(ctx.source_nodes.size() == 5);
  }

  TEST_CASE("several metapaths use the path separator") {
    auto kg = fixtures::metapath_figure();
    ExtractionLimits l;
    l.max_metapaths = 5;
    auto b = enumerate_metapaths(kg, {"FGF6"}, {"PC"}, l, 203);
    REQUIRE(b.metapaths.size() == 2);
    auto ctx = verbalize(b);
    CHECK(ctx.text.find("; ") != std::string::npos);
    CHECK(ctx.items.size() == 2);
  }

  TEST_CASE("custom templates replace the literal words") {
    TemplateSet t;
    t.nn_connective = "is linked with";
    t.list_separator = " / ";
    auto b = five_neighbors();
    CHECK(verbalize(b, t).text == "prostate cancer is linked with nilutamide / cabazitaxel / urology / FSHR / F6F10");
    t.cnn_prefix = "";
    CHECK_THROWS_AS(verbalize(b, t), Error);
  }

  TEST_CASE("empty bundles give an empty-flagged context") {
    auto kg = fixtures::long_path_figure();
    auto b = extract_common_neighbors(kg, {"FGF6"}, {"PC"}, {}, 203);
    auto ctx = verbalize(b);
    CHECK(ctx.empty);
    CHECK(ctx.text.empty());
  }

  TEST_CASE("kind mismatch and missing labels") {
    auto b = five_neighbors();
    try {
      verbalize_common_neighbors(b.source, b.source, b);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::KindMismatch);
    }
    b.neighbors[1].labels.clear();
    try {
      verbalize_neighbors_labeled(b.source, b);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingLabel);
    }
  }

  TEST_CASE("merged neighbor contexts render one sentence per anchor") {
    auto kg = fixtures::metapath_figure();
    auto a = verbalize(extract_neighbors(kg, {"FGF6"}, {}, 1));
    auto c = verbalize(extract_neighbors(kg, {"PC"}, {}, 1));
    auto m = merge_neighbor_contexts(a, c);
    CHECK(m.text == "FGF6 is connected to FGFR4, prostate. prostate cancer is connected to FGFR4, prostate");
    CHECK(m.anchors.size() == 2);
    auto shorter = m.without_last_item();
    CHECK(shorter.text == "FGF6 is connected to FGFR4, prostate. prostate cancer is connected to FGFR4");
    auto only_first = shorter.without_last_item();
    CHECK(only_first.text == "FGF6 is connected to FGFR4, prostate");
    CHECK(merge_neighbor_contexts(empty_context(StructureKind::NN), a) == a);
    CHECK_THROWS_AS(merge_neighbor_contexts(a, empty_context(StructureKind::CNN)), Error);
  }

  TEST_CASE("template files") {
    auto dir = std::filesystem::temp_directory_path() / "kgprompt_tpl_test";
    std::filesystem::create_directories(dir);
    auto p = dir / "t.json";
    std::ofstream(p) << R"({"nn_connective": "neighbors"})";
    auto t = load_template_set(p);
    CHECK(t.nn_connective == "neighbors");
    CHECK(t.cnn_prefix == TemplateSet{}.cnn_prefix);
    std::ofstream(p) << R"({"nn_conective": "x"})";
    CHECK_THROWS_AS(load_template_set(p), Error);
    std::ofstream(p) << R"({"nn_connective": 3})";
    CHECK_THROWS_AS(load_template_set(p), Error);
    std::filesystem::remove_all(dir);
  }
}
