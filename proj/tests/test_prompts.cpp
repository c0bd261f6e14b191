#include <doctest.h>

#include <filesystem>
#include <functional>

#include "kgprompt/error.hpp"
#include "kgprompt/prompts.hpp"
#include "support/fixtures.hpp"

using namespace kgprompt;

namespace {

const std::pair<std::string, std::string> kPair{"Smoking", "cancer"};
const std::string kText = "Smoking causes cancer in adult male.";

GraphContext neighbor_context() {
  static const auto kg = fixtures::neighbor_figure();
  ExtractionLimits l;
  l.max_neighbors = 5;
  return verbalize(extract_neighbors(kg, {"Q181257"}, l, 203));
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

TEST_SUITE("prompts") {
  TEST_CASE("cloze prompt with a short pair clause and no graph context") {
    auto p = build_prompt("s1", kText, CausalLabel::causal, empty_context(StructureKind::NN), kPair,
                          Architecture::MLM, LabelMapping::identity(), "[MASK]",
                          PairClauseTemplate{"It shows {mask} relation."});
    CHECK(p.prompt == "Smoking causes cancer in adult male. It shows [MASK] relation.");
  }

  TEST_CASE("cloze prompt orders text, context, clause") {
    auto ctx = neighbor_context();
    auto p = build_prompt("s1", kText, std::nullopt, ctx, kPair, Architecture::MLM, LabelMapping::identity());
    CHECK(p.prompt == kText + " " + ctx.text + " The pair Smoking and cancer shows a [MASK] relation.");
    CHECK(p.pair_clause == "The pair Smoking and cancer shows a [MASK] relation.");
    auto first_mask = p.prompt.find("[MASK]");
    REQUIRE(first_mask != std::string::npos);
    CHECK(p.prompt.find("[MASK]", first_mask + 1) == std::string::npos);
    CHECK(p.prompt.find(ctx.text) > p.prompt.find(kText));
  }

  TEST_CASE("generative prompts end at the generation slot") {
    for (auto arch : {Architecture::CLM, Architecture::Seq2Seq}) {
      auto p = build_prompt("s1", kText, std::nullopt, neighbor_context(), kPair, arch, LabelMapping::identity(),
                            "<extra_id_0>");
      CHECK(p.prompt.ends_with("The pair Smoking and cancer shows a causal relation: <extra_id_0>."));
      CHECK(is_generative(arch));
    }
    CHECK_FALSE(is_generative(Architecture::MLM));
  }

  TEST_CASE("pair clause rules") {
    CHECK_NOTHROW(validate_pair_clause({"{e1} {mask} {e2}"}, Architecture::MLM));
    CHECK(code_of([] { validate_pair_clause({"no slot"}, Architecture::MLM); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { validate_pair_clause({"{mask} {mask}"}, Architecture::MLM); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { validate_pair_clause({"{mask} after"}, Architecture::CLM); }) == ErrorCode::InvalidArgument);
    CHECK_NOTHROW(validate_pair_clause({"answer: {mask}"}, Architecture::Seq2Seq));
  }

  TEST_CASE("entity names with braces are not treated as placeholders") {
    auto p = build_prompt("s1", "t", std::nullopt, empty_context(StructureKind::NN), {"{mask}", "{e1}"},
                          Architecture::MLM, LabelMapping::identity());
    CHECK(p.prompt == "t The pair {mask} and {e1} shows a [MASK] relation.");
  }

  TEST_CASE("mask collisions and empty pairs") {
    auto ctx = empty_context(StructureKind::NN);
    CHECK(code_of([&] {
            build_prompt("s1", "a [MASK] b", std::nullopt, ctx, kPair, Architecture::MLM, LabelMapping::identity());
          }) == ErrorCode::MaskCollision);
    CHECK(code_of([&] {
            build_prompt("s1", kText, std::nullopt, ctx, {"x", "[MASK]"}, Architecture::MLM, LabelMapping::identity());
          }) == ErrorCode::MaskCollision);
    CHECK(code_of([&] {
            build_prompt("s1", kText, std::nullopt, ctx, {"", "y"}, Architecture::MLM, LabelMapping::identity());
          }) == ErrorCode::EmptyPair);
    CHECK(code_of([] { architecture_from_string("GPT"); }) == ErrorCode::UnknownArchitecture);
  }

  TEST_CASE("truncation drops context items before text") {
    auto ctx = neighbor_context();
    auto p = build_prompt("s1", kText, std::nullopt, ctx, kPair, Architecture::MLM, LabelMapping::identity());
    const auto full = count_units(p.prompt, TruncationUnit::whitespace_token);
    CHECK(truncate_prompt(p, {full, TruncationUnit::whitespace_token}).prompt == p.prompt);

    auto t1 = truncate_prompt(p, {full - 1, TruncationUnit::whitespace_token});
    CHECK(t1.truncated);
    CHECK(t1.truncation.dropped_context_items == 1);
    CHECK(t1.truncation.dropped_text_units == 0);
    CHECK(t1.prompt.find("F6F10") == std::string::npos);
    CHECK(t1.prompt.starts_with(kText));

    const auto clause = count_units(p.pair_clause, TruncationUnit::whitespace_token);
    auto t2 = truncate_prompt(p, {clause + 2, TruncationUnit::whitespace_token});
    CHECK(t2.graph_context.empty);
    CHECK(t2.truncation.dropped_context_items == 5);
    CHECK(t2.prompt == "adult male. " + p.pair_clause);
    CHECK(count_units(t2.prompt, TruncationUnit::whitespace_token) <= clause + 2);

    auto t3 = truncate_prompt(p, {clause + 1, TruncationUnit::whitespace_token});
    CHECK(t3.prompt == "male. " + p.pair_clause);
    CHECK(code_of([&] { truncate_prompt(p, {clause, TruncationUnit::whitespace_token}); }) ==
          ErrorCode::BudgetTooSmall);
  }

  TEST_CASE("character budgets count code points") {
    auto p = build_prompt("s1", "caf\xc3\xa9 au lait", std::nullopt, empty_context(StructureKind::NN), {"a", "b"},
                          Architecture::MLM, LabelMapping::identity());
    CHECK(count_units("caf\xc3\xa9", TruncationUnit::character) == 4);
    const auto n = count_units(p.prompt, TruncationUnit::character);
    auto t = truncate_prompt(p, {n - 2, TruncationUnit::character});
    CHECK(t.prompt.starts_with("f\xc3\xa9 au lait "));
    CHECK(t.truncation.dropped_text_units == 2);
  }

  TEST_CASE("prompt records round-trip through JSONL") {
    auto dir = std::filesystem::temp_directory_path() / "kgprompt_prompts_test";
    std::filesystem::create_directories(dir);
    std::vector<PromptInstance> ps;
    ps.push_back(build_prompt("a", kText, CausalLabel::causal, neighbor_context(), kPair, Architecture::MLM,
                              LabelMapping::custom("yes", "no")));
    ps.push_back(build_prompt("b", "\"quoted\" \xe2\x80\x94 text", std::nullopt, empty_context(StructureKind::CNN),
                              {"x", "y"}, Architecture::Seq2Seq, LabelMapping::identity(), "<extra_id_0>"));
    CHECK(export_prompts_jsonl(ps, dir / "p.jsonl") == 2);
    auto back = read_prompts_jsonl(dir / "p.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0] == to_record(ps[0]));
    CHECK(back[1] == to_record(ps[1]));
    CHECK(back[0].mapping() == LabelMapping::custom("yes", "no"));
    CHECK_FALSE(back[1].gold_label.has_value());
    CHECK_THROWS_AS(prompt_record_from_json_line("{\"instance_id\": 1}"), Error);
    std::filesystem::remove_all(dir);
  }
}
