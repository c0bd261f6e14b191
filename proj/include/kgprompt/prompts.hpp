#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgprompt/data.hpp"
#include "kgprompt/labels.hpp"
#include "kgprompt/verbalize.hpp"

namespace kgprompt {

/// MLM takes the cloze form; CLM and Seq2Seq take the generative form.
enum class Architecture { MLM, CLM, Seq2Seq };

std::string_view to_string(Architecture arch);
/// Throws UnknownArchitecture.
Architecture architecture_from_string(std::string_view s);
bool is_generative(Architecture arch);

/// The sentence that follows the textual and graph contexts. Placeholders:
/// {e1}, {e2}, {mask}. {mask} must occur exactly once; generative clauses
/// must end at it (optionally followed by ".").
struct PairClauseTemplate {
  std::string text;

  static PairClauseTemplate defaults_for(Architecture arch);
};

/// Throws InvalidArgument when the clause breaks the rules above.
void validate_pair_clause(const PairClauseTemplate& clause, Architecture arch);

enum class TruncationUnit { whitespace_token, character };

struct TruncationPolicy {
  std::size_t max_units = 256;
  TruncationUnit unit = TruncationUnit::whitespace_token;
};

struct TruncationInfo {
  std::size_t dropped_context_items = 0;
  std::size_t dropped_text_units = 0;
};

struct PromptInstance {
  std::string instance_id;
  Architecture architecture = Architecture::MLM;
  std::string text;
  GraphContext graph_context;
  std::pair<std::string, std::string> pair;
  std::string prompt;
  std::string mask_token = "[MASK]";
  std::optional<CausalLabel> gold_label;
  LabelMapping label_words = LabelMapping::identity();
  /// Rendered pair clause; always the tail of `prompt`.
  std::string pair_clause;
  bool truncated = false;
  TruncationInfo truncation;
};

/// x' = [x] [C] <pair clause>. The graph-context slot and its separating
/// space vanish when the context is empty-flagged.
PromptInstance build_prompt(std::string instance_id, std::string text,
                            std::optional<CausalLabel> gold, const GraphContext& graph_context,
                            const std::pair<std::string, std::string>& pair, Architecture arch,
                            const LabelMapping& mapping, const std::string& mask_token = "[MASK]",
                            const std::optional<PairClauseTemplate>& clause = std::nullopt);

/// Convenience overload: text, gold label and pair names come from the instance.
PromptInstance build_prompt(const Instance& instance, const GraphContext& graph_context,
                            Architecture arch, const LabelMapping& mapping,
                            const std::string& mask_token = "[MASK]",
                            const std::optional<PairClauseTemplate>& clause = std::nullopt);

std::size_t count_units(std::string_view text, TruncationUnit unit);

/// Drops graph-context items from the end, then leading units of the
/// textual context, until the prompt fits. Throws BudgetTooSmall when the
/// pair clause alone does not fit.
PromptInstance truncate_prompt(const PromptInstance& p, const TruncationPolicy& policy);

/// The exported view of a prompt (one JSONL line).
struct PromptRecord {
  std::string instance_id;
  Architecture architecture = Architecture::MLM;
  std::string prompt;
  std::string mask_token;
  std::pair<std::string, std::string> pair;
  std::string causal_word;
  std::string non_causal_word;
  std::optional<CausalLabel> gold_label;
  bool truncated = false;

  LabelMapping mapping() const;
  bool operator==(const PromptRecord&) const = default;
};

PromptRecord to_record(const PromptInstance& p);

std::string prompt_record_to_json_line(const PromptRecord& r);
PromptRecord prompt_record_from_json_line(std::string_view line);

std::size_t export_prompts_jsonl(const std::vector<PromptInstance>& instances,
                                 const std::filesystem::path& path);
std::vector<PromptRecord> read_prompts_jsonl(const std::filesystem::path& path);

}  // namespace kgprompt
