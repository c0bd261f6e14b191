#include "kgprompt/prompts.hpp"

#include <nlohmann/json.hpp>

#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"

namespace kgprompt {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kMaskSlot = "{mask}";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string assemble(const std::string& text, const GraphContext& ctx, const std::string& clause) {
  std::string out;
  for (const auto* part : {&text, &ctx.text, &clause}) {
    if (part->empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += *part;
  }
  return out;
}

// Byte offsets at which each droppable leading unit of `text` begins.
std::vector<std::size_t> unit_starts(std::string_view text, TruncationUnit unit) {
  std::vector<std::size_t> starts;
  if (unit == TruncationUnit::whitespace_token) {
    for (auto tok : split_whitespace(text)) starts.push_back(static_cast<std::size_t>(tok.data() - text.data()));
  } else {
    for (std::size_t i = 0; i < text.size(); ++i) {
      if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) starts.push_back(i);
    }
  }
  return starts;
}

}  // namespace

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::MLM: return "MLM";
    case Architecture::CLM: return "CLM";
    case Architecture::Seq2Seq: return "Seq2Seq";
  }
  return "MLM";
}

Architecture architecture_from_string(std::string_view s) {
  if (s == "MLM") return Architecture::MLM;
  if (s == "CLM") return Architecture::CLM;
  if (s == "Seq2Seq") return Architecture::Seq2Seq;
  throw Error(ErrorCode::UnknownArchitecture, "'" + std::string(s) + "' (expected MLM, CLM or Seq2Seq)");
}

bool is_generative(Architecture arch) { return arch != Architecture::MLM; }

void validate_pair_clause(const PairClauseTemplate& clause, Architecture arch) {
  if (count_occurrences(clause.text, kMaskSlot) != 1) {
    throw Error(ErrorCode::InvalidArgument, "pair clause must contain {mask} exactly once: '" + clause.text + "'");
  }
  if (is_generative(arch)) {
    auto tail = std::string_view(clause.text).substr(clause.text.find(kMaskSlot) + kMaskSlot.size());
    if (!tail.empty() && tail != ".") {
      throw Error(ErrorCode::InvalidArgument,
                  "generative pair clause must end at the generation slot: '" + clause.text + "'");
    }
  }
}

PairClauseTemplate PairClauseTemplate::defaults_for(Architecture arch) {
  if (is_generative(arch)) return {"The pair {e1} and {e2} shows a causal relation: {mask}."};
  return {"The pair {e1} and {e2} shows a {mask} relation."};
}

PromptInstance build_prompt(std::string instance_id, std::string text,
                            std::optional<CausalLabel> gold, const GraphContext& graph_context,
                            const std::pair<std::string, std::string>& pair, Architecture arch,
                            const LabelMapping& mapping, const std::string& mask_token,
                            const std::optional<PairClauseTemplate>& clause) {
  if (pair.first.empty() || pair.second.empty()) {
    throw Error(ErrorCode::EmptyPair, "instance '" + instance_id + "' has an empty pair name");
  }
  if (mask_token.empty()) throw Error(ErrorCode::InvalidArgument, "mask token is empty");
  auto tmpl = clause.value_or(PairClauseTemplate::defaults_for(arch));
  validate_pair_clause(tmpl, arch);

  for (const std::string* part :
       std::initializer_list<const std::string*>{&text, &graph_context.text, &pair.first, &pair.second}) {
    if (part->find(mask_token) != std::string::npos) {
      throw Error(ErrorCode::MaskCollision,
                  "instance '" + instance_id + "' already contains the mask token '" + mask_token + "'");
    }
  }

  // Substitute the mask last so entity names cannot introduce placeholders.
  std::string rendered = tmpl.text;
  replace_all(rendered, kMaskSlot, "\x1f");
  replace_all(rendered, "{e1}", pair.first);
  replace_all(rendered, "{e2}", pair.second);
  replace_all(rendered, "\x1f", mask_token);

  PromptInstance p;
  p.instance_id = std::move(instance_id);
  p.architecture = arch;
  p.text = std::move(text);
  p.graph_context = graph_context;
  p.pair = pair;
  p.mask_token = mask_token;
  p.gold_label = gold;
  p.label_words = mapping;
  p.pair_clause = std::move(rendered);
  p.prompt = assemble(p.text, p.graph_context, p.pair_clause);
  return p;
}

PromptInstance build_prompt(const Instance& instance, const GraphContext& graph_context,
                            Architecture arch, const LabelMapping& mapping,
                            const std::string& mask_token,
                            const std::optional<PairClauseTemplate>& clause) {
  return build_prompt(instance.instance_id, instance.text, instance.label, graph_context,
                      {instance.e1(), instance.e2()}, arch, mapping, mask_token, clause);
}

std::size_t count_units(std::string_view text, TruncationUnit unit) {
  return unit == TruncationUnit::whitespace_token ? split_whitespace(text).size() : utf8_length(text);
}

PromptInstance truncate_prompt(const PromptInstance& p, const TruncationPolicy& policy) {
  if (count_units(p.pair_clause, policy.unit) >= policy.max_units) {
    throw Error(ErrorCode::BudgetTooSmall,
                "budget of " + std::to_string(policy.max_units) + " cannot hold the pair clause of '" +
                    p.instance_id + "'");
  }
  auto fits = [&](const std::string& prompt) { return count_units(prompt, policy.unit) <= policy.max_units; };
  if (fits(p.prompt)) return p;

  PromptInstance out = p;
  out.truncated = true;
  while (!fits(out.prompt) && !out.graph_context.empty) {
    out.graph_context = out.graph_context.without_last_item();
    ++out.truncation.dropped_context_items;
    out.prompt = assemble(out.text, out.graph_context, out.pair_clause);
  }
  if (fits(out.prompt)) return out;

  const auto starts = unit_starts(out.text, policy.unit);
  const std::string original = out.text;
  for (std::size_t k = 1; k <= starts.size(); ++k) {
    out.text = k == starts.size() ? std::string() : original.substr(starts[k]);
    out.prompt = assemble(out.text, out.graph_context, out.pair_clause);
    out.truncation.dropped_text_units = k;
    if (fits(out.prompt)) break;
  }
  return out;
}

LabelMapping PromptRecord::mapping() const {
  auto identity = LabelMapping::identity();
  if (causal_word == identity.word(CausalLabel::causal) &&
      non_causal_word == identity.word(CausalLabel::non_causal)) {
    return identity;
  }
  return LabelMapping::custom(causal_word, non_causal_word);
}

PromptRecord to_record(const PromptInstance& p) {
  PromptRecord r;
  r.instance_id = p.instance_id;
  r.architecture = p.architecture;
  r.prompt = p.prompt;
  r.mask_token = p.mask_token;
  r.pair = p.pair;
  r.causal_word = p.label_words.word(CausalLabel::causal);
  r.non_causal_word = p.label_words.word(CausalLabel::non_causal);
  r.gold_label = p.gold_label;
  r.truncated = p.truncated;
  return r;
}

std::string prompt_record_to_json_line(const PromptRecord& r) {
  ordered_json rec;
  rec["instance_id"] = r.instance_id;
  rec["architecture"] = std::string(to_string(r.architecture));
  rec["prompt"] = r.prompt;
  rec["mask_token"] = r.mask_token;
  rec["pair"] = {r.pair.first, r.pair.second};
  rec["label_words"] = {{"causal", r.causal_word}, {"non_causal", r.non_causal_word}};
  if (r.gold_label) rec["gold_label"] = std::string(to_string(*r.gold_label));
  rec["truncated"] = r.truncated;
  return rec.dump();
}

PromptRecord prompt_record_from_json_line(std::string_view line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    PromptRecord r;
    r.instance_id = rec.at("instance_id").get<std::string>();
    r.architecture = architecture_from_string(rec.at("architecture").get<std::string>());
    r.prompt = rec.at("prompt").get<std::string>();
    r.mask_token = rec.at("mask_token").get<std::string>();
    const auto& pair = rec.at("pair");
    if (!pair.is_array() || pair.size() != 2) throw Error(ErrorCode::SchemaError, "'pair' must have two names");
    r.pair = {pair[0].get<std::string>(), pair[1].get<std::string>()};
    r.causal_word = rec.at("label_words").at("causal").get<std::string>();
    r.non_causal_word = rec.at("label_words").at("non_causal").get<std::string>();
    if (rec.contains("gold_label")) r.gold_label = causal_label_from_string(rec["gold_label"].get<std::string>());
    r.truncated = rec.at("truncated").get<bool>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("prompt record: ") + e.what());
  }
}

std::size_t export_prompts_jsonl(const std::vector<PromptInstance>& instances,
                                 const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : instances) out += prompt_record_to_json_line(to_record(p)) + "\n";
  write_file_atomic(path, out);
  return instances.size();
}

std::vector<PromptRecord> read_prompts_jsonl(const std::filesystem::path& path) {
  std::vector<PromptRecord> out;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;
    try {
      out.push_back(prompt_record_from_json_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(number) + ": " + e.detail());
    }
  });
  return out;
}

}  // namespace kgprompt
