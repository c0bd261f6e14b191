#include "kgprompt/data.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"

namespace kgprompt {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string span_text(const std::string& text, const Span& s) {
  auto b = utf8_byte_offset(text, s.start);
  auto e = utf8_byte_offset(text, s.end);
  return text.substr(b, e - b);
}

Span read_span(const json& rec, const char* key, const std::string& where) {
  if (!rec.contains(key) || !rec[key].is_object()) {
    throw Error(ErrorCode::SchemaError, where + ": missing object '" + key + "'");
  }
  const auto& s = rec[key];
  for (const char* f : {"start", "end"}) {
    if (!s.contains(f) || !s[f].is_number_unsigned()) {
      throw Error(ErrorCode::SchemaError, where + ": '" + key + "." + f + "' must be a non-negative integer");
    }
  }
  return Span{s["start"].get<std::size_t>(), s["end"].get<std::size_t>()};
}

}  // namespace

std::string Instance::e1() const { return span_text(text, span1); }
std::string Instance::e2() const { return span_text(text, span2); }

void Instance::validate() const {
  const auto len = utf8_length(text);
  for (const auto* s : {&span1, &span2}) {
    if (s->start >= s->end) {
      throw Error(ErrorCode::SpanError, instance_id + ": empty or inverted span [" +
                                            std::to_string(s->start) + ", " + std::to_string(s->end) + ")");
    }
    if (s->end > len) {
      throw Error(ErrorCode::SpanError, instance_id + ": span end " + std::to_string(s->end) +
                                            " beyond text length " + std::to_string(len));
    }
  }
  if (span1.start < span2.end && span2.start < span1.end) {
    throw Error(ErrorCode::SpanError, instance_id + ": spans overlap");
  }
}

std::vector<Instance> load_dataset_jsonl(const std::filesystem::path& path) {
  std::vector<Instance> out;
  std::unordered_set<std::string> ids;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;
    std::string where = path.string() + ":" + std::to_string(number);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, where + " (offset " + std::to_string(e.byte) + "): " + e.what());
    }
    for (const char* f : {"instance_id", "text", "label"}) {
      if (!rec.contains(f) || !rec[f].is_string()) {
        throw Error(ErrorCode::SchemaError, where + ": missing string field '" + f + "'");
      }
    }
    Instance inst;
    inst.instance_id = rec["instance_id"].get<std::string>();
    inst.text = rec["text"].get<std::string>();
    inst.span1 = read_span(rec, "e1", where);
    inst.span2 = read_span(rec, "e2", where);
    try {
      inst.label = causal_label_from_string(rec["label"].get<std::string>());
    } catch (const Error& e) {
      throw Error(ErrorCode::LabelError, where + ": " + e.detail());
    }
    try {
      inst.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::SpanError, where + ": " + e.detail());
    }
    if (!ids.insert(inst.instance_id).second) {
      throw Error(ErrorCode::SchemaError, where + ": duplicate instance_id '" + inst.instance_id + "'");
    }
    out.push_back(std::move(inst));
  });
  return out;
}

std::string to_dataset_jsonl(const std::vector<Instance>& instances) {
  std::string out;
  for (const auto& inst : instances) {
    ordered_json rec;
    rec["instance_id"] = inst.instance_id;
    rec["text"] = inst.text;
    rec["e1"] = {{"start", inst.span1.start}, {"end", inst.span1.end}};
    rec["e2"] = {{"start", inst.span2.start}, {"end", inst.span2.end}};
    rec["label"] = std::string(to_string(inst.label));
    out += rec.dump() + "\n";
  }
  return out;
}

FoldPlan make_fold_plan(const std::vector<Instance>& instances, std::size_t n_folds,
                        std::uint64_t seed, bool stratified) {
  if (n_folds < 2) throw Error(ErrorCode::InvalidArgument, "n_folds must be >= 2");
  if (instances.size() < n_folds) {
    throw Error(ErrorCode::TooFewInstances, std::to_string(instances.size()) +
                                                " instances cannot fill " + std::to_string(n_folds) + " folds");
  }
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.stratified = stratified;

  std::mt19937_64 rng(derive_seed(seed, {"folds"}));
  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    groups.resize(2);
    for (std::size_t i = 0; i < instances.size(); ++i) {
      groups[instances[i].label == CausalLabel::causal ? 0 : 1].push_back(i);
    }
  } else {
    groups.emplace_back(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) groups[0][i] = i;
  }
  std::size_t next = 0;
  for (auto& g : groups) {
    seeded_shuffle(g, rng);
    for (auto i : g) plan.assignments[instances[i].instance_id] = next++ % n_folds;
  }
  return plan;
}

std::vector<FoldSplit> kfold_split(const std::vector<Instance>& instances, const FoldPlan& plan) {
  if (instances.size() < plan.n_folds) {
    throw Error(ErrorCode::TooFewInstances, std::to_string(instances.size()) +
                                                " instances cannot fill " + std::to_string(plan.n_folds) + " folds");
  }
  std::vector<FoldSplit> folds(plan.n_folds);
  for (const auto& inst : instances) {
    auto it = plan.assignments.find(inst.instance_id);
    if (it == plan.assignments.end() || it->second >= plan.n_folds) {
      throw Error(ErrorCode::InvalidArgument, "fold plan has no valid fold for '" + inst.instance_id + "'");
    }
    for (std::size_t f = 0; f < plan.n_folds; ++f) {
      (f == it->second ? folds[f].test : folds[f].train).push_back(inst.instance_id);
    }
  }
  return folds;
}

std::string fold_plan_to_json(const FoldPlan& plan) {
  ordered_json doc;
  doc["seed"] = plan.seed;
  doc["n_folds"] = plan.n_folds;
  doc["stratified"] = plan.stratified;
  doc["assignments"] = ordered_json::object();
  for (const auto& [id, fold] : plan.assignments) doc["assignments"][id] = fold;
  return doc.dump(2) + "\n";
}

FoldPlan fold_plan_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("fold plan: ") + e.what());
  }
  try {
    FoldPlan plan;
    plan.seed = doc.at("seed").get<std::uint64_t>();
    plan.n_folds = doc.at("n_folds").get<std::size_t>();
    plan.stratified = doc.value("stratified", false);
    for (const auto& [id, fold] : doc.at("assignments").items()) {
      plan.assignments[id] = fold.get<std::size_t>();
    }
    return plan;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("fold plan: ") + e.what());
  }
}

std::vector<std::string> sample_few_shot(const std::vector<std::string>& train_ids,
                                         const std::vector<Instance>& instances,
                                         const FewShotConfig& cfg) {
  if (cfg.stratified && cfg.k < 2) {
    throw Error(ErrorCode::InvalidArgument, "stratified sampling needs k >= 2");
  }
  if (train_ids.size() < cfg.k) {
    throw Error(ErrorCode::TooFewInstances, "training pool of " + std::to_string(train_ids.size()) +
                                                " cannot supply k=" + std::to_string(cfg.k));
  }
  std::unordered_map<std::string, const Instance*> by_id;
  for (const auto& inst : instances) by_id.emplace(inst.instance_id, &inst);

  std::vector<std::size_t> picked;
  if (!cfg.stratified) {
    picked = sample_indices(train_ids.size(), cfg.k, derive_seed(cfg.seed, {"few-shot"}));
  } else {
    std::vector<std::size_t> causal, non_causal;
    for (std::size_t i = 0; i < train_ids.size(); ++i) {
      auto it = by_id.find(train_ids[i]);
      if (it == by_id.end()) {
        throw Error(ErrorCode::InvalidArgument, "training id '" + train_ids[i] + "' not in dataset");
      }
      (it->second->label == CausalLabel::causal ? causal : non_causal).push_back(i);
    }
    const std::size_t want_causal = (cfg.k + 1) / 2;
    const std::size_t want_non_causal = cfg.k / 2;
    if (causal.size() < want_causal || non_causal.size() < want_non_causal) {
      throw Error(ErrorCode::ClassExhausted,
                  "need " + std::to_string(want_causal) + " causal and " + std::to_string(want_non_causal) +
                      " non-causal, pool has " + std::to_string(causal.size()) + " and " +
                      std::to_string(non_causal.size()));
    }
    for (auto i : sample_indices(causal.size(), want_causal, derive_seed(cfg.seed, {"few-shot", "causal"}))) {
      picked.push_back(causal[i]);
    }
    for (auto i : sample_indices(non_causal.size(), want_non_causal,
                                 derive_seed(cfg.seed, {"few-shot", "non-causal"}))) {
      picked.push_back(non_causal[i]);
    }
    std::sort(picked.begin(), picked.end());
  }
  std::vector<std::string> out;
  out.reserve(picked.size());
  for (auto i : picked) out.push_back(train_ids[i]);
  return out;
}

}  // namespace kgprompt
