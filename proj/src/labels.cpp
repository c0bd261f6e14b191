#include "kgprompt/labels.hpp"

#include "kgprompt/error.hpp"

namespace kgprompt {

std::string_view to_string(CausalLabel label) {
  return label == CausalLabel::causal ? "causal" : "non-causal";
}

CausalLabel causal_label_from_string(std::string_view s) {
  if (s == "causal") return CausalLabel::causal;
  if (s == "non-causal") return CausalLabel::non_causal;
  throw Error(ErrorCode::LabelError, "label '" + std::string(s) + "' is neither causal nor non-causal");
}

LabelMapping::LabelMapping(Mode mode, std::string causal, std::string non_causal)
    : mode_(mode), causal_(std::move(causal)), non_causal_(std::move(non_causal)) {}

LabelMapping LabelMapping::identity() {
  return LabelMapping(Mode::identity, "causal", "non-causal");
}

LabelMapping LabelMapping::custom(std::string causal_word, std::string non_causal_word) {
  if (causal_word.empty() || non_causal_word.empty()) {
    throw Error(ErrorCode::InvalidArgument, "label words must be non-empty");
  }
  if (causal_word == non_causal_word) {
    throw Error(ErrorCode::InvalidArgument, "label words must differ, both are '" + causal_word + "'");
  }
  return LabelMapping(Mode::custom, std::move(causal_word), std::move(non_causal_word));
}

const std::string& LabelMapping::word(CausalLabel label) const {
  return label == CausalLabel::causal ? causal_ : non_causal_;
}

CausalLabel LabelMapping::unmap(std::string_view word) const {
  if (word == causal_) return CausalLabel::causal;
  if (word == non_causal_) return CausalLabel::non_causal;
  throw Error(ErrorCode::UnknownLabelWord, "'" + std::string(word) + "' is not a label word");
}

const std::string& map_label(const LabelMapping& mapping, CausalLabel label) {
  return mapping.word(label);
}

const std::string& map_label(const LabelMapping& mapping, std::string_view label) {
  if (label == "causal") return mapping.word(CausalLabel::causal);
  if (label == "non-causal") return mapping.word(CausalLabel::non_causal);
  throw Error(ErrorCode::UnknownLabel, "'" + std::string(label) + "' is not a class label");
}

CausalLabel unmap_label(const LabelMapping& mapping, std::string_view word) {
  return mapping.unmap(word);
}

}  // namespace kgprompt
