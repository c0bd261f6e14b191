#pragma once

#include <string>
#include <string_view>

namespace kgprompt {

enum class CausalLabel { causal, non_causal };

/// "causal" / "non-causal".
std::string_view to_string(CausalLabel label);
/// Throws LabelError for anything outside the two classes.
CausalLabel causal_label_from_string(std::string_view s);

/// Injective map between the two classes and the words a model emits.
class LabelMapping {
 public:
  enum class Mode { identity, custom };

  /// causal -> "causal", non-causal -> "non-causal".
  static LabelMapping identity();
  /// Throws InvalidArgument when the words are empty or equal.
  static LabelMapping custom(std::string causal_word, std::string non_causal_word);

  Mode mode() const { return mode_; }
  const std::string& word(CausalLabel label) const;
  /// Exact match; throws UnknownLabelWord.
  CausalLabel unmap(std::string_view word) const;

  bool operator==(const LabelMapping&) const = default;

 private:
  LabelMapping(Mode mode, std::string causal, std::string non_causal);

  Mode mode_;
  std::string causal_;
  std::string non_causal_;
};

const std::string& map_label(const LabelMapping& mapping, CausalLabel label);
/// String form of the class; throws UnknownLabel outside the two classes.
const std::string& map_label(const LabelMapping& mapping, std::string_view label);
CausalLabel unmap_label(const LabelMapping& mapping, std::string_view word);

}  // namespace kgprompt
