#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kgprompt/labels.hpp"

namespace kgprompt {

/// Half-open code-point range [start, end) into Instance::text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

struct Instance {
  std::string instance_id;
  std::string text;
  Span span1;
  Span span2;
  CausalLabel label = CausalLabel::non_causal;

  std::string e1() const;
  std::string e2() const;
  /// Throws SpanError.
  void validate() const;

  bool operator==(const Instance&) const = default;
};

/// {instance_id, text, e1:{start,end}, e2:{start,end}, label}
std::vector<Instance> load_dataset_jsonl(const std::filesystem::path& path);
std::string to_dataset_jsonl(const std::vector<Instance>& instances);

struct FewShotConfig {
  std::size_t k = 16;
  std::uint64_t seed = 203;
  bool stratified = true;
};

struct FoldPlan {
  std::size_t n_folds = 5;
  std::uint64_t seed = 203;
  bool stratified = false;
  std::map<std::string, std::size_t> assignments;

  bool operator==(const FoldPlan&) const = default;
};

struct FoldSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Seeded shuffle, then round-robin fold assignment. With stratified set,
/// each class is shuffled separately and the round-robin continues across
/// classes, so fold sizes still differ by at most one.
FoldPlan make_fold_plan(const std::vector<Instance>& instances, std::size_t n_folds,
                        std::uint64_t seed, bool stratified = false);

/// Fold i: test = instances assigned to i, train = the rest, both in
/// dataset order. Throws TooFewInstances when |instances| < n_folds.
std::vector<FoldSplit> kfold_split(const std::vector<Instance>& instances, const FoldPlan& plan);

std::string fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const std::string& text);

/// Returns the sampled ids in training order.
std::vector<std::string> sample_few_shot(const std::vector<std::string>& train_ids,
                                         const std::vector<Instance>& instances,
                                         const FewShotConfig& cfg);

}  // namespace kgprompt
