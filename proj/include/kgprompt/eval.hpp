#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kgprompt/backend.hpp"
#include "kgprompt/labels.hpp"

namespace kgprompt {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const Confusion&) const = default;
};

enum class Degenerate { no_positive_predictions, no_positive_golds };

/// Causal is the positive class. Zero denominators give 0 and a flag.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::set<Degenerate> degenerate_flags;
  Confusion confusion;
};

enum class StdMode { population, sample };

struct FoldReport {
  std::vector<Metrics> per_fold;
  Metrics mean;
  double f1_std = 0.0;
  StdMode std_mode = StdMode::population;
};

Confusion count_confusion(const std::vector<PredictionRecord>& preds,
                          const std::map<std::string, CausalLabel>& golds);

Metrics metrics_from_confusion(const Confusion& c);

/// Throws MissingGold / DuplicatePrediction.
Metrics compute_metrics(const std::vector<PredictionRecord>& preds,
                        const std::map<std::string, CausalLabel>& golds);

/// Fold-mean of P, R, F1 and the standard deviation of per-fold F1.
/// Throws EmptyInput.
FoldReport aggregate_folds(const std::vector<Metrics>& folds, StdMode mode = StdMode::population);

/// Alternative aggregation: P/R/F1 over the summed confusion matrices.
Metrics aggregate_pooled(const std::vector<Metrics>& folds);

std::vector<PredictionRecord> read_predictions_jsonl(const std::filesystem::path& path);

std::string metrics_to_json(const Metrics& m, int indent = 2);
std::string report_to_json(const FoldReport& r);
/// Aligned text table: one row per fold, then the mean and F1 std.
std::string report_to_table(const FoldReport& r);

}  // namespace kgprompt
