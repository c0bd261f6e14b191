#include "kgprompt/eval.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"

namespace kgprompt {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json metrics_json(const Metrics& m) {
  ordered_json doc;
  doc["precision"] = m.precision;
  doc["recall"] = m.recall;
  doc["f1"] = m.f1;
  doc["degenerate_flags"] = ordered_json::array();
  for (auto f : m.degenerate_flags) {
    doc["degenerate_flags"].push_back(f == Degenerate::no_positive_predictions ? "no_positive_predictions"
                                                                               : "no_positive_golds");
  }
  doc["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}};
  return doc;
}

}  // namespace

Confusion count_confusion(const std::vector<PredictionRecord>& preds,
                          const std::map<std::string, CausalLabel>& golds) {
  Confusion c;
  std::unordered_set<std::string> seen;
  for (const auto& p : preds) {
    auto it = golds.find(p.instance_id);
    if (it == golds.end()) throw Error(ErrorCode::MissingGold, "no gold label for '" + p.instance_id + "'");
    if (!seen.insert(p.instance_id).second) {
      throw Error(ErrorCode::DuplicatePrediction, "two predictions for '" + p.instance_id + "'");
    }
    const bool pred_pos = p.predicted == CausalLabel::causal;
    const bool gold_pos = it->second == CausalLabel::causal;
    if (pred_pos && gold_pos) ++c.tp;
    else if (pred_pos) ++c.fp;
    else if (gold_pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Metrics metrics_from_confusion(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  if (c.tp + c.fp == 0) {
    m.degenerate_flags.insert(Degenerate::no_positive_predictions);
  } else {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    m.degenerate_flags.insert(Degenerate::no_positive_golds);
  } else {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

Metrics compute_metrics(const std::vector<PredictionRecord>& preds,
                        const std::map<std::string, CausalLabel>& golds) {
  return metrics_from_confusion(count_confusion(preds, golds));
}

FoldReport aggregate_folds(const std::vector<Metrics>& folds, StdMode mode) {
  if (folds.empty()) throw Error(ErrorCode::EmptyInput, "no folds to aggregate");
  FoldReport r;
  r.per_fold = folds;
  r.std_mode = mode;
  const double n = static_cast<double>(folds.size());
  for (const auto& m : folds) {
    r.mean.precision += m.precision;
    r.mean.recall += m.recall;
    r.mean.f1 += m.f1;
    r.mean.confusion.tp += m.confusion.tp;
    r.mean.confusion.fp += m.confusion.fp;
    r.mean.confusion.fn += m.confusion.fn;
    r.mean.confusion.tn += m.confusion.tn;
    r.mean.degenerate_flags.insert(m.degenerate_flags.begin(), m.degenerate_flags.end());
  }
  r.mean.precision /= n;
  r.mean.recall /= n;
  r.mean.f1 /= n;
  if (folds.size() > 1) {
    double ss = 0.0;
    for (const auto& m : folds) ss += (m.f1 - r.mean.f1) * (m.f1 - r.mean.f1);
    r.f1_std = std::sqrt(ss / (mode == StdMode::population ? n : n - 1.0));
  }
  return r;
}

Metrics aggregate_pooled(const std::vector<Metrics>& folds) {
  if (folds.empty()) throw Error(ErrorCode::EmptyInput, "no folds to aggregate");
  Confusion total;
  for (const auto& m : folds) {
    total.tp += m.confusion.tp;
    total.fp += m.confusion.fp;
    total.fn += m.confusion.fn;
    total.tn += m.confusion.tn;
  }
  return metrics_from_confusion(total);
}

std::vector<PredictionRecord> read_predictions_jsonl(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;
    try {
      out.push_back(prediction_from_json_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(number) + ": " + e.detail());
    }
  });
  return out;
}

std::string metrics_to_json(const Metrics& m, int indent) { return metrics_json(m).dump(indent) + "\n"; }

std::string report_to_json(const FoldReport& r) {
  ordered_json doc;
  doc["per_fold"] = ordered_json::array();
  for (const auto& m : r.per_fold) doc["per_fold"].push_back(metrics_json(m));
  doc["mean"] = metrics_json(r.mean);
  doc["f1_std"] = r.f1_std;
  doc["std_mode"] = r.std_mode == StdMode::population ? "population" : "sample";
  return doc.dump(2) + "\n";
}

std::string report_to_table(const FoldReport& r) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-8s %9s %9s %9s\n", "fold", "P", "R", "F1");
  out += line;
  for (std::size_t i = 0; i < r.per_fold.size(); ++i) {
    const auto& m = r.per_fold[i];
    std::snprintf(line, sizeof line, "%-8zu %9.4f %9.4f %9.4f\n", i, m.precision, m.recall, m.f1);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-8s %9.4f %9.4f %9.4f\n", "mean", r.mean.precision, r.mean.recall,
                r.mean.f1);
  out += line;
  std::snprintf(line, sizeof line, "%-8s %9s %9s %9.4f\n", "f1_std", "", "", r.f1_std);
  out += line;
  return out;
}

}  // namespace kgprompt
