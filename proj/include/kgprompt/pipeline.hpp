#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgprompt/backend.hpp"
#include "kgprompt/data.hpp"
#include "kgprompt/error.hpp"
#include "kgprompt/eval.hpp"
#include "kgprompt/graph.hpp"
#include "kgprompt/prompts.hpp"
#include "kgprompt/remote.hpp"
#include "kgprompt/structure.hpp"
#include "kgprompt/verbalize.hpp"

namespace kgprompt {

/// A failure inside one pipeline stage, tagged with the instance it hit.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string instance_id, const Error& cause);

  const std::string& stage() const { return stage_; }
  const std::string& instance_id() const { return instance_id_; }

 private:
  std::string stage_;
  std::string instance_id_;
};

struct RemoteKgConfig {
  RemoteEndpoint endpoint;
  std::filesystem::path cache_dir;
  CachePolicy cache_policy = CachePolicy::read_write;
};

/// One experiment cell: dataset, graph, structure, prompt form, protocol
/// and backend. Paths are kept as written; `base_dir` resolves them.
struct ExperimentConfig {
  std::filesystem::path base_dir;

  std::filesystem::path dataset;
  std::optional<std::filesystem::path> kg_path;
  std::optional<RemoteKgConfig> kg_remote;
  std::optional<std::filesystem::path> overrides;

  StructureKind structure = StructureKind::NN;
  bool labeled_neighbors = false;
  ExtractionLimits limits;
  TemplateSet templates;

  Architecture architecture = Architecture::MLM;
  LabelMapping label_words = LabelMapping::identity();
  std::string mask_token = "[MASK]";
  std::optional<std::string> pair_clause;
  TruncationPolicy truncation;

  /// Base seed; fold, few-shot, extraction and mock seeds default to it.
  std::uint64_t seed = 203;
  FewShotConfig few_shot;
  std::size_t n_folds = 5;
  std::uint64_t fold_seed = 203;
  bool fold_stratified = false;

  std::optional<HttpEndpoint> backend_http;
  std::optional<std::uint64_t> backend_mock_seed;

  std::filesystem::path output_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  /// Sets the base seed and every seed derived from it.
  void set_seed(std::uint64_t s);
  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Parses the JSON config. Relative paths resolve against `base_dir`.
/// Unknown keys are rejected with ValidationError.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical JSON of everything that shapes the results. The output
/// directory is left out so relocated runs hash the same.
std::string experiment_config_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

enum class LinkMethod { exact, normalized, manual_override, unresolved };

std::string_view to_string(LinkMethod m);

struct EntityLink {
  std::string name;
  std::optional<NodeId> node;
  LinkMethod method = LinkMethod::unresolved;

  bool operator==(const EntityLink&) const = default;
};

struct PairLinkage {
  std::string instance_id;
  EntityLink e1;
  EntityLink e2;

  bool resolved() const { return e1.node && e2.node; }
  bool operator==(const PairLinkage&) const = default;
};

/// Lowercase, punctuation removed, whitespace collapsed.
std::string normalize_name(std::string_view name);

/// Name -> node id table. Throws OverrideConflict when one name maps to
/// two different ids.
struct OverrideTable {
  std::vector<std::pair<std::string, NodeId>> entries;

  const NodeId* find(std::string_view name) const;
};

/// JSON array of {"name": ..., "node_id": ...}.
OverrideTable load_overrides(const std::filesystem::path& path);
OverrideTable parse_overrides(const std::string& text);

/// Exact name match, then normalized match, then the override table. When
/// several nodes share a name the first in graph order wins. Overrides
/// naming a node absent from the graph throw OverrideConflict.
std::vector<PairLinkage> link_pairs(const std::vector<Instance>& instances, const KnowledgeGraph& kg,
                                    const OverrideTable& overrides);
/// Remote variant: the top search hit whose label matches exactly, then
/// one matching after normalization, then the override table.
std::vector<PairLinkage> link_pairs(const std::vector<Instance>& instances, RemoteClient& resolver,
                                    const OverrideTable& overrides);

std::string linkage_to_json(const std::vector<PairLinkage>& links);

struct RunSummary {
  std::filesystem::path run_dir;
  std::size_t instances = 0;
  std::size_t unresolved_pairs = 0;
  std::size_t empty_contexts = 0;
  std::size_t truncated_prompts = 0;
  std::optional<FoldReport> report;
};

struct PreparedInputs {
  std::vector<Instance> instances;
  KnowledgeGraph kg;
  std::vector<PairLinkage> links;
  /// sha256 of the dump file, or of the exported edge list for remote graphs.
  std::string kg_digest;
};

/// Loads the dataset and graph and links every pair. For remote sources
/// the graph is the 1-hop star around each linked entity.
PreparedInputs prepare_inputs(const ExperimentConfig& cfg);

/// Graph contexts for every instance, in dataset order. Unresolved pairs
/// (or pairs linked to one node) get an empty context.
std::vector<GraphContext> build_contexts(const ExperimentConfig& cfg, const KnowledgeGraph& kg,
                                         const std::vector<Instance>& instances,
                                         const std::vector<PairLinkage>& links);

/// Prompts in dataset order, truncated to the configured budget.
std::vector<PromptInstance> build_prompts(const ExperimentConfig& cfg, const std::vector<Instance>& instances,
                                          const std::vector<GraphContext>& contexts);

/// Full pipeline. Writes into cfg.output_dir:
///   fold_plan.json, linkage.json, folds/fold_<i>/{few_shot.jsonl,
///   test_prompts.jsonl, predictions.jsonl, metrics.json}, report.json,
///   report.txt, manifest.json
/// Stage failures are thrown as StageError.
RunSummary run_experiment(const ExperimentConfig& cfg);

}  // namespace kgprompt
