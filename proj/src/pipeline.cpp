#include "kgprompt/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "kgprompt/ingest.hpp"
#include "kgprompt/util.hpp"

namespace kgprompt {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ValidationError, msg); }

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Fields {
 public:
  Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) invalid(where_ + ": expected an object");
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  template <typename T>
  void read(const std::string& key, T& out) {
    const json* v = get(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      invalid(path(key) + ": wrong type (" + v->dump() + ")");
    }
  }

  std::optional<std::string> string(const std::string& key) {
    std::optional<std::string> out;
    if (const json* v = get(key)) {
      if (!v->is_string()) invalid(path(key) + ": expected a string");
      out = v->get<std::string>();
    }
    return out;
  }

  void count(const std::string& key, std::size_t& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_unsigned()) invalid(path(key) + ": expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  bool millis(const std::string& key, std::chrono::milliseconds& out) {
    std::size_t ms = 0;
    if (!obj_.contains(key)) {
      seen_.insert(key);
      return false;
    }
    count(key, ms);
    out = std::chrono::milliseconds(ms);
    return true;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) invalid(path(it.key()) + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto with_code(ErrorCode code, const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(code, where + ": " + e.detail());
  }
}

void parse_limits(Fields f, ExtractionLimits& l, bool& hops_given) {
  f.count("max_neighbors", l.max_neighbors);
  f.count("max_common_neighbors", l.max_common_neighbors);
  f.count("max_metapaths", l.max_metapaths);
  hops_given = f.get("max_hops") != nullptr;
  f.count("max_hops", l.max_hops);
  f.count("path_ceiling", l.path_ceiling);
  if (auto p = f.string("policy")) {
    l.policy = with_code(ErrorCode::ValidationError, f.path("policy"), [&] { return direction_policy_from_string(*p); });
  }
  f.finish();
}

TemplateSet parse_templates(const json& v, const fs::path& base_dir) {
  if (v.is_string()) {
    fs::path p = v.get<std::string>();
    return load_template_set(p.is_absolute() ? p : base_dir / p);
  }
  Fields f(v, "templates");
  TemplateSet t;
  std::pair<const char*, std::string*> fields[] = {
      {"nn_connective", &t.nn_connective},
      {"nn_labeled_pre", &t.nn_labeled_pre},
      {"nn_labeled_post", &t.nn_labeled_post},
      {"nn_labeled_post_repeat", &t.nn_labeled_post_repeat},
      {"cnn_prefix", &t.cnn_prefix},
      {"mp_connective", &t.mp_connective},
      {"mp_path_intro", &t.mp_path_intro},
      {"list_separator", &t.list_separator},
      {"final_conjunction", &t.final_conjunction},
      {"path_separator", &t.path_separator},
      {"sentence_separator", &t.sentence_separator},
  };
  for (auto& [name, target] : fields) {
    if (auto s = f.string(name)) *target = *s;
  }
  f.finish();
  return t;
}

ordered_json templates_json(const TemplateSet& t) {
  return ordered_json{{"nn_connective", t.nn_connective},
                      {"nn_labeled_pre", t.nn_labeled_pre},
                      {"nn_labeled_post", t.nn_labeled_post},
                      {"nn_labeled_post_repeat", t.nn_labeled_post_repeat},
                      {"cnn_prefix", t.cnn_prefix},
                      {"mp_connective", t.mp_connective},
                      {"mp_path_intro", t.mp_path_intro},
                      {"list_separator", t.list_separator},
                      {"final_conjunction", t.final_conjunction},
                      {"path_separator", t.path_separator},
                      {"sentence_separator", t.sentence_separator}};
}

std::uint64_t fold_few_shot_seed(const ExperimentConfig& cfg, std::size_t fold) {
  return derive_seed(cfg.few_shot.seed, {"few-shot", std::to_string(fold)});
}

template <typename Fn>
auto stage(const std::string& name, const std::string& instance_id, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, instance_id, e);
  } catch (const std::exception& e) {
    throw StageError(name, instance_id, Error(ErrorCode::IoError, e.what()));
  }
}

std::string punct_free_lower(std::string_view s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isspace(c) || std::ispunct(c)) {
      // Punctuation joins words ("TNF-alpha" -> "tnfalpha") unless spaced.
      if (std::isspace(c)) space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
  }
  return out;
}

}  // namespace

StageError::StageError(std::string stage, std::string instance_id, const Error& cause)
    : Error(cause.code(), "stage '" + stage + "'" +
                              (instance_id.empty() ? std::string() : " instance '" + instance_id + "'") + ": " +
                              cause.detail()),
      stage_(std::move(stage)),
      instance_id_(std::move(instance_id)) {}

fs::path ExperimentConfig::resolve(const fs::path& p) const {
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  few_shot.seed = s;
  fold_seed = s;
  if (backend_mock_seed) backend_mock_seed = s;
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) invalid("dataset: missing");
  if (!fs::exists(resolve(dataset))) invalid("dataset: no such file " + resolve(dataset).string());
  if (kg_path.has_value() == kg_remote.has_value()) invalid("kg: exactly one of path / remote is required");
  if (kg_path && !fs::exists(resolve(*kg_path))) invalid("kg.path: no such file " + resolve(*kg_path).string());
  if (overrides && !fs::exists(resolve(*overrides))) {
    invalid("overrides: no such file " + resolve(*overrides).string());
  }
  with_code(ErrorCode::ValidationError, "structure.limits", [&] { limits.validate(); });
  if (structure == StructureKind::MP && limits.max_hops < 2) {
    invalid("structure: metapaths need limits.max_hops >= 2 (got " + std::to_string(limits.max_hops) + ")");
  }
  if (kg_remote) {
    if (limits.max_hops > 1) invalid("structure.limits.max_hops: remote graphs provide 1 hop only");
    with_code(ErrorCode::ValidationError, "kg.remote", [&] { kg_remote->endpoint.validate(); });
    if (kg_remote->cache_dir.empty()) invalid("kg.remote.cache_dir: missing");
  }
  with_code(ErrorCode::ValidationError, "templates", [&] { templates.validate(); });
  if (mask_token.empty()) invalid("mask_token: empty");
  if (pair_clause) {
    with_code(ErrorCode::ValidationError, "pair_clause",
              [&] { validate_pair_clause(PairClauseTemplate{*pair_clause}, architecture); });
  }
  if (truncation.max_units == 0) invalid("truncation.max_units: must be positive");
  if (few_shot.k == 0) invalid("few_shot.k: must be positive");
  if (n_folds < 2) invalid("folds.n_folds: must be at least 2");
  if (backend_http && backend_mock_seed) invalid("backend: at most one of http / mock");
  if (backend_http) {
    if (backend_http->base_url.find("://") == std::string::npos) invalid("backend.http.base_url: not a URL");
    if (backend_http->timeout.count() <= 0) invalid("backend.http.timeout_ms: must be positive");
    if (backend_http->max_in_flight == 0) invalid("backend.http.max_in_flight: must be positive");
  }
  if (output_dir.empty()) invalid("output_dir: missing");
}

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(std::string("config is not JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  Fields root(doc, "");

  if (auto s = root.string("dataset")) cfg.dataset = *s;
  if (auto s = root.string("overrides")) cfg.overrides = *s;
  if (auto s = root.string("output_dir")) cfg.output_dir = *s;

  root.read("seed", cfg.seed);
  cfg.few_shot.seed = cfg.seed;
  cfg.fold_seed = cfg.seed;

  bool hops_given = false;
  if (const json* kg = root.get("kg")) {
    Fields f(*kg, "kg");
    if (auto s = f.string("path")) cfg.kg_path = *s;
    if (const json* r = f.get("remote")) {
      Fields rf(*r, "kg.remote");
      RemoteKgConfig rc;
      if (auto s = rf.string("sparql_url")) rc.endpoint.sparql_url = *s;
      if (auto s = rf.string("entity_api_url")) rc.endpoint.entity_api_url = *s;
      // Environment wins over the file.
      rc.endpoint = with_env_overrides(rc.endpoint);
      if (auto s = rf.string("user_agent")) rc.endpoint.user_agent = *s;
      rf.millis("timeout_ms", rc.endpoint.timeout);
      rf.count("max_retries", rc.endpoint.max_retries);
      rf.millis("backoff_ms", rc.endpoint.backoff);
      rf.millis("politeness_delay_ms", rc.endpoint.politeness_delay);
      rf.read("property_allowlist", rc.endpoint.property_allowlist);
      if (auto s = rf.string("cache_dir")) rc.cache_dir = *s;
      if (auto s = rf.string("cache_policy")) {
        rc.cache_policy = with_code(ErrorCode::ValidationError, "kg.remote.cache_policy",
                                    [&] { return cache_policy_from_string(*s); });
      }
      rf.finish();
      cfg.kg_remote = std::move(rc);
    }
    f.finish();
  }

  if (const json* st = root.get("structure")) {
    Fields f(*st, "structure");
    if (auto s = f.string("kind")) {
      cfg.structure = with_code(ErrorCode::ValidationError, "structure.kind", [&] { return structure_kind_from_string(*s); });
    }
    f.read("labeled", cfg.labeled_neighbors);
    if (const json* l = f.get("limits")) parse_limits(Fields(*l, "structure.limits"), cfg.limits, hops_given);
    f.finish();
  }
  if (cfg.kg_remote && !hops_given) cfg.limits.max_hops = ExtractionLimits::remote_defaults().max_hops;

  if (const json* t = root.get("templates")) {
    cfg.templates = with_code(ErrorCode::ValidationError, "templates", [&] { return parse_templates(*t, base_dir); });
  }
  if (auto s = root.string("architecture")) {
    cfg.architecture = with_code(ErrorCode::ValidationError, "architecture", [&] { return architecture_from_string(*s); });
  }
  if (const json* lw = root.get("label_words")) {
    Fields f(*lw, "label_words");
    auto c = f.string("causal");
    auto n = f.string("non_causal");
    f.finish();
    if (!c || !n) invalid("label_words: both causal and non_causal are required");
    cfg.label_words = with_code(ErrorCode::ValidationError, "label_words", [&] { return LabelMapping::custom(*c, *n); });
  }
  if (auto s = root.string("mask_token")) cfg.mask_token = *s;
  cfg.pair_clause = root.string("pair_clause");
  if (const json* tr = root.get("truncation")) {
    Fields f(*tr, "truncation");
    f.count("max_units", cfg.truncation.max_units);
    if (auto u = f.string("unit")) {
      if (*u == "whitespace_token") cfg.truncation.unit = TruncationUnit::whitespace_token;
      else if (*u == "character") cfg.truncation.unit = TruncationUnit::character;
      else invalid("truncation.unit: expected whitespace_token or character");
    }
    f.finish();
  }
  if (const json* fsh = root.get("few_shot")) {
    Fields f(*fsh, "few_shot");
    f.count("k", cfg.few_shot.k);
    f.read("seed", cfg.few_shot.seed);
    f.read("stratified", cfg.few_shot.stratified);
    f.finish();
  }
  if (const json* fo = root.get("folds")) {
    Fields f(*fo, "folds");
    f.count("n_folds", cfg.n_folds);
    f.read("seed", cfg.fold_seed);
    f.read("stratified", cfg.fold_stratified);
    f.finish();
  }
  if (const json* be = root.get("backend")) {
    Fields f(*be, "backend");
    if (const json* m = f.get("mock")) {
      Fields mf(*m, "backend.mock");
      std::uint64_t s = cfg.seed;
      mf.read("seed", s);
      mf.finish();
      cfg.backend_mock_seed = s;
    }
    if (const json* h = f.get("http")) {
      Fields hf(*h, "backend.http");
      HttpEndpoint ep;
      if (auto s = hf.string("base_url")) ep.base_url = *s;
      hf.millis("timeout_ms", ep.timeout);
      hf.count("max_retries", ep.max_retries);
      hf.millis("backoff_ms", ep.backoff);
      hf.count("max_in_flight", ep.max_in_flight);
      hf.finish();
      cfg.backend_http = ep;
    }
    f.finish();
  }
  root.finish();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    invalid("config: " + e.detail());
  }
  auto base = path.parent_path();
  return parse_experiment_config(text, base);
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  ordered_json doc;
  doc["dataset"] = cfg.dataset.generic_string();
  if (cfg.kg_path) {
    doc["kg"] = {{"path", cfg.kg_path->generic_string()}};
  } else if (cfg.kg_remote) {
    const auto& ep = cfg.kg_remote->endpoint;
    doc["kg"]["remote"] = {{"sparql_url", ep.sparql_url},
                           {"entity_api_url", ep.entity_api_url},
                           {"property_allowlist", ep.property_allowlist},
                           {"cache_policy", std::string(to_string(cfg.kg_remote->cache_policy))}};
  }
  doc["overrides"] = cfg.overrides ? ordered_json(cfg.overrides->generic_string()) : ordered_json(nullptr);
  doc["structure"] = {{"kind", std::string(to_string(cfg.structure))},
                      {"labeled", cfg.labeled_neighbors},
                      {"limits",
                       {{"max_neighbors", cfg.limits.max_neighbors},
                        {"max_common_neighbors", cfg.limits.max_common_neighbors},
                        {"max_metapaths", cfg.limits.max_metapaths},
                        {"max_hops", cfg.limits.max_hops},
                        {"path_ceiling", cfg.limits.path_ceiling},
                        {"policy", std::string(to_string(cfg.limits.policy))}}}};
  doc["templates"] = templates_json(cfg.templates);
  doc["architecture"] = std::string(to_string(cfg.architecture));
  doc["label_words"] = {{"causal", cfg.label_words.word(CausalLabel::causal)},
                        {"non_causal", cfg.label_words.word(CausalLabel::non_causal)}};
  doc["mask_token"] = cfg.mask_token;
  doc["pair_clause"] = cfg.pair_clause ? ordered_json(*cfg.pair_clause) : ordered_json(nullptr);
  doc["truncation"] = {{"max_units", cfg.truncation.max_units},
                       {"unit", cfg.truncation.unit == TruncationUnit::character ? "character" : "whitespace_token"}};
  doc["seed"] = cfg.seed;
  doc["few_shot"] = {{"k", cfg.few_shot.k}, {"seed", cfg.few_shot.seed}, {"stratified", cfg.few_shot.stratified}};
  doc["folds"] = {{"n_folds", cfg.n_folds}, {"seed", cfg.fold_seed}, {"stratified", cfg.fold_stratified}};
  if (cfg.backend_mock_seed) {
    doc["backend"] = {{"mock", {{"seed", *cfg.backend_mock_seed}}}};
  } else if (cfg.backend_http) {
    doc["backend"] = {{"http", {{"base_url", cfg.backend_http->base_url}}}};
  } else {
    doc["backend"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(experiment_config_to_json(cfg)); }

std::string_view to_string(LinkMethod m) {
  switch (m) {
    case LinkMethod::exact: return "exact";
    case LinkMethod::normalized: return "normalized";
    case LinkMethod::manual_override: return "manual_override";
    case LinkMethod::unresolved: return "unresolved";
  }
  return "unresolved";
}

std::string normalize_name(std::string_view name) { return punct_free_lower(name); }

const NodeId* OverrideTable::find(std::string_view name) const {
  for (const auto& [n, id] : entries) {
    if (n == name) return &id;
  }
  return nullptr;
}

OverrideTable parse_overrides(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("overrides: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::SchemaError, "overrides: expected an array");
  OverrideTable table;
  for (const auto& row : doc) {
    if (!row.is_object() || !row.contains("name") || !row.contains("node_id") || !row["name"].is_string() ||
        !row["node_id"].is_string()) {
      throw Error(ErrorCode::SchemaError, "overrides: each entry needs string name and node_id");
    }
    auto name = row["name"].get<std::string>();
    NodeId id{row["node_id"].get<std::string>()};
    if (const NodeId* prev = table.find(name)) {
      if (*prev != id) {
        throw Error(ErrorCode::OverrideConflict,
                    "'" + name + "' maps to both '" + prev->value + "' and '" + id.value + "'");
      }
      continue;
    }
    table.entries.emplace_back(std::move(name), std::move(id));
  }
  return table;
}

OverrideTable load_overrides(const fs::path& path) { return parse_overrides(read_file(path)); }

std::vector<PairLinkage> link_pairs(const std::vector<Instance>& instances, const KnowledgeGraph& kg,
                                    const OverrideTable& overrides) {
  for (const auto& [name, id] : overrides.entries) {
    if (!kg.contains(id)) {
      throw Error(ErrorCode::OverrideConflict, "override for '" + name + "' names unknown node '" + id.value + "'");
    }
  }
  std::unordered_map<std::string, NodeIndex> exact, normalized;
  for (NodeIndex i = 0; i < kg.node_count(); ++i) {
    exact.try_emplace(kg.node(i).name, i);
    normalized.try_emplace(normalize_name(kg.node(i).name), i);
  }
  auto link = [&](const std::string& name) {
    EntityLink l{name, std::nullopt, LinkMethod::unresolved};
    if (auto it = exact.find(name); it != exact.end()) {
      l.node = kg.node(it->second).id;
      l.method = LinkMethod::exact;
    } else if (auto jt = normalized.find(normalize_name(name)); jt != normalized.end() && !jt->first.empty()) {
      l.node = kg.node(jt->second).id;
      l.method = LinkMethod::normalized;
    } else if (const NodeId* id = overrides.find(name)) {
      l.node = *id;
      l.method = LinkMethod::manual_override;
    }
    return l;
  };
  std::vector<PairLinkage> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back({inst.instance_id, link(inst.e1()), link(inst.e2())});
  return out;
}

std::vector<PairLinkage> link_pairs(const std::vector<Instance>& instances, RemoteClient& resolver,
                                    const OverrideTable& overrides) {
  for (const auto& [name, id] : overrides.entries) {
    if (!is_remote_entity_id(id.value)) {
      throw Error(ErrorCode::OverrideConflict, "override for '" + name + "' is not an entity id: '" + id.value + "'");
    }
  }
  std::map<std::string, EntityLink> memo;
  auto link = [&](const std::string& name) {
    if (auto it = memo.find(name); it != memo.end()) return it->second;
    EntityLink l{name, std::nullopt, LinkMethod::unresolved};
    auto hits = resolver.resolve_entity(name);
    auto norm = normalize_name(name);
    for (const auto& h : hits) {
      if (h.label == name) {
        l.node = h.id;
        l.method = LinkMethod::exact;
        break;
      }
    }
    if (!l.node) {
      for (const auto& h : hits) {
        if (normalize_name(h.label) == norm) {
          l.node = h.id;
          l.method = LinkMethod::normalized;
          break;
        }
      }
    }
    if (!l.node) {
      if (const NodeId* id = overrides.find(name)) {
        l.node = *id;
        l.method = LinkMethod::manual_override;
      }
    }
    memo.emplace(name, l);
    return l;
  };
  std::vector<PairLinkage> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    out.push_back(stage("link", inst.instance_id, [&] {
      return PairLinkage{inst.instance_id, link(inst.e1()), link(inst.e2())};
    }));
  }
  return out;
}

std::string linkage_to_json(const std::vector<PairLinkage>& links) {
  ordered_json doc;
  std::size_t unresolved = 0;
  std::map<std::string, std::size_t> methods;
  doc["pairs"] = ordered_json::array();
  for (const auto& p : links) {
    auto side = [&](const EntityLink& l) {
      ++methods[std::string(to_string(l.method))];
      return ordered_json{{"name", l.name},
                          {"node_id", l.node ? ordered_json(l.node->value) : ordered_json(nullptr)},
                          {"method", std::string(to_string(l.method))}};
    };
    if (!p.resolved()) ++unresolved;
    doc["pairs"].push_back({{"instance_id", p.instance_id}, {"e1", side(p.e1)}, {"e2", side(p.e2)}});
  }
  doc["unresolved_pairs"] = unresolved;
  doc["methods"] = methods;
  return doc.dump(2) + "\n";
}

std::vector<GraphContext> build_contexts(const ExperimentConfig& cfg, const KnowledgeGraph& kg,
                                         const std::vector<Instance>& instances,
                                         const std::vector<PairLinkage>& links) {
  // Each instance asks for one or two bundles; requests are flattened for
  // the batch kernel and stitched back afterwards.
  std::vector<PairRequest> requests;
  std::vector<std::pair<std::size_t, std::size_t>> span(instances.size(), {0, 0});
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& l = links.at(i);
    span[i].first = requests.size();
    if (l.resolved()) {
      const NodeId& x = *l.e1.node;
      const NodeId& y = *l.e2.node;
      if (cfg.structure == StructureKind::NN) {
        requests.push_back({x, std::nullopt});
        if (y != x) requests.push_back({y, std::nullopt});
      } else if (x != y) {
        requests.push_back({x, y});
      }
    }
    span[i].second = requests.size();
  }

  std::vector<StructureBundle> bundles;
  try {
    bundles = extract_batch(kg, cfg.structure, requests, cfg.limits, cfg.seed);
  } catch (const Error&) {
    // Attribute the failure to an instance by replaying serially.
    for (std::size_t i = 0; i < instances.size(); ++i) {
      stage("extract", instances[i].instance_id, [&] {
        std::span<const PairRequest> mine(requests.data() + span[i].first, span[i].second - span[i].first);
        return extract_batch(kg, cfg.structure, mine, cfg.limits, cfg.seed, Execution::serial);
      });
    }
    throw;
  }

  std::vector<GraphContext> out;
  out.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    out.push_back(stage("verbalize", instances[i].instance_id, [&] {
      GraphContext ctx = empty_context(cfg.structure);
      for (std::size_t r = span[i].first; r < span[i].second; ++r) {
        auto part = verbalize(bundles[r], cfg.templates, cfg.labeled_neighbors);
        ctx = r == span[i].first ? part : merge_neighbor_contexts(ctx, part);
      }
      return ctx;
    }));
  }
  return out;
}

PreparedInputs prepare_inputs(const ExperimentConfig& cfg) {
  PreparedInputs in;
  in.instances = stage("load-dataset", "", [&] { return load_dataset_jsonl(cfg.resolve(cfg.dataset)); });
  OverrideTable overrides;
  if (cfg.overrides) overrides = stage("load-overrides", "", [&] { return load_overrides(cfg.resolve(*cfg.overrides)); });
  if (cfg.kg_path) {
    auto path = cfg.resolve(*cfg.kg_path);
    in.kg = stage("ingest", "", [&] { return load_graph(path).graph; });
    in.kg_digest = stage("ingest", "", [&] { return sha256_hex(read_file(path)); });
    in.links = stage("link", "", [&] { return link_pairs(in.instances, in.kg, overrides); });
    return in;
  }
  const auto& rc = *cfg.kg_remote;
  RemoteClient client(rc.endpoint, QueryCache(cfg.resolve(rc.cache_dir), rc.cache_policy));
  in.links = stage("link", "", [&] { return link_pairs(in.instances, client, overrides); });
  std::vector<NodeId> seeds;
  for (const auto& l : in.links) {
    if (!l.resolved()) continue;
    seeds.push_back(*l.e1.node);
    seeds.push_back(*l.e2.node);
  }
  in.kg = stage("ingest", "", [&] { return build_remote_subgraph(client, seeds); });
  in.kg_digest = sha256_hex(to_edge_list_jsonl(in.kg));
  return in;
}

std::vector<PromptInstance> build_prompts(const ExperimentConfig& cfg, const std::vector<Instance>& instances,
                                          const std::vector<GraphContext>& contexts) {
  std::optional<PairClauseTemplate> clause;
  if (cfg.pair_clause) clause = PairClauseTemplate{*cfg.pair_clause};
  std::vector<PromptInstance> out;
  out.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    out.push_back(stage("build-prompts", instances[i].instance_id, [&] {
      auto p = build_prompt(instances[i], contexts.at(i), cfg.architecture, cfg.label_words, cfg.mask_token, clause);
      return truncate_prompt(p, cfg.truncation);
    }));
  }
  return out;
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  stage("validate", "", [&] { cfg.validate(); });
  const fs::path out_dir = cfg.resolve(cfg.output_dir);
  RunSummary summary;
  summary.run_dir = out_dir;

  std::map<std::string, std::string> files;  // relative path -> contents
  auto emit = [&](const std::string& rel, std::string contents) {
    stage("write", "", [&] { write_file_atomic(out_dir / rel, contents); });
    files[rel] = sha256_hex(contents);
  };

  auto inputs = prepare_inputs(cfg);
  const auto& instances = inputs.instances;
  const auto& kg = inputs.kg;
  const auto& links = inputs.links;
  summary.instances = instances.size();
  for (const auto& l : links) summary.unresolved_pairs += l.resolved() ? 0 : 1;
  emit("linkage.json", linkage_to_json(links));

  auto contexts = build_contexts(cfg, kg, instances, links);
  auto built = build_prompts(cfg, instances, contexts);
  std::map<std::string, PromptInstance> prompts;
  std::map<std::string, CausalLabel> golds;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (contexts[i].empty) ++summary.empty_contexts;
    if (built[i].truncated) ++summary.truncated_prompts;
    golds[instances[i].instance_id] = instances[i].label;
    prompts.emplace(instances[i].instance_id, std::move(built[i]));
  }

  auto plan = stage("split", "", [&] {
    return make_fold_plan(instances, cfg.n_folds, cfg.fold_seed, cfg.fold_stratified);
  });
  emit("fold_plan.json", fold_plan_to_json(plan));
  auto splits = stage("split", "", [&] { return kfold_split(instances, plan); });

  auto lines = [&](const std::vector<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) s += prompt_record_to_json_line(to_record(prompts.at(id))) + "\n";
    return s;
  };

  const bool predicting = cfg.backend_mock_seed || cfg.backend_http;
  std::vector<Metrics> fold_metrics;
  ordered_json fold_seeds = ordered_json::array();
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const std::string dir = "folds/fold_" + std::to_string(f) + "/";
    FewShotConfig fs_cfg = cfg.few_shot;
    fs_cfg.seed = fold_few_shot_seed(cfg, f);
    fold_seeds.push_back(fs_cfg.seed);
    auto shots = stage("sample", "fold_" + std::to_string(f), [&] {
      return sample_few_shot(splits[f].train, instances, fs_cfg);
    });
    emit(dir + "few_shot.jsonl", lines(shots));
    emit(dir + "test_prompts.jsonl", lines(splits[f].test));
    if (!predicting) continue;

    std::vector<InferenceRequest> requests;
    for (const auto& id : splits[f].test) requests.push_back(make_request(to_record(prompts.at(id))));
    std::vector<PredictionRecord> preds;
    if (cfg.backend_mock_seed) {
      for (const auto& r : requests) {
        preds.push_back(stage("predict", r.request_id, [&] { return predict_mock(r, cfg.label_words, *cfg.backend_mock_seed); }));
      }
    } else {
      try {
        preds = predict_batch_http(*cfg.backend_http, requests, cfg.label_words);
      } catch (const Error& e) {
        std::string failed;
        for (const auto& r : requests) {
          if (e.detail().find("'" + r.request_id + "'") != std::string::npos) {
            failed = r.request_id;
            break;
          }
        }
        throw StageError("predict", failed, e);
      }
    }
    std::string pred_text;
    for (const auto& p : preds) pred_text += prediction_to_json_line(p) + "\n";
    emit(dir + "predictions.jsonl", pred_text);
    auto m = stage("eval", "fold_" + std::to_string(f), [&] { return compute_metrics(preds, golds); });
    emit(dir + "metrics.json", metrics_to_json(m));
    fold_metrics.push_back(std::move(m));
  }

  if (predicting) {
    auto report = stage("eval", "", [&] { return aggregate_folds(fold_metrics); });
    emit("report.json", report_to_json(report));
    emit("report.txt", report_to_table(report));
    summary.report = std::move(report);
  }

  ordered_json manifest;
  manifest["config_hash"] = config_hash(cfg);
  manifest["config"] = ordered_json::parse(experiment_config_to_json(cfg));
  manifest["seeds"] = {{"seed", cfg.seed},
                       {"fold_plan", cfg.fold_seed},
                       {"few_shot_per_fold", fold_seeds},
                       {"extraction", cfg.seed},
                       {"mock_backend", cfg.backend_mock_seed ? ordered_json(*cfg.backend_mock_seed) : ordered_json(nullptr)}};
  manifest["inputs"] = {{"dataset_sha256", sha256_hex(read_file(cfg.resolve(cfg.dataset)))},
                        {"kg_sha256", inputs.kg_digest},
                        {"kg_nodes", kg.node_count()},
                        {"kg_edges", kg.edge_count()}};
  manifest["counts"] = {{"instances", summary.instances},
                        {"unresolved_pairs", summary.unresolved_pairs},
                        {"empty_contexts", summary.empty_contexts},
                        {"truncated_prompts", summary.truncated_prompts}};
  manifest["files"] = files;
  emit("manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace kgprompt
