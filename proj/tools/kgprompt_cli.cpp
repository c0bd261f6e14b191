#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kgprompt/backend.hpp"
#include "kgprompt/data.hpp"
#include "kgprompt/error.hpp"
#include "kgprompt/eval.hpp"
#include "kgprompt/ingest.hpp"
#include "kgprompt/pipeline.hpp"
#include "kgprompt/structure.hpp"
#include "kgprompt/util.hpp"
#include "kgprompt/verbalize.hpp"

namespace fs = std::filesystem;
using namespace kgprompt;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string cache;
  bool offline = false;
};

ExperimentConfig load_config(const Globals& g) {
  if (g.config.empty()) throw Error(ErrorCode::ValidationError, "--config is required for this command");
  auto cfg = load_experiment_config(g.config);
  if (g.seed) cfg.set_seed(*g.seed);
  if (!g.out.empty()) cfg.output_dir = fs::absolute(g.out);
  if (cfg.kg_remote) {
    if (!g.cache.empty()) cfg.kg_remote->cache_dir = fs::absolute(g.cache);
    if (g.offline) cfg.kg_remote->cache_policy = CachePolicy::read_only;
  }
  cfg.validate();
  return cfg;
}

// Writes to --out when given, else stdout.
void deliver(const Globals& g, const std::string& default_name, const std::string& text) {
  if (g.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  fs::path p = g.out;
  if (fs::is_directory(p)) p /= default_name;
  write_file_atomic(p, text);
  std::fprintf(stderr, "wrote %s\n", p.string().c_str());
}

ordered_json node_json(const Node& n) { return {{"id", n.id.value}, {"name", n.name}, {"type", n.node_type}}; }

ordered_json labels_json(const std::vector<LabeledDirection>& ls) {
  ordered_json out = ordered_json::array();
  for (const auto& l : ls) out.push_back({{"label", l.label.value}, {"direction", std::string(to_string(l.direction))}});
  return out;
}

ordered_json bundle_json(const StructureBundle& b) {
  ordered_json doc;
  doc["kind"] = std::string(to_string(b.kind));
  doc["source"] = node_json(b.source);
  doc["target"] = b.target ? node_json(*b.target) : ordered_json(nullptr);
  doc["total_candidates"] = b.total_candidates;
  doc["truncated"] = b.truncated;
  doc["selection_seed"] = b.selection_seed;
  ordered_json payload = ordered_json::array();
  for (const auto& n : b.neighbors) {
    auto e = node_json(n.node);
    e["labels"] = labels_json(n.labels);
    payload.push_back(e);
  }
  for (const auto& n : b.common) payload.push_back(node_json(n));
  for (const auto& mp : b.metapaths) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : mp.nodes) nodes.push_back(node_json(n));
    payload.push_back({{"nodes", nodes}, {"edges", labels_json(mp.edges)}, {"node_types", mp.node_types()}});
  }
  doc["payload"] = payload;
  return doc;
}

struct ExtractArgs {
  std::string kg;
  std::string kind = "NN";
  std::string x;
  std::string y;
  ExtractionLimits limits;
  std::string policy = "undirected";
  bool labeled = false;
  std::string templates;
};

void add_extract_options(CLI::App* cmd, ExtractArgs& a) {
  cmd->add_option("--kg", a.kg, "graph file (.jsonl edge list or Hetionet JSON)")->required();
  cmd->add_option("--kind", a.kind, "NN, CNN or MP")->check(CLI::IsMember({"NN", "CNN", "MP"}));
  cmd->add_option("-x,--source", a.x, "source node id")->required();
  cmd->add_option("-y,--target", a.y, "target node id (CNN, MP)");
  cmd->add_option("--max-neighbors", a.limits.max_neighbors);
  cmd->add_option("--max-common-neighbors", a.limits.max_common_neighbors);
  cmd->add_option("--max-metapaths", a.limits.max_metapaths);
  cmd->add_option("--max-hops", a.limits.max_hops);
  cmd->add_option("--path-ceiling", a.limits.path_ceiling);
  cmd->add_option("--policy", a.policy)->check(CLI::IsMember({"undirected", "out_only", "in_only"}));
}

StructureBundle run_extract(ExtractArgs& a, std::uint64_t seed) {
  a.limits.policy = direction_policy_from_string(a.policy);
  auto kg = load_graph(a.kg).graph;
  auto kind = structure_kind_from_string(a.kind);
  if (kind != StructureKind::NN && a.y.empty()) {
    throw Error(ErrorCode::ValidationError, "--target is required for " + a.kind);
  }
  if (kind == StructureKind::MP && a.limits.max_hops < 2) {
    throw Error(ErrorCode::ValidationError, "metapaths need --max-hops >= 2");
  }
  a.limits.validate();
  switch (kind) {
    case StructureKind::NN: return extract_neighbors(kg, NodeId{a.x}, a.limits, seed);
    case StructureKind::CNN: return extract_common_neighbors(kg, NodeId{a.x}, NodeId{a.y}, a.limits, seed);
    case StructureKind::MP: return enumerate_metapaths(kg, NodeId{a.x}, NodeId{a.y}, a.limits, seed);
  }
  throw Error(ErrorCode::InvalidArgument, "unreachable");
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownArchitecture:
      return kExitValidation;
    default:
      return kExitStage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph structure as prompt context for causal pair classification"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_option("--seed", g.seed, "overrides every seed in the config");
  app.add_option("--out", g.out, "output file or directory");
  app.add_option("--cache", g.cache, "remote query cache directory");
  app.add_flag("--offline", g.offline, "serve remote queries from the cache only");
  app.fallthrough();

  int status = 0;

  auto* ingest = app.add_subcommand("ingest", "load a graph and report counts; optionally export an edge list");
  std::string ingest_path, ingest_export;
  ingest->add_option("graph", ingest_path, "Hetionet JSON or .jsonl edge list")->required();
  ingest->add_option("--export", ingest_export, "write the graph as a .jsonl edge list");
  ingest->callback([&] {
    auto loaded = load_graph(ingest_path);
    ordered_json doc{{"nodes_loaded", loaded.report.nodes_loaded},
                     {"edges_loaded", loaded.report.edges_loaded},
                     {"directed_edges", loaded.report.directed_edges},
                     {"duplicates_rejected", loaded.report.duplicates_rejected},
                     {"warnings", loaded.report.warnings}};
    if (!ingest_export.empty()) export_edge_list_jsonl(loaded.graph, ingest_export);
    deliver(g, "ingest_report.json", doc.dump(2) + "\n");
  });

  auto* link = app.add_subcommand("link", "link dataset pairs to graph nodes");
  link->callback([&] {
    auto cfg = load_config(g);
    auto in = prepare_inputs(cfg);
    deliver(g, "linkage.json", linkage_to_json(in.links));
  });

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "extract one structure bundle as JSON");
  add_extract_options(extract, ex);
  extract->callback([&] { deliver(g, "bundle.json", bundle_json(run_extract(ex, g.seed.value_or(203))).dump(2) + "\n"); });

  ExtractArgs vb;
  auto* verb = app.add_subcommand("verbalize", "extract and render a graph context");
  add_extract_options(verb, vb);
  verb->add_flag("--labeled", vb.labeled, "name relation labels (neighbor contexts)");
  verb->add_option("--templates", vb.templates, "template set JSON");
  verb->callback([&] {
    auto bundle = run_extract(vb, g.seed.value_or(203));
    TemplateSet t = vb.templates.empty() ? TemplateSet{} : load_template_set(vb.templates);
    deliver(g, "context.txt", verbalize(bundle, t, vb.labeled).text + "\n");
  });

  auto* prompts = app.add_subcommand("build-prompts", "build one prompt per dataset instance");
  prompts->callback([&] {
    auto cfg = load_config(g);
    auto in = prepare_inputs(cfg);
    auto contexts = build_contexts(cfg, in.kg, in.instances, in.links);
    auto built = build_prompts(cfg, in.instances, contexts);
    std::string text;
    for (const auto& p : built) text += prompt_record_to_json_line(to_record(p)) + "\n";
    deliver(g, "prompts.jsonl", text);
  });

  auto* split = app.add_subcommand("split", "assign instances to folds");
  std::string split_dataset;
  std::size_t split_folds = 5;
  bool split_stratified = false;
  split->add_option("--dataset", split_dataset)->required();
  split->add_option("--folds", split_folds);
  split->add_flag("--stratified", split_stratified);
  split->callback([&] {
    auto instances = load_dataset_jsonl(split_dataset);
    auto plan = make_fold_plan(instances, split_folds, g.seed.value_or(203), split_stratified);
    deliver(g, "fold_plan.json", fold_plan_to_json(plan));
  });

  auto* predict = app.add_subcommand("predict", "classify exported prompts");
  std::string predict_prompts, predict_url;
  std::size_t predict_retries = 3, predict_inflight = 4;
  predict->add_option("--prompts", predict_prompts, "prompts JSONL")->required();
  predict->add_option("--url", predict_url, "inference server base URL; mock backend when absent");
  predict->add_option("--retries", predict_retries);
  predict->add_option("--in-flight", predict_inflight);
  predict->callback([&] {
    auto records = read_prompts_jsonl(predict_prompts);
    std::vector<PredictionRecord> preds;
    if (predict_url.empty()) {
      for (const auto& r : records) preds.push_back(predict_mock(make_request(r), r.mapping(), g.seed.value_or(203)));
    } else {
      HttpEndpoint ep;
      ep.base_url = predict_url;
      ep.max_retries = predict_retries;
      ep.max_in_flight = predict_inflight;
      std::vector<InferenceRequest> reqs;
      for (const auto& r : records) reqs.push_back(make_request(r));
      // Label words may differ per record; resolve each with its own mapping.
      for (std::size_t i = 0; i < records.size(); ++i) {
        preds.push_back(predict_http(ep, reqs[i], records[i].mapping()));
      }
    }
    std::string text;
    for (const auto& p : preds) text += prediction_to_json_line(p) + "\n";
    deliver(g, "predictions.jsonl", text);
  });

  auto* eval = app.add_subcommand("eval", "score prediction files against gold labels");
  std::string eval_dataset;
  std::vector<std::string> eval_preds;
  bool eval_sample_std = false;
  eval->add_option("--dataset", eval_dataset, "dataset JSONL with gold labels")->required();
  eval->add_option("--predictions", eval_preds, "one predictions JSONL per fold")->required();
  eval->add_flag("--sample-std", eval_sample_std, "n-1 denominator for the F1 std");
  eval->callback([&] {
    std::map<std::string, CausalLabel> golds;
    for (const auto& inst : load_dataset_jsonl(eval_dataset)) golds[inst.instance_id] = inst.label;
    std::vector<Metrics> folds;
    for (const auto& p : eval_preds) folds.push_back(compute_metrics(read_predictions_jsonl(p), golds));
    auto report = aggregate_folds(folds, eval_sample_std ? StdMode::sample : StdMode::population);
    std::fputs(report_to_table(report).c_str(), stderr);
    deliver(g, "report.json", report_to_json(report));
  });

  auto* run = app.add_subcommand("run", "full pipeline from a config");
  run->callback([&] {
    auto cfg = load_config(g);
    auto summary = run_experiment(cfg);
    std::fprintf(stderr, "run directory: %s\ninstances: %zu, unresolved pairs: %zu, empty contexts: %zu\n",
                 summary.run_dir.string().c_str(), summary.instances, summary.unresolved_pairs,
                 summary.empty_contexts);
    if (summary.report) std::fputs(report_to_table(*summary.report).c_str(), stdout);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    status = exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    status = kExitStage;
  }
  return status;
}
