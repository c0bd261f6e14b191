#include "kgprompt/backend.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <thread>

#include <nlohmann/json.hpp>

#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"
#include "http_retry.hpp"

namespace kgprompt {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

void InferenceRequest::validate() const {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "request '" + request_id + "' has no candidates");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].empty()) throw Error(ErrorCode::InvalidArgument, "empty candidate in '" + request_id + "'");
    for (std::size_t j = 0; j < i; ++j) {
      if (candidates[i] == candidates[j]) {
        throw Error(ErrorCode::InvalidArgument, "repeated candidate '" + candidates[i] + "' in '" + request_id + "'");
      }
    }
  }
}

InferenceRequest make_request(const PromptRecord& record) {
  return InferenceRequest{record.instance_id, record.prompt, record.mask_token,
                          {record.causal_word, record.non_causal_word}, record.architecture};
}

std::string request_to_json(const InferenceRequest& req) {
  ordered_json doc;
  doc["request_id"] = req.request_id;
  doc["prompt"] = req.prompt;
  doc["mask_token"] = req.mask_token;
  doc["candidates"] = req.candidates;
  doc["architecture"] = std::string(to_string(req.architecture));
  return doc.dump();
}

InferenceRequest request_from_json(std::string_view body) {
  try {
    auto doc = json::parse(body);
    InferenceRequest req;
    req.request_id = doc.at("request_id").get<std::string>();
    req.prompt = doc.at("prompt").get<std::string>();
    req.mask_token = doc.at("mask_token").get<std::string>();
    req.candidates = doc.at("candidates").get<std::vector<std::string>>();
    req.architecture = architecture_from_string(doc.at("architecture").get<std::string>());
    return req;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("request: ") + e.what());
  }
}

std::string response_to_json(const InferenceResponse& resp) {
  ordered_json doc;
  doc["request_id"] = resp.request_id;
  if (resp.scores) {
    doc["scores"] = ordered_json::object();
    for (const auto& [k, v] : *resp.scores) doc["scores"][k] = v;
  }
  if (resp.generated_text) doc["generated_text"] = *resp.generated_text;
  return doc.dump();
}

InferenceResponse response_from_json(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ProtocolError, std::string("response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("request_id") || !doc["request_id"].is_string()) {
    throw Error(ErrorCode::ProtocolError, "response lacks a string request_id");
  }
  InferenceResponse resp;
  resp.request_id = doc["request_id"].get<std::string>();
  const bool has_scores = doc.contains("scores");
  const bool has_text = doc.contains("generated_text");
  if (has_scores == has_text) {
    throw Error(ErrorCode::ProtocolError, "response must carry exactly one of scores / generated_text");
  }
  if (has_scores) {
    if (!doc["scores"].is_object()) throw Error(ErrorCode::ProtocolError, "scores must be an object");
    std::map<std::string, double> scores;
    for (const auto& [k, v] : doc["scores"].items()) {
      if (!v.is_number()) throw Error(ErrorCode::ProtocolError, "score for '" + k + "' is not a number");
      scores[k] = v.get<double>();
    }
    resp.scores = std::move(scores);
  } else {
    if (!doc["generated_text"].is_string()) throw Error(ErrorCode::ProtocolError, "generated_text must be a string");
    resp.generated_text = doc["generated_text"].get<std::string>();
  }
  return resp;
}

PredictionRecord resolve_response(const InferenceRequest& req, const InferenceResponse& resp,
                                  const LabelMapping& mapping, const std::string& backend_name) {
  if (resp.request_id != req.request_id) {
    throw Error(ErrorCode::ProtocolError,
                "response for '" + resp.request_id + "' answers request '" + req.request_id + "'");
  }
  PredictionRecord rec;
  rec.instance_id = req.request_id;
  rec.backend = backend_name;
  if (resp.scores) {
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t i = 0; i < req.candidates.size(); ++i) {
      auto it = resp.scores->find(req.candidates[i]);
      if (it == resp.scores->end()) {
        throw Error(ErrorCode::ProtocolError, "scores omit candidate '" + req.candidates[i] + "'");
      }
      if (!std::isfinite(it->second)) {
        throw Error(ErrorCode::ProtocolError, "non-finite score for '" + req.candidates[i] + "'");
      }
      // Strict '>' keeps the earlier candidate on ties.
      if (!best || it->second > best_score) {
        best = i;
        best_score = it->second;
      }
    }
    rec.predicted = mapping.unmap(req.candidates[*best]);
    rec.score = best_score;
    return rec;
  }
  const auto text = lower(resp.generated_text.value_or(""));
  std::optional<std::size_t> best;
  std::size_t best_pos = 0;
  for (std::size_t i = 0; i < req.candidates.size(); ++i) {
    auto pos = text.find(lower(req.candidates[i]));
    if (pos == std::string::npos) continue;
    // Earliest occurrence wins; at the same position the longer word
    // ("non-causal" over "causal"), then candidate order.
    if (!best || pos < best_pos ||
        (pos == best_pos && req.candidates[i].size() > req.candidates[*best].size())) {
      best = i;
      best_pos = pos;
    }
  }
  if (!best) {
    throw Error(ErrorCode::UnmappableOutput,
                "generated text for '" + req.request_id + "' names no candidate: '" +
                    resp.generated_text.value_or("") + "'");
  }
  rec.predicted = mapping.unmap(req.candidates[*best]);
  return rec;
}

PredictionRecord predict_http(const HttpEndpoint& endpoint, const InferenceRequest& req,
                              const LabelMapping& mapping) {
  req.validate();
  auto url = detail::split_url(endpoint.base_url);
  auto client = detail::make_client(url.origin, endpoint.timeout);
  const std::string body = request_to_json(req);
  const std::string path = url.path + "/predict";
  auto reply = detail::send_with_retry(
      {endpoint.max_retries, endpoint.backoff}, "POST " + endpoint.base_url + "/predict for '" + req.request_id + "'",
      [&] { return client.Post(path, body, "application/json"); }, ErrorCode::ProtocolError);
  return resolve_response(req, response_from_json(reply), mapping, "http");
}

std::vector<PredictionRecord> predict_batch_http(const HttpEndpoint& endpoint,
                                                 const std::vector<InferenceRequest>& requests,
                                                 const LabelMapping& mapping) {
  std::vector<PredictionRecord> out(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        out[i] = predict_http(endpoint, requests[i], mapping);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(endpoint.max_in_flight, requests.size()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

PredictionRecord predict_mock(const InferenceRequest& req, const LabelMapping& mapping,
                              std::uint64_t mock_seed) {
  req.validate();
  auto h = derive_seed(mock_seed, {"mock", req.prompt});
  PredictionRecord rec;
  rec.instance_id = req.request_id;
  rec.predicted = mapping.unmap(req.candidates[h % req.candidates.size()]);
  rec.backend = "mock";
  return rec;
}

std::string prediction_to_json_line(const PredictionRecord& p) {
  ordered_json doc;
  doc["instance_id"] = p.instance_id;
  doc["predicted"] = std::string(to_string(p.predicted));
  if (p.score) doc["score"] = *p.score;
  doc["backend"] = p.backend;
  return doc.dump();
}

PredictionRecord prediction_from_json_line(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "prediction is not an object");
  for (const char* f : {"instance_id", "predicted", "backend"}) {
    if (!doc.contains(f) || !doc[f].is_string()) {
      throw Error(ErrorCode::SchemaError, std::string("prediction lacks string field '") + f + "'");
    }
  }
  PredictionRecord p;
  p.instance_id = doc["instance_id"].get<std::string>();
  try {
    p.predicted = causal_label_from_string(doc["predicted"].get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, e.detail());
  }
  if (doc.contains("score")) {
    if (!doc["score"].is_number()) throw Error(ErrorCode::SchemaError, "score is not a number");
    p.score = doc["score"].get<double>();
  }
  p.backend = doc["backend"].get<std::string>();
  return p;
}

void write_predictions_jsonl(const std::vector<PredictionRecord>& preds,
                             const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : preds) out += prediction_to_json_line(p) + "\n";
  write_file_atomic(path, out);
}

}  // namespace kgprompt
