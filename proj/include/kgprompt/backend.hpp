#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgprompt/labels.hpp"
#include "kgprompt/prompts.hpp"

namespace kgprompt {

struct InferenceRequest {
  std::string request_id;
  std::string prompt;
  std::string mask_token;
  /// Label words, causal first.
  std::vector<std::string> candidates;
  Architecture architecture = Architecture::MLM;

  /// Throws InvalidArgument for empty or repeated candidates.
  void validate() const;
};

InferenceRequest make_request(const PromptRecord& record);

/// Exactly one of scores / generated_text is set.
struct InferenceResponse {
  std::string request_id;
  std::optional<std::map<std::string, double>> scores;
  std::optional<std::string> generated_text;
};

struct PredictionRecord {
  std::string instance_id;
  CausalLabel predicted = CausalLabel::non_causal;
  std::optional<double> score;
  std::string backend;

  bool operator==(const PredictionRecord&) const = default;
};

// Wire format for POST /predict.
std::string request_to_json(const InferenceRequest& req);
InferenceRequest request_from_json(std::string_view body);
std::string response_to_json(const InferenceResponse& resp);
/// Throws ProtocolError when the body does not match the response schema.
InferenceResponse response_from_json(std::string_view body);

/// Turns a response into a class: argmax over scores (ties go to the
/// earlier candidate), or the first candidate found case-insensitively in
/// generated text. Throws UnmappableOutput or ProtocolError.
PredictionRecord resolve_response(const InferenceRequest& req, const InferenceResponse& resp,
                                  const LabelMapping& mapping, const std::string& backend_name);

struct HttpEndpoint {
  /// e.g. "http://127.0.0.1:8000"; the request goes to <base_url>/predict.
  std::string base_url;
  std::chrono::milliseconds timeout{10'000};
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff{200};
  /// Concurrent requests in predict_batch_http.
  std::size_t max_in_flight = 4;
};

/// Retries connection failures, 5xx and 429 with exponential backoff.
PredictionRecord predict_http(const HttpEndpoint& endpoint, const InferenceRequest& req,
                              const LabelMapping& mapping);

/// Results are in request order regardless of completion order.
std::vector<PredictionRecord> predict_batch_http(const HttpEndpoint& endpoint,
                                                 const std::vector<InferenceRequest>& requests,
                                                 const LabelMapping& mapping);

/// Deterministic stand-in: hashes (prompt, seed) onto a candidate.
PredictionRecord predict_mock(const InferenceRequest& req, const LabelMapping& mapping,
                              std::uint64_t mock_seed);

std::string prediction_to_json_line(const PredictionRecord& p);
PredictionRecord prediction_from_json_line(std::string_view line);
void write_predictions_jsonl(const std::vector<PredictionRecord>& preds,
                             const std::filesystem::path& path);

}  // namespace kgprompt
