#include "http_retry.hpp"

#include <algorithm>
#include <thread>

#include <nlohmann/json.hpp>

namespace kgprompt::detail {

UrlParts split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos || scheme == 0) {
    throw Error(ErrorCode::InvalidArgument, "malformed URL '" + url + "'");
  }
  auto slash = url.find('/', scheme + 3);
  UrlParts parts{url, ""};
  if (slash != std::string::npos) {
    parts.origin = url.substr(0, slash);
    parts.path = url.substr(slash);
    while (!parts.path.empty() && parts.path.back() == '/') parts.path.pop_back();
  }
  if (parts.origin.size() <= scheme + 3) throw Error(ErrorCode::InvalidArgument, "URL without host '" + url + "'");
  return parts;
}

httplib::Client make_client(const std::string& origin, std::chrono::milliseconds timeout) {
  httplib::Client client(origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  return client;
}

std::string error_body_message(const std::string& body) {
  try {
    auto doc = nlohmann::json::parse(body);
    if (doc.is_object() && doc.contains("code") && doc.contains("message") && doc["message"].is_string()) {
      return "[" + doc["code"].dump() + "] " + doc["message"].get<std::string>();
    }
  } catch (const std::exception&) {
  }
  return body.substr(0, 200);
}

std::string send_with_retry(const RetryPolicy& policy, const std::string& what,
                            const std::function<httplib::Result()>& send, ErrorCode client_error) {
  std::string last_error;
  double retry_after = -1.0;
  for (std::size_t attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::chrono::milliseconds wait = policy.backoff * (1LL << std::min<std::size_t>(attempt - 1, 16));
      if (retry_after > 0) {
        wait = std::max(wait, std::chrono::milliseconds(static_cast<long long>(retry_after * 1000)));
      }
      std::this_thread::sleep_for(wait);
    }
    retry_after = -1.0;
    auto res = send();
    if (!res) {
      last_error = what + ": " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status == 429) {
      retry_after = 0.0;
      if (res->has_header("Retry-After")) {
        try {
          retry_after = std::stod(res->get_header_value("Retry-After"));
        } catch (const std::exception&) {
        }
      }
      last_error = what + ": HTTP 429 " + error_body_message(res->body);
      continue;
    }
    if (res->status >= 500) {
      last_error = what + ": HTTP " + std::to_string(res->status) + " " + error_body_message(res->body);
      continue;
    }
    throw Error(client_error, what + ": HTTP " + std::to_string(res->status) + " " + error_body_message(res->body));
  }
  if (retry_after >= 0.0) throw RateLimitedError(last_error, retry_after);
  throw Error(ErrorCode::NetworkError, last_error + " (gave up after " + std::to_string(policy.max_retries) + " retries)");
}

}  // namespace kgprompt::detail
