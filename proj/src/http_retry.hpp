#pragma once

#include <chrono>
#include <functional>
#include <string>

#include <httplib.h>

#include "kgprompt/error.hpp"

namespace kgprompt::detail {

struct RetryPolicy {
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff{200};
};

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // "" or "/prefix", no trailing slash
};

UrlParts split_url(const std::string& url);

httplib::Client make_client(const std::string& origin, std::chrono::milliseconds timeout);

/// Summarizes an error body, using its {code, message} fields when present.
std::string error_body_message(const std::string& body);

/// Sends until a 200 arrives and returns its body. Connection failures,
/// 5xx and 429 are retried with exponential backoff (429 waits at least
/// Retry-After). Other statuses throw `client_error` immediately. When
/// retries run out: RateLimitedError if the last answer was 429, else
/// NetworkError.
std::string send_with_retry(const RetryPolicy& policy, const std::string& what,
                            const std::function<httplib::Result()>& send, ErrorCode client_error);

}  // namespace kgprompt::detail
