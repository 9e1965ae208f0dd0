#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fragmem::detail {

struct HttpResponse {
    int status = 0;
    std::string body;
};

struct TransportError {
    std::string message;
};

/// POST a JSON body. Returns the response, or a TransportError when no HTTP
/// response was received (DNS, connect, timeout).
struct HttpResult {
    bool ok = false;
    HttpResponse response;
    TransportError error;
};

HttpResult post_json(const std::string& url, const std::string& body,
                     const std::vector<std::pair<std::string, std::string>>& headers, double timeout_seconds);

bool is_retryable_status(int status);

/// post_json with up to `max_retries` extra attempts on transport failure or a
/// retryable status, sleeping backoff_initial_ms * 2^k between attempts.
/// Throws RetryableProviderError once attempts are exhausted; any other
/// response is returned as-is.
HttpResponse post_json_with_retry(const std::string& url, const std::string& body,
                                  const std::vector<std::pair<std::string, std::string>>& headers,
                                  double timeout_seconds, int max_retries, int backoff_initial_ms);

/// Bearer header from the named environment variable; empty when unset.
std::vector<std::pair<std::string, std::string>> bearer_headers(const std::string& env_var);

} // namespace fragmem::detail
