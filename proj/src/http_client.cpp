#include "http_client.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>
#include <string_view>

#include "fragmem/error.hpp"
#include "httplib.h"

namespace fragmem::detail {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint url must start with http:// or https://: " + url);
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported url scheme '" + scheme + "' in " + url);
    }
    const auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

} // namespace

HttpResult post_json(const std::string& url, const std::string& body,
                     const std::vector<std::pair<std::string, std::string>>& headers, double timeout_seconds) {
    const auto parts = split_url(url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (parts.origin.rfind("https://", 0) == 0) {
        throw ConfigError("https endpoints require a build with OpenSSL support: " + url);
    }
#endif
    httplib::Client client(parts.origin);
    const auto sec = static_cast<time_t>(timeout_seconds);
    const auto usec = static_cast<time_t>((timeout_seconds - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) {
        hdrs.emplace(k, v);
    }
    HttpResult result;
    auto res = client.Post(parts.path, hdrs, body, "application/json");
    if (!res) {
        result.error.message = "transport failure: " + httplib::to_string(res.error());
        return result;
    }
    result.ok = true;
    result.response.status = res->status;
    result.response.body = res->body;
    return result;
}

bool is_retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

HttpResponse post_json_with_retry(const std::string& url, const std::string& body,
                                  const std::vector<std::pair<std::string, std::string>>& headers,
                                  double timeout_seconds, int max_retries, int backoff_initial_ms) {
    const int max_attempts = 1 + std::max(0, max_retries);
    std::string last_error;
    std::string log;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto result = post_json(url, body, headers, timeout_seconds);
        if (result.ok && !is_retryable_status(result.response.status)) {
            return std::move(result.response);
        }
        last_error = result.ok ? "HTTP " + std::to_string(result.response.status) + " from " + url
                               : result.error.message + " (" + url + ")";
        log += "\n  attempt " + std::to_string(attempt) + ": " + last_error;
        if (attempt < max_attempts && backoff_initial_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_initial_ms) * (1 << (attempt - 1)));
        }
    }
    throw RetryableProviderError(last_error + log, max_attempts);
}

std::vector<std::pair<std::string, std::string>> bearer_headers(const std::string& env_var) {
    std::vector<std::pair<std::string, std::string>> headers;
    if (env_var.empty()) {
        return headers;
    }
    if (const char* token = std::getenv(env_var.c_str()); token != nullptr && *token != '\0') {
        headers.emplace_back("Authorization", std::string("Bearer ") + token);
    }
    return headers;
}

} // namespace fragmem::detail
