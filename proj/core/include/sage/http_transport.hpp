#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace sage {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// POST a JSON body to an http:// URL. Throws TransportError when the
/// connection itself fails; non-2xx statuses are returned, not thrown, so
/// callers can decide what is retryable. https:// URLs are rejected with a
/// non-retryable TransportError (this build has no TLS).
HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const HttpHeaders& headers = {},
                            int timeout_ms = 30000);

/// Process-wide count of HTTP requests attempted so far. Exists so tests can
/// prove that offline code paths never touch the network.
std::uint64_t http_request_count();

/// Signature of http_post_json, for injecting fake transports in tests.
using HttpPostFn = std::function<HttpResponse(
    const std::string& url, const std::string& body, const HttpHeaders&)>;

/// Route http_post_json through fn instead of a real socket (still counted
/// by http_request_count). Pass an empty function to restore the real
/// transport. Returns the previously installed override. Not thread safe;
/// meant for test setup only.
HttpPostFn set_http_post_override(HttpPostFn fn);

}  // namespace sage
