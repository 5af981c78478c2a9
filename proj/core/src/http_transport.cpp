#include "sage/http_transport.hpp"

#include <atomic>

#include <httplib.h>

#include "sage/error.hpp"

namespace sage {

namespace {

std::atomic<std::uint64_t> g_request_count{0};
HttpPostFn g_override;

struct ParsedUrl {
  std::string host_port;  // scheme://host:port
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  if (url.rfind("https://", 0) == 0) {
    throw TransportError(
        "https endpoints are not supported by this build (no TLS): " + url,
        url, /*retryable=*/false);
  }
  if (url.rfind("http://", 0) != 0) {
    throw TransportError("endpoint is not an http:// URL: " + url, url,
                         /*retryable=*/false);
  }
  const std::size_t path_pos = url.find('/', 7);
  if (path_pos == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_pos), url.substr(path_pos)};
}

}  // namespace

HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const HttpHeaders& headers, int timeout_ms) {
  if (g_override) {
    g_request_count.fetch_add(1, std::memory_order_relaxed);
    return g_override(url, body, headers);
  }
  const ParsedUrl parsed = split_url(url);

  httplib::Client client(parsed.host_port);
  client.set_connection_timeout(0, timeout_ms * 1000);
  client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);

  httplib::Headers hl;
  for (const auto& [key, value] : headers) hl.emplace(key, value);

  g_request_count.fetch_add(1, std::memory_order_relaxed);
  auto result = client.Post(parsed.path, hl, body, "application/json");
  if (!result) {
    throw TransportError("POST " + url + " failed: " +
                             httplib::to_string(result.error()),
                         url, /*retryable=*/true);
  }
  return {result->status, result->body};
}

std::uint64_t http_request_count() {
  return g_request_count.load(std::memory_order_relaxed);
}

HttpPostFn set_http_post_override(HttpPostFn fn) {
  HttpPostFn previous = std::move(g_override);
  g_override = std::move(fn);
  return previous;
}

}  // namespace sage
