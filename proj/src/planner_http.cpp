#include <httplib.h>

#include "agentos/planner.hpp"

namespace agentos::planner {

namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint must be an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::string HttpChatBackend::complete(const PlannerRequest& request) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::BackendUnavailable, "no planner endpoint configured");
  const auto url = split_url(config_.endpoint);
  httplib::Client client(url.base);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const Json body{{"model", config_.model},
                  {"temperature", 0},
                  {"response_format", Json{{"type", "json_object"}}},
                  {"messages", Json::array({Json{{"role", "system"}, {"content", request.system_prompt}},
                                            Json{{"role", "user"}, {"content", request.user_prompt}}})}};
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::BackendUnavailable, "planner endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(ErrorCode::BackendUnavailable,
                "planner endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  try {
    const auto j = Json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, std::string("unexpected chat-completion response: ") + e.what());
  }
}

}  // namespace agentos::planner
