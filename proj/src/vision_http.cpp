#include <httplib.h>

#include "agentos/detection.hpp"

namespace agentos::detection {

HttpVisionDetector::HttpVisionDetector(std::string base_url, std::string path, int timeout_seconds)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_seconds_(timeout_seconds) {}

std::vector<VisionDetection> HttpVisionDetector::detect(const simenv::Snapshot& snapshot) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  const Json body{{"screenshot", snapshot.screenshot_ref}, {"app_id", snapshot.app_id}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BackendUnavailable, "vision detector unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BackendUnavailable, "vision detector returned HTTP " + std::to_string(res->status));
  }
  try {
    return Json::parse(res->body).get<std::vector<VisionDetection>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("vision detector response: ") + e.what());
  }
}

}  // namespace agentos::detection
