#include <httplib.h>

#include "promptevo/backend.hpp"
#include "promptevo/codec.hpp"
#include "promptevo/errors.hpp"

namespace promptevo {

namespace {

std::string truncate(std::string s, std::size_t max = 512) {
  if (s.size() > max) {
    s.resize(max);
    s += "...";
  }
  return s;
}

}  // namespace

Txt2ImgBackend::Txt2ImgBackend(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
  const std::size_t scheme_end = base_url_.find("://");
  if (scheme_end == std::string::npos || base_url_.substr(0, scheme_end) != "http")
    throw Error(ErrorCode::invalid_argument, "backend URL must start with http://: " + base_url_);
  const std::size_t path_start = base_url_.find('/', scheme_end + 3);
  origin_ = base_url_.substr(0, path_start);
  if (path_start != std::string::npos) {
    path_prefix_ = base_url_.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
  if (origin_.size() <= scheme_end + 3) throw Error(ErrorCode::invalid_argument, "backend URL has no host");
}

Bytes Txt2ImgBackend::render(const PromptString& prompt, std::int64_t seed, const GenerationParams& params) const {
  Json body;
  body["prompt"] = prompt.text;
  body["negative_prompt"] = prompt.negative_text.empty() ? params.negative_prompt : prompt.negative_text;
  body["seed"] = seed;
  body["steps"] = params.steps;
  body["cfg_scale"] = params.guidance_scale;
  body["width"] = params.width;
  body["height"] = params.height;

  httplib::Client client(origin_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  const auto result = client.Post(path_prefix_ + "/sdapi/v1/txt2img", body.dump(), "application/json");
  if (!result)
    throw Error(ErrorCode::backend_unreachable,
                "txt2img request to " + base_url_ + " failed: " + httplib::to_string(result.error()));
  if (result->status < 200 || result->status >= 300)
    throw Error(ErrorCode::backend_error,
                "txt2img returned HTTP " + std::to_string(result->status) + ": " + truncate(result->body));

  Json response;
  try {
    response = Json::parse(result->body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::backend_error, "txt2img response is not JSON: " + truncate(result->body));
  }
  const auto images = response.find("images");
  if (images == response.end() || !images->is_array() || images->empty() || !images->front().is_string())
    throw Error(ErrorCode::backend_error, "txt2img response lacks a non-empty 'images' array");
  std::string payload = images->front().get<std::string>();
  // Some servers prefix a data URI header.
  if (const auto comma = payload.find(','); payload.rfind("data:", 0) == 0 && comma != std::string::npos)
    payload.erase(0, comma + 1);
  try {
    return base64_decode(payload);
  } catch (const Error&) {
    throw Error(ErrorCode::backend_error, "txt2img image payload is not valid base64");
  }
}

}  // namespace promptevo
