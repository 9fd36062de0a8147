#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include "promptevo/digest.hpp"
#include "promptevo/generation_types.hpp"
#include "promptevo/prompt.hpp"

namespace promptevo {

/// Text-to-image renderer. Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string_view id() const = 0;

  /// Image bytes (PNG or JPEG). Throws Error(backend_unreachable) on
  /// transport failure and Error(backend_error) on a rejected request.
  virtual Bytes render(const PromptString& prompt, std::int64_t seed, const GenerationParams& params) const = 0;
};

/// Offline stand-in for an artist model: a 64x64 PNG whose pixels are a pure
/// function of SHA-256(prompt text, seed).
class MockBackend final : public Backend {
 public:
  static constexpr std::string_view kId = "mock";
  static constexpr int kSize = 64;

  std::string_view id() const override { return kId; }
  Bytes render(const PromptString& prompt, std::int64_t seed, const GenerationParams& params) const override;
};

/// Client for the community txt2img HTTP convention:
/// POST {base_url}/sdapi/v1/txt2img, response `images[0]` base64-encoded.
class Txt2ImgBackend final : public Backend {
 public:
  static constexpr std::string_view kId = "txt2img";

  /// `base_url` like "http://host:7860" with an optional path prefix.
  explicit Txt2ImgBackend(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds(120));

  std::string_view id() const override { return kId; }
  Bytes render(const PromptString& prompt, std::int64_t seed, const GenerationParams& params) const override;

  const std::string& base_url() const { return base_url_; }

 private:
  std::string base_url_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // "" or "/prefix"
  std::chrono::milliseconds timeout_;
};

}  // namespace promptevo
