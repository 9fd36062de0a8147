#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "promptevo/prompt.hpp"
#include "promptevo/schema.hpp"

namespace promptevo {

struct GenerationParams {
  int steps = 28;
  double guidance_scale = 7.0;
  int width = 512;
  int height = 512;
  std::string negative_prompt;
  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

std::vector<Violation> validate_params(const GenerationParams& params);

struct ImageRef {
  std::string content_hash;
  std::string format = "png";
  std::string backend_id;
  PromptString prompt_echo;
  std::int64_t seed = 0;
  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

}  // namespace promptevo
