#include "promptevo/backend.hpp"
#include "promptevo/png_image.hpp"

namespace promptevo {

Bytes MockBackend::render(const PromptString& prompt, std::int64_t seed, const GenerationParams&) const {
  std::string material = prompt.text;
  material.push_back('\0');
  material += std::to_string(seed);
  Bytes digest = sha256(std::span(reinterpret_cast<const std::uint8_t*>(material.data()), material.size()));
  const Bytes second = sha256(digest);
  digest.insert(digest.end(), second.begin(), second.end());

  // 4x4 grid of flat color cells, 16 px each, colors taken from the digest.
  constexpr int kCells = 4;
  constexpr int kCell = kSize / kCells;
  RgbImage image{kSize, kSize, Bytes(static_cast<std::size_t>(kSize) * kSize * 3)};
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < kSize; ++x) {
      const std::size_t cell = static_cast<std::size_t>((y / kCell) * kCells + x / kCell);
      const std::size_t px = (static_cast<std::size_t>(y) * kSize + x) * 3;
      for (std::size_t ch = 0; ch < 3; ++ch) image.pixels[px + ch] = digest[cell * 3 + ch];
    }
  }
  return encode_png(image);
}

}  // namespace promptevo
