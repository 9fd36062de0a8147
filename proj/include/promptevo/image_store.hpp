#pragma once

#include <array>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "promptevo/digest.hpp"

namespace promptevo {

/// Content-addressed PNG store laid out as {data_dir}/images/{sha256}.png.
///
/// Writes go to a temporary file and are renamed into place, so readers never
/// observe partial files. Writing the same bytes twice leaves one file.
class ImageStore {
 public:
  explicit ImageStore(std::filesystem::path data_dir);

  /// Stores PNG bytes and returns their hash. Throws Error(store_io_error).
  std::string put(std::span<const std::uint8_t> png);

  bool contains(std::string_view hash) const;
  /// Bytes whose hash matches; nullopt when absent or corrupted.
  std::optional<Bytes> read(std::string_view hash) const;
  std::filesystem::path path_for(std::string_view hash) const;
  const std::filesystem::path& images_dir() const { return images_dir_; }

 private:
  std::mutex& stripe(std::string_view hash);

  std::filesystem::path images_dir_;
  std::array<std::mutex, 16> stripes_;
};

}  // namespace promptevo
