#include "promptevo/image_store.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "promptevo/errors.hpp"

namespace promptevo {

namespace fs = std::filesystem;

ImageStore::ImageStore(fs::path data_dir) : images_dir_(std::move(data_dir) / "images") {
  std::error_code ec;
  fs::create_directories(images_dir_, ec);
  if (ec) throw Error(ErrorCode::store_io_error, "cannot create " + images_dir_.string() + ": " + ec.message());
}

std::mutex& ImageStore::stripe(std::string_view hash) {
  const std::size_t h = std::hash<std::string_view>{}(hash);
  return stripes_[h % stripes_.size()];
}

fs::path ImageStore::path_for(std::string_view hash) const {
  return images_dir_ / (std::string(hash) + ".png");
}

std::string ImageStore::put(std::span<const std::uint8_t> png) {
  const std::string hash = sha256_hex(png);
  const fs::path target = path_for(hash);
  std::lock_guard lock(stripe(hash));
  std::error_code ec;
  if (fs::exists(target, ec) && fs::file_size(target, ec) == png.size()) return hash;

  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream tmp_name;
  tmp_name << hash << ".tmp." << std::this_thread::get_id() << "." << counter++;
  const fs::path tmp = images_dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    out.close();
    if (!out) {
      fs::remove(tmp, ec);
      throw Error(ErrorCode::store_io_error, "failed writing image " + hash);
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::store_io_error, "failed storing image " + hash + ": " + ec.message());
  }
  return hash;
}

bool ImageStore::contains(std::string_view hash) const {
  if (!is_hex_digest(hash)) return false;
  std::error_code ec;
  return fs::is_regular_file(path_for(hash), ec);
}

std::optional<Bytes> ImageStore::read(std::string_view hash) const {
  if (!is_hex_digest(hash)) return std::nullopt;
  std::ifstream in(path_for(hash), std::ios::binary);
  if (!in) return std::nullopt;
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (sha256_hex(bytes) != hash) return std::nullopt;
  return bytes;
}

}  // namespace promptevo
