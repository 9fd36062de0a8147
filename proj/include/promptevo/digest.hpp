#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptevo {

using Bytes = std::vector<std::uint8_t>;

/// Lowercase 64-hex-digit SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);
Bytes sha256(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws Error(parse_error) on malformed input. Whitespace is ignored.
Bytes base64_decode(std::string_view text);

bool is_hex_digest(std::string_view s);

}  // namespace promptevo
