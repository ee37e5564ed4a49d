#pragma once

#include <string>
#include <string_view>

namespace wardcast {

// Lowercase hex SHA-256 digest of a byte string.
std::string sha256_hex(std::string_view data);

// Digest of a file's contents; throws std::runtime_error if unreadable.
std::string file_sha256(const std::string& path);

}  // namespace wardcast
