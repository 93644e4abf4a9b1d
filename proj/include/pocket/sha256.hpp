#pragma once
#include <filesystem>
#include <string>
#include <string_view>

namespace pocket {

// Lowercase hex SHA-256 digest of a byte string.
std::string sha256_hex(std::string_view bytes);

// Digest of a file's raw bytes. Throws ValidationError if unreadable.
std::string sha256_file_hex(const std::filesystem::path& path);

} // namespace pocket
