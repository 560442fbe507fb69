#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace grasp {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace grasp
