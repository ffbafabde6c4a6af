#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace gangmam {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::span<const unsigned char> data);
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's bytes. Throws IoError.
std::string sha256_file(const std::filesystem::path& path);

/// Digest over every regular file under `root`: sorted relative paths plus contents.
/// Directories contribute their relative path so empty dirs are visible too.
std::string tree_hash(const std::filesystem::path& root);

std::string base64_encode(std::string_view bytes);
/// Throws ParseError on malformed input.
std::string base64_decode(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace gangmam
