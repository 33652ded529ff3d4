#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rvd {

/// Returns `bytes` as valid UTF-8, replacing every invalid or truncated
/// sequence with U+FFFD.
std::string lenient_utf8(std::string_view bytes);

/// CRLF and lone CR become LF.
std::string normalize_newlines(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string_view> split_lines(std::string_view text);

/// Lexically normalized, forward-slash relative path ("./a//b" -> "a/b").
std::string normalize_rel_path(std::string_view path);

}  // namespace rvd
