#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rvd {

enum class Language { Java, C, Python };

std::string_view to_string(Language lang);

/// Accepts the canonical spelling ("Java", "C", "Python") in any letter case.
Language parse_language(std::string_view text);

/// Maps a file extension to the benchmark language that owns it, if any.
/// C owns both `.c` and `.h`.
std::optional<Language> language_of(const std::filesystem::path& file);

inline bool is_source_of(Language lang, const std::filesystem::path& file) {
  auto l = language_of(file);
  return l && *l == lang;
}

// Error categories map one-to-one onto CLI exit codes (2, 3, 4).
enum class ErrorKind { Config, Data, Detector };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class DetectorError : public Error {
 public:
  explicit DetectorError(const std::string& what)
      : Error(ErrorKind::Detector, what) {}
};

int exit_code_for(ErrorKind kind) noexcept;

std::string_view version() noexcept;

}  // namespace rvd
