#include "rvd/common.hpp"

#include <algorithm>
#include <cctype>

namespace rvd {

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::Java:
      return "Java";
    case Language::C:
      return "C";
    case Language::Python:
      return "Python";
  }
  return "?";
}

Language parse_language(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "java") return Language::Java;
  if (lower == "c") return Language::C;
  if (lower == "python") return Language::Python;
  throw ConfigError("unknown language '" + std::string(text) + "'");
}

std::optional<Language> language_of(const std::filesystem::path& file) {
  const auto ext = file.extension().string();
  if (ext == ".java") return Language::Java;
  if (ext == ".c" || ext == ".h") return Language::C;
  if (ext == ".py") return Language::Python;
  return std::nullopt;
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Data:
      return 3;
    case ErrorKind::Detector:
      return 4;
  }
  return 1;
}

std::string_view version() noexcept { return RVD_VERSION; }

}  // namespace rvd
