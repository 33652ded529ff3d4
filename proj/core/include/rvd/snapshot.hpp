#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rvd/common.hpp"

namespace rvd {

/// A pre-fix checkout of one vulnerable repository on local disk.
struct RepoSnapshot {
  std::string snapshot_id;
  std::filesystem::path root_path;
  Language language = Language::C;
  std::size_t file_count = 0;  // source files of `language`
};

/// Source files of `lang` under `root`, relative with forward slashes,
/// sorted. Hidden directories (".git" and friends) are skipped.
std::vector<std::string> list_source_files(const std::filesystem::path& root,
                                           Language lang);

/// Throws DataError if the directory is missing or holds no source file of
/// the declared language.
RepoSnapshot open_snapshot(std::string snapshot_id,
                           const std::filesystem::path& root, Language lang);

/// Picks the language with the most source files under `root`; ties resolve
/// Java, C, Python in that order. Empty optional when there are none.
std::optional<Language> detect_language(const std::filesystem::path& root);

}  // namespace rvd
