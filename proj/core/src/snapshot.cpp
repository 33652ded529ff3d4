#include "rvd/snapshot.hpp"

#include <algorithm>
#include <array>
#include <system_error>

namespace rvd {

namespace fs = std::filesystem;

namespace {

bool hidden(const fs::path& p) {
  auto name = p.filename().string();
  return name.size() > 1 && name[0] == '.';
}

template <typename Visit>
void walk_sources(const fs::path& root, Visit&& visit) {
  std::error_code ec;
  fs::recursive_directory_iterator it(root, ec), end;
  if (ec) return;
  for (; it != end; it.increment(ec)) {
    if (ec) break;
    const auto& p = it->path();
    if (it->is_directory(ec)) {
      if (hidden(p)) it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file(ec)) continue;
    if (auto lang = language_of(p)) visit(*lang, p);
  }
}

}  // namespace

std::vector<std::string> list_source_files(const fs::path& root, Language lang) {
  std::vector<std::string> files;
  walk_sources(root, [&](Language l, const fs::path& p) {
    if (l == lang) files.push_back(p.lexically_relative(root).generic_string());
  });
  std::sort(files.begin(), files.end());
  return files;
}

RepoSnapshot open_snapshot(std::string snapshot_id, const fs::path& root,
                           Language lang) {
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw DataError("snapshot '" + snapshot_id + "' not found at " + root.string());
  RepoSnapshot snap;
  snap.snapshot_id = std::move(snapshot_id);
  snap.root_path = root;
  snap.language = lang;
  snap.file_count = list_source_files(root, lang).size();
  if (snap.file_count == 0)
    throw DataError("snapshot '" + snap.snapshot_id + "' has no " +
                    std::string(to_string(lang)) + " source files");
  return snap;
}

std::optional<Language> detect_language(const fs::path& root) {
  std::array<std::size_t, 3> counts{};
  walk_sources(root, [&](Language l, const fs::path&) {
    ++counts[static_cast<std::size_t>(l)];
  });
  auto best = std::max_element(counts.begin(), counts.end());
  if (*best == 0) return std::nullopt;
  return static_cast<Language>(best - counts.begin());
}

}  // namespace rvd
