#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rvd {

// Parsed single-parent unified diff. Only what labeling needs is kept:
// pre-image line numbers of deletions and the insertion gaps.
struct FileDiff {
  std::optional<std::string> old_path;  // nullopt for /dev/null (new file)
  std::optional<std::string> new_path;  // nullopt for /dev/null (deleted)
  std::vector<int> deleted_lines;        // pre-image, 1-based, ascending
  // A pure insertion between pre-image lines `k` and `k + 1` is stored as k.
  std::vector<int> insertion_gaps;

  /// Path the diff refers to on the pre-image side, falling back to the new
  /// path for created files.
  const std::string& path() const { return old_path ? *old_path : *new_path; }
};

struct UnifiedDiff {
  std::vector<FileDiff> files;
};

/// Throws DataError on malformed hunks and on combined (merge) diffs.
UnifiedDiff parse_unified_diff(std::string_view text);

}  // namespace rvd
