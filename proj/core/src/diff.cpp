#include "rvd/diff.hpp"

#include <algorithm>
#include <regex>

#include "rvd/common.hpp"
#include "rvd/text.hpp"

namespace rvd {

namespace {

std::optional<std::string> header_path(std::string_view rest) {
  // "a/src/x.c\t2020-01-01 ..." -> "a/src/x.c"
  auto tab = rest.find('\t');
  if (tab != std::string_view::npos) rest = rest.substr(0, tab);
  while (!rest.empty() && (rest.back() == ' ' || rest.back() == '\r')) rest.remove_suffix(1);
  if (rest.size() >= 2 && rest.front() == '"' && rest.back() == '"')
    rest = rest.substr(1, rest.size() - 2);
  if (rest == "/dev/null") return std::nullopt;
  return std::string(rest);
}

void strip_prefix(std::optional<std::string>& p, std::string_view prefix) {
  if (p && p->starts_with(prefix)) p->erase(0, prefix.size());
}

struct HunkHeader {
  int old_start, old_count, new_start, new_count;
};

HunkHeader parse_hunk_header(std::string_view line, int lineno) {
  static const std::regex re(R"(^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(line.begin(), line.end(), m, re))
    throw DataError("diff line " + std::to_string(lineno) + ": malformed hunk header");
  auto num = [&](int i, int fallback) {
    if (!m[i].matched) return fallback;
    return std::stoi(m[i].str());
  };
  return {num(1, 0), num(2, 1), num(3, 0), num(4, 1)};
}

}  // namespace

UnifiedDiff parse_unified_diff(std::string_view text) {
  UnifiedDiff diff;
  const auto lines = split_lines(text);
  FileDiff* current = nullptr;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    const int lineno = static_cast<int>(i) + 1;
    if (line.starts_with("diff --cc") || line.starts_with("diff --combined") ||
        line.starts_with("@@@"))
      throw DataError("diff line " + std::to_string(lineno) +
                      ": combined (merge commit) diffs are not supported");
    if (line.starts_with("--- ") && i + 1 < lines.size() && lines[i + 1].starts_with("+++ ")) {
      FileDiff fd;
      fd.old_path = header_path(line.substr(4));
      fd.new_path = header_path(lines[i + 1].substr(4));
      if (!fd.old_path && !fd.new_path)
        throw DataError("diff line " + std::to_string(lineno) + ": both sides are /dev/null");
      const bool git_style = (!fd.old_path || fd.old_path->starts_with("a/")) &&
                             (!fd.new_path || fd.new_path->starts_with("b/"));
      if (git_style) {
        strip_prefix(fd.old_path, "a/");
        strip_prefix(fd.new_path, "b/");
      }
      if (fd.old_path) fd.old_path = normalize_rel_path(*fd.old_path);
      if (fd.new_path) fd.new_path = normalize_rel_path(*fd.new_path);
      diff.files.push_back(std::move(fd));
      current = &diff.files.back();
      ++i;
      continue;
    }
    if (!line.starts_with("@@")) continue;  // git extended headers, index lines, ...
    if (current == nullptr)
      throw DataError("diff line " + std::to_string(lineno) + ": hunk before any file header");

    const auto h = parse_hunk_header(line, lineno);
    int old_left = h.old_count;
    int new_left = h.new_count;
    // Next pre-image line to be consumed.
    int old_pos = (h.old_count == 0) ? h.old_start + 1 : h.old_start;
    bool run_has_delete = false;
    bool run_has_insert = false;
    int run_gap = 0;
    auto end_run = [&] {
      if (run_has_insert && !run_has_delete) current->insertion_gaps.push_back(run_gap);
      run_has_delete = run_has_insert = false;
    };

    while ((old_left > 0 || new_left > 0) && i + 1 < lines.size()) {
      const auto body = lines[++i];
      const int bodyno = static_cast<int>(i) + 1;
      const char tag = body.empty() ? ' ' : body[0];
      switch (tag) {
        case ' ':
          end_run();
          ++old_pos;
          --old_left;
          --new_left;
          break;
        case '-':
          if (!run_has_delete && !run_has_insert) run_gap = old_pos - 1;
          run_has_delete = true;
          current->deleted_lines.push_back(old_pos);
          ++old_pos;
          --old_left;
          break;
        case '+':
          if (!run_has_delete && !run_has_insert) run_gap = old_pos - 1;
          run_has_insert = true;
          --new_left;
          break;
        case '\\':
          break;  // "\ No newline at end of file"
        default:
          throw DataError("diff line " + std::to_string(bodyno) + ": unexpected line in hunk");
      }
      if (old_left < 0 || new_left < 0)
        throw DataError("diff line " + std::to_string(bodyno) + ": hunk longer than its header");
    }
    end_run();
    if (old_left > 0 || new_left > 0)
      throw DataError("diff line " + std::to_string(lineno) + ": truncated hunk");
    // A trailing "\ No newline" belongs to the hunk just read.
    if (i + 1 < lines.size() && lines[i + 1].starts_with("\\")) ++i;
  }
  for (auto& f : diff.files) {
    std::sort(f.deleted_lines.begin(), f.deleted_lines.end());
    std::sort(f.insertion_gaps.begin(), f.insertion_gaps.end());
  }
  return diff;
}

}  // namespace rvd
