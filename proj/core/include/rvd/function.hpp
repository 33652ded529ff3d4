#pragma once

#include <compare>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rvd/common.hpp"

namespace rvd {

/// Identity of one sliced function. The string form
/// "path#name#start-end#bodyhash8" is unique within a snapshot.
struct FunctionId {
  std::string file;  // relative, forward slashes
  std::string name;
  int start_line = 0;  // 1-based, inclusive
  int end_line = 0;
  std::string body_hash;  // 8 lowercase hex digits

  std::string str() const;
  static FunctionId parse(std::string_view text);

  bool contains_line(int line) const noexcept {
    return start_line <= line && line <= end_line;
  }
  int span_length() const noexcept { return end_line - start_line + 1; }

  auto operator<=>(const FunctionId& other) const {
    if (auto c = file <=> other.file; c != 0) return c;
    if (auto c = start_line <=> other.start_line; c != 0) return c;
    // Outer definitions sort before the nested ones that share a start line.
    if (auto c = other.end_line <=> end_line; c != 0) return c;
    if (auto c = name <=> other.name; c != 0) return c;
    return body_hash <=> other.body_hash;
  }
  bool operator==(const FunctionId&) const = default;
};

using FunctionIdSet = std::set<FunctionId>;

struct FunctionRecord {
  FunctionId id;
  Language language = Language::C;
  std::string body;
  std::size_t byte_begin = 0;  // [begin, end) into the raw file bytes
  std::size_t byte_end = 0;
};

struct FunctionInventory {
  std::string snapshot_id;
  std::vector<FunctionRecord> functions;  // ordered by FunctionId

  std::size_t n() const noexcept { return functions.size(); }
  FunctionIdSet ids() const;
  bool contains(const FunctionId& id) const;
};

}  // namespace rvd
