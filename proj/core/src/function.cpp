#include "rvd/function.hpp"

#include <algorithm>
#include <charconv>

namespace rvd {

std::string FunctionId::str() const {
  return file + "#" + name + "#" + std::to_string(start_line) + "-" +
         std::to_string(end_line) + "#" + body_hash;
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("malformed function id '" + std::string(whole) + "'");
  return value;
}

}  // namespace

// Parsed from the right: file paths may contain '#', names never do.
FunctionId FunctionId::parse(std::string_view text) {
  auto bad = [&] {
    return DataError("malformed function id '" + std::string(text) + "'");
  };
  auto h = text.rfind('#');
  if (h == std::string_view::npos || h == 0) throw bad();
  auto r = text.rfind('#', h - 1);
  if (r == std::string_view::npos || r == 0) throw bad();
  auto n = text.rfind('#', r - 1);
  if (n == std::string_view::npos) throw bad();

  FunctionId id;
  id.file = std::string(text.substr(0, n));
  id.name = std::string(text.substr(n + 1, r - n - 1));
  id.body_hash = std::string(text.substr(h + 1));
  auto range = text.substr(r + 1, h - r - 1);
  auto dash = range.find('-');
  if (dash == std::string_view::npos) throw bad();
  id.start_line = parse_int(range.substr(0, dash), text);
  id.end_line = parse_int(range.substr(dash + 1), text);
  if (id.file.empty() || id.name.empty() || id.body_hash.size() != 8 ||
      id.start_line < 1 || id.start_line > id.end_line)
    throw bad();
  return id;
}

FunctionIdSet FunctionInventory::ids() const {
  FunctionIdSet out;
  for (const auto& f : functions) out.insert(f.id);
  return out;
}

bool FunctionInventory::contains(const FunctionId& id) const {
  auto it = std::lower_bound(
      functions.begin(), functions.end(), id,
      [](const FunctionRecord& r, const FunctionId& v) { return r.id < v; });
  return it != functions.end() && it->id == id;
}

}  // namespace rvd
