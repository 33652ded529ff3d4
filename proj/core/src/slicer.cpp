#include "rvd/slicer.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rvd/hash.hpp"
#include "rvd/text.hpp"

namespace rvd {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<FunctionRecord> slice_file(Language lang, const std::string& rel_path,
                                       std::string_view bytes,
                                       SliceWarnings* warnings) {
  auto scanned = scan_source(lang, bytes);
  if (warnings != nullptr && scanned.skipped_regions > 0) {
    warnings->skipped_regions += scanned.skipped_regions;
    warnings->messages.push_back(rel_path + ": " + std::to_string(scanned.skipped_regions) +
                                 " unparseable region(s) skipped");
  }
  std::vector<FunctionRecord> out;
  out.reserve(scanned.functions.size());
  for (auto& f : scanned.functions) {
    FunctionRecord rec;
    rec.language = lang;
    rec.byte_begin = f.byte_begin;
    rec.byte_end = f.byte_end;
    rec.body = lenient_utf8(bytes.substr(f.byte_begin, f.byte_end - f.byte_begin));
    rec.id.file = rel_path;
    rec.id.name = std::move(f.name);
    rec.id.start_line = f.start_line;
    rec.id.end_line = f.end_line;
    rec.id.body_hash = body_hash8(rec.body);
    out.push_back(std::move(rec));
  }
  return out;
}

FunctionInventory slice(const RepoSnapshot& snapshot, SliceWarnings* warnings) {
  FunctionInventory inv;
  inv.snapshot_id = snapshot.snapshot_id;
  const auto files = list_source_files(snapshot.root_path, snapshot.language);
  std::size_t readable = 0;
  for (const auto& rel : files) {
    std::string bytes;
    try {
      bytes = read_file(snapshot.root_path / rel);
    } catch (const DataError& e) {
      if (warnings != nullptr) {
        ++warnings->skipped_files;
        warnings->messages.push_back(e.what());
      }
      continue;
    }
    ++readable;
    auto records = slice_file(snapshot.language, rel, bytes, warnings);
    std::move(records.begin(), records.end(), std::back_inserter(inv.functions));
  }
  std::sort(inv.functions.begin(), inv.functions.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  if (readable > 0 && inv.functions.empty())
    throw DataError("no functions extracted from snapshot '" + snapshot.snapshot_id + "' (" +
                    std::to_string(readable) + " source files)");
  return inv;
}

namespace {

// Records of `file` form a contiguous run because of the inventory order.
std::pair<std::vector<FunctionRecord>::const_iterator,
          std::vector<FunctionRecord>::const_iterator>
file_range(const FunctionInventory& inventory, std::string_view file) {
  auto lo = std::lower_bound(inventory.functions.begin(), inventory.functions.end(), file,
                             [](const FunctionRecord& r, std::string_view f) { return r.id.file < f; });
  auto hi = std::upper_bound(lo, inventory.functions.end(), file,
                             [](std::string_view f, const FunctionRecord& r) { return f < r.id.file; });
  return {lo, hi};
}

}  // namespace

std::optional<FunctionId> locate(const FunctionInventory& inventory, std::string_view file,
                                 int line) {
  const FunctionId* best = nullptr;
  auto [lo, hi] = file_range(inventory, file);
  for (auto it = lo; it != hi && it->id.start_line <= line; ++it) {
    const auto& id = it->id;
    if (!id.contains_line(line)) continue;
    if (best == nullptr || id.span_length() < best->span_length() ||
        (id.span_length() == best->span_length() && best->start_line < id.start_line))
      best = &id;
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

std::vector<FunctionId> enclosing(const FunctionInventory& inventory, std::string_view file,
                                  int line) {
  std::vector<FunctionId> out;
  auto [lo, hi] = file_range(inventory, file);
  for (auto it = lo; it != hi && it->id.start_line <= line; ++it)
    if (it->id.contains_line(line)) out.push_back(it->id);
  return out;
}

void write_inventory(std::ostream& out, const FunctionInventory& inventory) {
  out << json{{"snapshot_id", inventory.snapshot_id}, {"n", inventory.n()}}.dump() << '\n';
  for (const auto& f : inventory.functions) {
    json rec = {
        {"id", f.id.str()},
        {"file", f.id.file},
        {"name", f.id.name},
        {"start_line", f.id.start_line},
        {"end_line", f.id.end_line},
        {"body_hash", f.id.body_hash},
        {"language", to_string(f.language)},
        {"byte_span", {f.byte_begin, f.byte_end}},
        {"body", f.body},
    };
    out << rec.dump() << '\n';
  }
}

FunctionInventory read_inventory(std::istream& in) {
  FunctionInventory inv;
  std::string line;
  std::size_t lineno = 0;
  std::size_t expected = 0;
  try {
    if (!std::getline(in, line)) throw DataError("inventory file is empty");
    ++lineno;
    auto header = json::parse(line);
    inv.snapshot_id = header.at("snapshot_id").get<std::string>();
    expected = header.at("n").get<std::size_t>();
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto rec = json::parse(line);
      FunctionRecord f;
      f.id = FunctionId::parse(rec.at("id").get<std::string>());
      f.language = parse_language(rec.at("language").get<std::string>());
      f.body = rec.at("body").get<std::string>();
      f.byte_begin = rec.at("byte_span").at(0).get<std::size_t>();
      f.byte_end = rec.at("byte_span").at(1).get<std::size_t>();
      inv.functions.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw DataError("inventory line " + std::to_string(lineno) + ": " + e.what());
  }
  if (inv.functions.size() != expected)
    throw DataError("inventory header says n=" + std::to_string(expected) + " but holds " +
                    std::to_string(inv.functions.size()) + " records");
  if (!std::is_sorted(inv.functions.begin(), inv.functions.end(),
                      [](const auto& a, const auto& b) { return a.id < b.id; }))
    throw DataError("inventory records are not in (file, start_line) order");
  return inv;
}

void save_inventory(const fs::path& path, const FunctionInventory& inventory) {
  std::ostringstream ss;
  write_inventory(ss, inventory);
  write_file(path, ss.str());
}

FunctionInventory load_inventory(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read inventory " + path.string());
  return read_inventory(in);
}

}  // namespace rvd
