#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvd/function.hpp"
#include "rvd/snapshot.hpp"

namespace rvd {

/// One function definition found by a language scanner, before it is tied
/// to a file and hashed.
struct ScannedFunction {
  std::string name;
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
  int start_line = 0;
  int end_line = 0;
};

struct ScanResult {
  std::vector<ScannedFunction> functions;
  int skipped_regions = 0;  // unbalanced or unparseable regions
};

ScanResult scan_java(std::string_view source);
ScanResult scan_c(std::string_view source);
ScanResult scan_python(std::string_view source);
ScanResult scan_source(Language lang, std::string_view source);

struct SliceWarnings {
  std::vector<std::string> messages;
  int skipped_files = 0;
  int skipped_regions = 0;
};

/// Builds the function inventory of one file's contents.
std::vector<FunctionRecord> slice_file(Language lang, const std::string& rel_path,
                                       std::string_view bytes,
                                       SliceWarnings* warnings = nullptr);

/// Deterministic function inventory of a whole snapshot. Throws DataError
/// when a non-empty source tree yields zero functions.
FunctionInventory slice(const RepoSnapshot& snapshot,
                        SliceWarnings* warnings = nullptr);

/// Innermost function whose span contains (file, line).
std::optional<FunctionId> locate(const FunctionInventory& inventory,
                                 std::string_view file, int line);

/// Every function whose span contains (file, line), outermost first.
std::vector<FunctionId> enclosing(const FunctionInventory& inventory,
                                  std::string_view file, int line);

// JSON-lines inventory files: a header line {"snapshot_id", "n"} followed by
// one record per line.
void write_inventory(std::ostream& out, const FunctionInventory& inventory);
FunctionInventory read_inventory(std::istream& in);
void save_inventory(const std::filesystem::path& path,
                    const FunctionInventory& inventory);
FunctionInventory load_inventory(const std::filesystem::path& path);

}  // namespace rvd
