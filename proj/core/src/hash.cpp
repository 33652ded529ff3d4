#include "rvd/hash.hpp"

#include "rvd/text.hpp"

namespace rvd {

std::string to_hex(std::uint64_t value, int digits) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string body_hash8(std::string_view body) {
  return to_hex(fnv1a64(normalize_newlines(body))).substr(0, 8);
}

}  // namespace rvd
