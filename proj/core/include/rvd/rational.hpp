#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rvd {

/// Exact positive fraction, stored reduced.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  /// "2/3", "4/5" or an integer; decimal text such as "0.5" is also taken
  /// and converted exactly.
  static Rational parse(std::string_view text);
  std::string str() const;

  bool operator==(const Rational&) const = default;
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den <
           static_cast<__int128>(b.num) * a.den;
  }
};

}  // namespace rvd
