// Function scanners for the brace languages (Java and C). They work on raw,
// unpreprocessed text: comments, literals and (for C) preprocessor lines are
// dropped, and the remaining token stream is split into declaration units at
// ';', '{' and '}'. Each '{' is classified by the unit in front of it.

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvd/slicer.hpp"

namespace rvd {

namespace {

enum class Tok { Ident, Punct, Literal, Number };

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t begin;
  std::size_t end;
  int line;
};

bool ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}
bool ident_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}

struct LexOptions {
  bool preprocessor = false;  // C: drop '#' directive lines
  bool text_blocks = false;   // Java: """ ... """
};

std::vector<Token> lex(std::string_view s, LexOptions opt) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  bool line_start = true;  // only whitespace seen since the last newline

  auto advance_newlines = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to; ++k)
      if (s[k] == '\n') ++line;
  };

  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == '\n') {
      ++line;
      ++i;
      line_start = true;
      continue;
    }
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (opt.preprocessor && line_start && c == '#') {
      // Directive runs to an unescaped newline; comments inside are skipped.
      std::size_t k = i;
      while (k < s.size()) {
        if (s[k] == '\\' && k + 1 < s.size() &&
            (s[k + 1] == '\n' || (s[k + 1] == '\r' && k + 2 < s.size() && s[k + 2] == '\n'))) {
          k += (s[k + 1] == '\n') ? 2 : 3;
          continue;
        }
        if (s[k] == '/' && k + 1 < s.size() && s[k + 1] == '*') {
          auto close = s.find("*/", k + 2);
          k = (close == std::string_view::npos) ? s.size() : close + 2;
          continue;
        }
        if (s[k] == '\n') break;
        ++k;
      }
      advance_newlines(i, k);
      i = k;
      continue;
    }
    line_start = false;
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      auto close = s.find("*/", i + 2);
      auto stop = (close == std::string_view::npos) ? s.size() : close + 2;
      advance_newlines(i, stop);
      i = stop;
      continue;
    }
    if (opt.text_blocks && s.substr(i, 3) == "\"\"\"") {
      std::size_t k = i + 3;
      while (k < s.size()) {
        if (s[k] == '\\') {
          k += 2;
          continue;
        }
        if (s.substr(k, 3) == "\"\"\"") {
          k += 3;
          break;
        }
        ++k;
      }
      k = std::min(k, s.size());
      out.push_back({Tok::Literal, s.substr(i, k - i), i, k, line});
      advance_newlines(i, k);
      i = k;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t k = i + 1;
      while (k < s.size() && s[k] != static_cast<char>(c) && s[k] != '\n') {
        if (s[k] == '\\' && k + 1 < s.size()) {
          // A backslash-newline continues the literal in C.
          if (s[k + 1] == '\n') ++line;
          k += 2;
          continue;
        }
        ++k;
      }
      if (k < s.size() && s[k] == static_cast<char>(c)) ++k;
      out.push_back({Tok::Literal, s.substr(i, k - i), i, k, line});
      i = k;
      continue;
    }
    if (ident_start(c)) {
      std::size_t k = i + 1;
      while (k < s.size() && ident_char(static_cast<unsigned char>(s[k]))) ++k;
      out.push_back({Tok::Ident, s.substr(i, k - i), i, k, line});
      i = k;
      continue;
    }
    if (std::isdigit(c) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t k = i + 1;
      while (k < s.size()) {
        const auto d = static_cast<unsigned char>(s[k]);
        if (std::isalnum(d) || d == '.' || d == '_' || d == '\'') {
          ++k;
        } else if ((d == '+' || d == '-') && (s[k - 1] == 'e' || s[k - 1] == 'E' ||
                                              s[k - 1] == 'p' || s[k - 1] == 'P')) {
          ++k;
        } else {
          break;
        }
      }
      out.push_back({Tok::Number, s.substr(i, k - i), i, k, line});
      i = k;
      continue;
    }
    // Two-character operators that matter for classification; '<' and '>'
    // stay single so generic brackets balance.
    static constexpr std::array<std::string_view, 8> kTwo = {
        "==", "!=", "<=", ">=", "->", "::", "&&", "||"};
    std::size_t len = 1;
    for (auto op : kTwo)
      if (s.substr(i, 2) == op) len = 2;
    out.push_back({Tok::Punct, s.substr(i, len), i, i + len, line});
    i += len;
  }
  return out;
}

bool is(const Token& t, std::string_view text) { return t.text == text; }

bool any_of(std::string_view word, std::initializer_list<std::string_view> list) {
  return std::find(list.begin(), list.end(), word) != list.end();
}

// Index of the '(' matching the ')' at `close`, or npos.
std::size_t match_open(const std::vector<Token>& t, std::size_t lo, std::size_t close) {
  int depth = 0;
  for (std::size_t k = close + 1; k-- > lo;) {
    if (is(t[k], ")")) ++depth;
    if (is(t[k], "(") && --depth == 0) return k;
  }
  return std::string_view::npos;
}

// ---------------------------------------------------------------- Java ----

const std::initializer_list<std::string_view> kJavaNotNames = {
    "if",     "while",   "for",    "switch",       "catch",     "synchronized",
    "return", "new",     "throw",  "super",        "this",      "try",
    "do",     "else",    "assert", "instanceof",   "case",      "default"};

enum class JFrame { Class, Enum, Anon, Method, Block };

struct JavaFrame {
  JFrame kind;
  std::string name;
  std::size_t decl_begin = 0;  // token index where the declaration starts
  bool enum_constants = false;
};

bool is_class_body(JFrame k) {
  return k == JFrame::Class || k == JFrame::Enum || k == JFrame::Anon;
}

// "new T(...) {": returns the type's simple name, or empty.
std::string anon_class_type(const std::vector<Token>& t, std::size_t lo, std::size_t brace) {
  if (brace == lo || !is(t[brace - 1], ")")) return {};
  auto open = match_open(t, lo, brace - 1);
  if (open == std::string_view::npos || open == lo) return {};
  std::size_t k = open;
  std::string simple;
  while (k > lo) {
    const auto& prev = t[k - 1];
    if (is(prev, ">")) {
      int depth = 0;
      std::size_t m = k;
      while (m > lo) {
        --m;
        if (is(t[m], ">")) ++depth;
        if (is(t[m], "<") && --depth == 0) break;
      }
      if (depth != 0) return {};
      k = m;
      continue;
    }
    if (prev.kind == Tok::Ident && !is(prev, "new")) {
      if (simple.empty()) simple = std::string(prev.text);
      --k;
      continue;
    }
    if (is(prev, ".")) {
      --k;
      continue;
    }
    break;
  }
  if (k > lo && is(t[k - 1], "new") && !simple.empty()) return simple;
  return {};
}

struct ClassDecl {
  JFrame kind;
  std::string name;
};

std::optional<ClassDecl> class_decl(const std::vector<Token>& t, std::size_t lo, std::size_t hi) {
  for (std::size_t k = lo; k + 1 < hi; ++k) {
    const auto& w = t[k];
    if (w.kind != Tok::Ident || t[k + 1].kind != Tok::Ident) continue;
    if (k > lo && is(t[k - 1], ".")) continue;
    if (is(w, "class") || is(w, "interface"))
      return ClassDecl{JFrame::Class, std::string(t[k + 1].text)};
    if (is(w, "enum")) return ClassDecl{JFrame::Enum, std::string(t[k + 1].text)};
    if (is(w, "record") && k + 2 < hi && (is(t[k + 2], "(") || is(t[k + 2], "<")))
      return ClassDecl{JFrame::Class, std::string(t[k + 1].text)};
  }
  return std::nullopt;
}

// Method or constructor header "... name(params) [throws A, B] [[]]".
std::optional<std::string> method_name(const std::vector<Token>& t, std::size_t lo, std::size_t hi) {
  if (hi == lo) return std::nullopt;
  // Walk back over a throws clause or old-style array dims to the ')'.
  std::size_t k = hi;
  std::size_t throws_at = std::string_view::npos;
  for (std::size_t m = lo; m < hi; ++m)
    if (is(t[m], "throws")) throws_at = m;
  if (throws_at != std::string_view::npos) {
    for (std::size_t m = throws_at + 1; m < hi; ++m) {
      const auto& x = t[m];
      if (!(x.kind == Tok::Ident || is(x, ".") || is(x, ",") || is(x, "<") ||
            is(x, ">") || is(x, "?")))
        return std::nullopt;
    }
    k = throws_at;
  }
  while (k > lo && (is(t[k - 1], "]") || is(t[k - 1], "["))) --k;
  if (k == lo || !is(t[k - 1], ")")) return std::nullopt;
  auto open = match_open(t, lo, k - 1);
  if (open == std::string_view::npos || open == lo) return std::nullopt;
  const auto& name = t[open - 1];
  if (name.kind != Tok::Ident || any_of(name.text, kJavaNotNames)) return std::nullopt;
  int depth = 0;
  for (std::size_t m = lo; m < open; ++m) {
    if (is(t[m], "(")) ++depth;
    if (is(t[m], ")")) --depth;
    if (depth == 0 && (is(t[m], "=") || is(t[m], "->"))) return std::nullopt;
  }
  return std::string(name.text);
}

// Record compact constructor: "[@Ann] [modifiers] Name {".
bool compact_constructor(const std::vector<Token>& t, std::size_t lo, std::size_t hi,
                         const std::string& class_name) {
  if (hi == lo || t[hi - 1].text != class_name) return false;
  for (std::size_t k = lo; k + 1 < hi; ++k)
    if (!(t[k].kind == Tok::Ident || is(t[k], "@"))) return false;
  return true;
}

// "A, B(1) {" names the constant B; falls back to anon$.
std::string enum_constant_name(const std::vector<Token>& t, std::size_t lo, std::size_t brace) {
  std::size_t k = brace;
  if (k > lo && is(t[k - 1], ")")) {
    auto open = match_open(t, lo, k - 1);
    if (open == std::string_view::npos) return "anon$";
    k = open;
  }
  if (k > lo && t[k - 1].kind == Tok::Ident) return std::string(t[k - 1].text);
  return "anon$";
}

std::string qualified(const std::vector<JavaFrame>& stack, const std::string& leaf) {
  std::string out;
  for (const auto& f : stack) {
    if (f.kind == JFrame::Block) continue;
    out += f.name;
    out += '.';
  }
  return out + leaf;
}

}  // namespace

namespace {

// Source order, enclosing definitions before the ones nested in them.
void sort_outer_first(std::vector<ScannedFunction>& fns) {
  std::sort(fns.begin(), fns.end(), [](const ScannedFunction& a, const ScannedFunction& b) {
    return a.byte_begin != b.byte_begin ? a.byte_begin < b.byte_begin : a.byte_end > b.byte_end;
  });
}

}  // namespace

ScanResult scan_java(std::string_view source) {
  const auto t = lex(source, {.preprocessor = false, .text_blocks = true});
  ScanResult result;
  // The file scope behaves like a block that may hold class declarations.
  std::vector<JavaFrame> stack;
  std::size_t unit = 0;

  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& tok = t[i];
    if (is(tok, ";")) {
      if (!stack.empty() && stack.back().kind == JFrame::Enum) stack.back().enum_constants = false;
      unit = i + 1;
    } else if (is(tok, "{")) {
      const bool in_class = !stack.empty() && is_class_body(stack.back().kind);
      JavaFrame frame{JFrame::Block, {}, unit};
      if (auto anon = anon_class_type(t, unit, i); !anon.empty()) {
        frame.kind = JFrame::Anon;
        frame.name = "anon$" + anon;
      } else if (auto decl = class_decl(t, unit, i)) {
        frame.kind = decl->kind;
        frame.name = decl->name;
        frame.enum_constants = decl->kind == JFrame::Enum;
      } else if (in_class && stack.back().enum_constants) {
        frame.kind = JFrame::Anon;  // enum constant with a body
        frame.name = enum_constant_name(t, unit, i);
      } else if (in_class) {
        if (auto name = method_name(t, unit, i)) {
          frame.kind = JFrame::Method;
          frame.name = *name;
        } else if (stack.back().kind == JFrame::Class &&
                   compact_constructor(t, unit, i, stack.back().name)) {
          frame.kind = JFrame::Method;
          frame.name = stack.back().name;
        }
      }
      stack.push_back(std::move(frame));
      unit = i + 1;
    } else if (is(tok, "}")) {
      if (stack.empty()) {
        ++result.skipped_regions;
      } else {
        auto frame = std::move(stack.back());
        stack.pop_back();
        if (frame.kind == JFrame::Method && frame.decl_begin < t.size()) {
          const auto& first = t[frame.decl_begin];
          result.functions.push_back({qualified(stack, frame.name), first.begin,
                                      tok.end, first.line, tok.line});
        }
      }
      unit = i + 1;
    }
  }
  for (const auto& f : stack)
    if (f.kind == JFrame::Method) ++result.skipped_regions;
  sort_outer_first(result.functions);
  return result;
}

// ------------------------------------------------------------------- C ----

namespace {

const std::initializer_list<std::string_view> kCNotNames = {
    "if",        "while",         "for",        "switch",       "return",
    "sizeof",    "typeof",        "__typeof__", "__attribute__", "__declspec",
    "alignas",   "_Alignas",      "__asm__",    "asm",          "__asm",
    "_Static_assert", "static_assert", "void",   "int",          "char",
    "short",     "long",          "float",      "double",       "signed",
    "unsigned",  "_Bool",         "const",      "volatile",     "static",
    "extern",    "inline",        "struct",     "union",        "enum",
    "register",  "restrict",      "__inline",   "__inline__",   "_Noreturn",
    "__extension__", "defined",   "__alignof__", "_Alignof"};

// Name of the function declared by tokens [lo, hi) followed by '{'.
std::optional<std::string> c_function_name(const std::vector<Token>& t, std::size_t lo, std::size_t hi) {
  if (hi == lo) return std::nullopt;
  if (is(t[lo], "typedef")) return std::nullopt;
  const auto& last = t[hi - 1];
  if (!(is(last, ")") || last.kind == Tok::Ident)) return std::nullopt;

  int depth = 0;
  std::vector<std::size_t> groups;  // depth-0 '(' positions
  for (std::size_t k = lo; k < hi; ++k) {
    if (is(t[k], "(")) {
      if (depth == 0) groups.push_back(k);
      ++depth;
    } else if (is(t[k], ")")) {
      --depth;
    } else if (depth == 0 && (is(t[k], "=") || is(t[k], ","))) {
      return std::nullopt;
    }
  }
  if (depth != 0 || groups.empty()) return std::nullopt;
  auto named = [&](std::size_t open) {
    return open > lo && t[open - 1].kind == Tok::Ident &&
           !any_of(t[open - 1].text, kCNotNames);
  };
  for (auto it = groups.rbegin(); it != groups.rend(); ++it)
    if (named(*it)) return std::string(t[*it - 1].text);
  // Declarators such as "int (*get(int))(void)" nest the name deeper.
  for (std::size_t k = lo; k < hi; ++k)
    if (is(t[k], "(") && named(k)) return std::string(t[k - 1].text);
  return std::nullopt;
}

}  // namespace

ScanResult scan_c(std::string_view source) {
  const auto t = lex(source, {.preprocessor = true, .text_blocks = false});
  ScanResult result;
  std::size_t unit = 0;
  int transparent = 0;  // open extern "C" { blocks

  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& tok = t[i];
    if (is(tok, ";")) {
      unit = i + 1;
      continue;
    }
    if (is(tok, "}")) {
      if (transparent > 0)
        --transparent;
      else
        ++result.skipped_regions;
      unit = i + 1;
      continue;
    }
    if (!is(tok, "{")) continue;

    if (i - unit == 2 && is(t[unit], "extern") && t[unit + 1].kind == Tok::Literal) {
      ++transparent;
      unit = i + 1;
      continue;
    }
    auto name = c_function_name(t, unit, i);
    // Skip to the matching '}' whether this is a function body or some other
    // top-level brace block (struct, initializer, ...).
    int depth = 0;
    std::size_t close = t.size();
    for (std::size_t k = i; k < t.size(); ++k) {
      if (is(t[k], "{")) ++depth;
      if (is(t[k], "}") && --depth == 0) {
        close = k;
        break;
      }
    }
    if (close == t.size()) {
      ++result.skipped_regions;
      break;
    }
    if (name) {
      const auto& first = t[unit];
      result.functions.push_back({*name, first.begin, t[close].end, first.line, t[close].line});
    }
    // Tokens after a struct or initializer block up to its ';' form a unit
    // of their own ("} v;"), so a later definition never inherits them.
    unit = close + 1;
    i = close;
  }
  sort_outer_first(result.functions);
  return result;
}

ScanResult scan_source(Language lang, std::string_view source) {
  switch (lang) {
    case Language::Java:
      return scan_java(source);
    case Language::C:
      return scan_c(source);
    case Language::Python:
      return scan_python(source);
  }
  return {};
}

}  // namespace rvd
