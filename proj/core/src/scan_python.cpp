// Python function scanner. The source is tokenized into logical lines
// (brackets, backslash continuations and triple-quoted strings join physical
// lines; comments and blank lines vanish), then blocks are closed by
// indentation.

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "rvd/slicer.hpp"

namespace rvd {

namespace {

struct PyToken {
  std::string_view text;
  std::size_t begin;
  std::size_t end;
  int line;      // line of the first byte
  int end_line;  // line of the last byte
  bool string = false;
};

struct LogicalLine {
  std::vector<PyToken> tokens;
  int indent = 0;  // columns, tabs to the next multiple of 8
};

bool py_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool py_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool string_prefix(std::string_view word) {
  if (word.size() > 2) return false;
  for (char ch : word) {
    switch (std::tolower(static_cast<unsigned char>(ch))) {
      case 'r': case 'b': case 'u': case 'f':
        break;
      default:
        return false;
    }
  }
  return true;
}

class PyLexer {
 public:
  explicit PyLexer(std::string_view s) : s_(s) {}

  std::vector<LogicalLine> run() {
    while (i_ < s_.size()) step();
    flush();
    return std::move(lines_);
  }

 private:
  void step() {
    const auto c = static_cast<unsigned char>(s_[i_]);
    if (c == '\n') {
      ++line_;
      ++i_;
      line_begin_ = i_;
      if (depth_ == 0) flush();
      return;
    }
    if (c == '\\' && i_ + 1 < s_.size() && (s_[i_ + 1] == '\n' || s_[i_ + 1] == '\r')) {
      i_ += 1;
      if (s_[i_] == '\r') ++i_;
      if (i_ < s_.size() && s_[i_] == '\n') ++i_;
      ++line_;
      line_begin_ = i_;
      return;
    }
    if (std::isspace(c)) {
      ++i_;
      return;
    }
    if (c == '#') {
      while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      return;
    }
    if (c == '"' || c == '\'') {
      string_at(i_, i_);
      return;
    }
    if (py_ident_start(c)) {
      std::size_t k = i_ + 1;
      while (k < s_.size() && py_ident_char(static_cast<unsigned char>(s_[k]))) ++k;
      auto word = s_.substr(i_, k - i_);
      if (k < s_.size() && (s_[k] == '"' || s_[k] == '\'') && string_prefix(word)) {
        string_at(i_, k);
        return;
      }
      push(i_, k, line_, false);
      i_ = k;
      return;
    }
    if (std::isdigit(c)) {
      std::size_t k = i_ + 1;
      while (k < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[k])) || s_[k] == '.' || s_[k] == '_')) ++k;
      push(i_, k, line_, false);
      i_ = k;
      return;
    }
    if (c == '(' || c == '[' || c == '{') ++depth_;
    if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
    std::size_t len = (s_.substr(i_, 2) == "->") ? 2 : 1;
    push(i_, i_ + len, line_, false);
    i_ += len;
  }

  // A string literal whose prefix starts at `begin` and quote at `quote`.
  void string_at(std::size_t begin, std::size_t quote) {
    const char q = s_[quote];
    const bool triple = s_.substr(quote, 3) == std::string(3, q);
    std::size_t k = quote + (triple ? 3 : 1);
    const int start_line = line_;
    while (k < s_.size()) {
      const char ch = s_[k];
      if (ch == '\\' && k + 1 < s_.size()) {
        if (s_[k + 1] == '\n') {
          ++line_;
          line_begin_ = k + 2;
        }
        k += 2;
        continue;
      }
      if (ch == '\n') {
        if (!triple) break;  // unterminated; recover at end of line
        ++line_;
        line_begin_ = k + 1;
      }
      if (ch == q && (!triple || s_.substr(k, 3) == std::string(3, q))) {
        k += triple ? 3 : 1;
        break;
      }
      ++k;
    }
    k = std::min(k, s_.size());
    push(begin, k, start_line, true);
    i_ = k;
  }

  void push(std::size_t b, std::size_t e, int first_line, bool is_string) {
    if (current_.tokens.empty()) current_.indent = column_of(b);
    current_.tokens.push_back({s_.substr(b, e - b), b, e, first_line, line_, is_string});
  }

  int column_of(std::size_t pos) const {
    std::size_t start = s_.rfind('\n', pos == 0 ? 0 : pos - 1);
    start = (start == std::string_view::npos || pos == 0) ? 0 : start + 1;
    int col = 0;
    for (std::size_t k = start; k < pos; ++k) {
      if (s_[k] == '\t')
        col = (col / 8 + 1) * 8;
      else if (s_[k] == '\f')
        col = 0;
      else
        ++col;
    }
    return col;
  }

  void flush() {
    if (!current_.tokens.empty()) lines_.push_back(std::move(current_));
    current_ = {};
    depth_ = 0;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::size_t line_begin_ = 0;
  int line_ = 1;
  int depth_ = 0;
  LogicalLine current_;
  std::vector<LogicalLine> lines_;
};

struct OpenBlock {
  int indent;
  bool is_def;
  std::string name;  // qualified
  std::size_t begin;
  int start_line;
};

// Index of the header's ':' (bracket depth 0) or npos.
std::size_t header_colon(const LogicalLine& l, std::size_t from) {
  int depth = 0;
  for (std::size_t k = from; k < l.tokens.size(); ++k) {
    const auto& t = l.tokens[k];
    if (t.string) continue;
    if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
    if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
    if (depth == 0 && t.text == ":") return k;
  }
  return std::string_view::npos;
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

ScanResult scan_python(std::string_view source) {
  const auto lines = PyLexer(source).run();
  ScanResult result;
  std::vector<OpenBlock> open;
  const PyToken* last = nullptr;  // final token of the previous logical line

  auto close_until = [&](int indent) {
    while (!open.empty() && open.back().indent >= indent) {
      const auto& b = open.back();
      if (b.is_def && last != nullptr)
        result.functions.push_back({b.name, b.begin, last->end, b.start_line, last->end_line});
      open.pop_back();
    }
  };
  auto scope_name = [&](std::string_view leaf) {
    return open.empty() ? std::string(leaf) : open.back().name + "." + std::string(leaf);
  };

  for (const auto& l : lines) {
    close_until(l.indent);
    const auto& t = l.tokens;
    std::size_t k = 0;
    if (t[0].text == "async" && t.size() > 1 && t[1].text == "def") k = 1;
    const bool is_def = t[k].text == "def";
    const bool is_class = k == 0 && t[0].text == "class";
    if ((is_def || is_class) && k + 1 < t.size() && !t[k + 1].string &&
        py_ident_start(static_cast<unsigned char>(t[k + 1].text[0]))) {
      auto colon = header_colon(l, k + 2);
      const auto name = scope_name(t[k + 1].text);
      if (colon != std::string_view::npos && colon + 1 < t.size()) {
        // One-line suite: "def f(): return 1".
        if (is_def)
          result.functions.push_back({name, t[0].begin, t.back().end, t[0].line, t.back().end_line});
      } else if (colon == std::string_view::npos) {
        ++result.skipped_regions;
      } else {
        open.push_back({l.indent, is_def, name, t[0].begin, t[0].line});
      }
    }
    last = &t.back();
  }
  close_until(-1);
  sort_outer_first(result.functions);
  return result;
}

}  // namespace rvd
