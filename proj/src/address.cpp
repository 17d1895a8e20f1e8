#include "wia/address.hpp"

#include <cctype>

#include "wia/errors.hpp"

namespace wia {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(a[i])) !=
        std::toupper(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

std::string column_name(std::int32_t col) {
  std::string out;
  while (col > 0) {
    const int rem = (col - 1) % 26;
    out.insert(out.begin(), static_cast<char>('A' + rem));
    col = (col - 1) / 26;
  }
  return out;
}

std::int32_t column_index(std::string_view letters) {
  if (letters.empty() || letters.size() > 3) return 0;
  std::int32_t col = 0;
  for (char c : letters) {
    if (!is_alpha(c)) return 0;
    col = col * 26 + (std::toupper(static_cast<unsigned char>(c)) - 'A' + 1);
  }
  return col <= kMaxCol ? col : 0;
}

bool try_parse_a1(std::string_view token, CellAddress& out) {
  std::size_t i = 0;
  bool col_abs = false;
  bool row_abs = false;
  if (i < token.size() && token[i] == '$') {
    col_abs = true;
    ++i;
  }
  const std::size_t col_begin = i;
  while (i < token.size() && is_alpha(token[i])) ++i;
  const std::string_view letters = token.substr(col_begin, i - col_begin);
  if (i < token.size() && token[i] == '$') {
    row_abs = true;
    ++i;
  }
  const std::size_t row_begin = i;
  while (i < token.size() && is_digit(token[i])) ++i;
  if (i != token.size() || row_begin == i || letters.empty()) return false;
  if (token[row_begin] == '0') return false;
  const std::string_view digits = token.substr(row_begin);
  if (digits.size() > 7) return false;
  std::int64_t row = 0;
  for (char c : digits) row = row * 10 + (c - '0');
  const std::int32_t col = column_index(letters);
  if (col == 0 || row < 1 || row > kMaxRow) return false;
  out.row = static_cast<std::int32_t>(row);
  out.col = col;
  out.row_absolute = row_abs;
  out.col_absolute = col_abs;
  return true;
}

bool sheet_needs_quotes(std::string_view name) {
  if (name.empty()) return true;
  if (!(is_alpha(name[0]) || name[0] == '_')) return true;
  for (char c : name) {
    if (!(is_alpha(c) || is_digit(c) || c == '_')) return true;
  }
  return false;
}

std::string quote_sheet(std::string_view name) {
  if (!sheet_needs_quotes(name)) return std::string(name);
  std::string out = "'";
  for (char c : name) {
    out += c;
    if (c == '\'') out += '\'';
  }
  out += '\'';
  return out;
}

CellAddress parse_address(std::string_view text, std::string_view default_sheet) {
  CellAddress out;
  std::string_view rest = text;
  if (!text.empty() && text.front() == '\'') {
    std::string sheet;
    std::size_t i = 1;
    bool closed = false;
    while (i < text.size()) {
      if (text[i] == '\'') {
        if (i + 1 < text.size() && text[i + 1] == '\'') {
          sheet += '\'';
          i += 2;
          continue;
        }
        closed = true;
        ++i;
        break;
      }
      sheet += text[i++];
    }
    if (!closed || i >= text.size() || text[i] != '!' || sheet.empty())
      throw MalformedAddress(std::string(text));
    out.sheet = std::move(sheet);
    rest = text.substr(i + 1);
  } else if (auto bang = text.find('!'); bang != std::string_view::npos) {
    const std::string_view sheet = text.substr(0, bang);
    if (sheet.empty() || sheet_needs_quotes(sheet))
      throw MalformedAddress(std::string(text));
    out.sheet = std::string(sheet);
    rest = text.substr(bang + 1);
  } else {
    out.sheet = std::string(default_sheet);
  }
  if (out.sheet.empty() || !try_parse_a1(rest, out))
    throw MalformedAddress(std::string(text));
  return out;
}

std::string format_a1(const CellAddress& address) {
  std::string out;
  if (address.col_absolute) out += '$';
  out += column_name(address.col);
  if (address.row_absolute) out += '$';
  out += std::to_string(address.row);
  return out;
}

std::string format_address(const CellAddress& address) {
  return quote_sheet(address.sheet) + "!" + format_a1(address);
}

}  // namespace wia
