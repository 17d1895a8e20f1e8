#include "wia/value.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>

namespace wia {

namespace {
constexpr std::array<std::pair<ErrorKind, std::string_view>, 5> kErrorNames{{
    {ErrorKind::Div0, "DIV0"},
    {ErrorKind::Value, "VALUE"},
    {ErrorKind::Cycle, "CYCLE"},
    {ErrorKind::Ref, "REF"},
    {ErrorKind::Name, "NAME"},
}};
}  // namespace

std::string_view error_name(ErrorKind kind) {
  for (const auto& [k, name] : kErrorNames)
    if (k == kind) return name;
  return "VALUE";
}

bool parse_error_name(std::string_view text, ErrorKind& out) {
  for (const auto& [k, name] : kErrorNames) {
    if (name == text) {
      out = k;
      return true;
    }
  }
  return false;
}

bool bit_identical(const CellValue& a, const CellValue& b) {
  if (a.is_number() && b.is_number())
    return std::bit_cast<std::uint64_t>(a.as_number()) ==
           std::bit_cast<std::uint64_t>(b.as_number());
  return a == b;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string display_value(const CellValue& v) {
  if (v.is_empty()) return "";
  if (v.is_number()) return format_number(v.as_number());
  if (v.is_text()) return "\"" + v.as_text() + "\"";
  if (v.is_boolean()) return v.as_boolean() ? "TRUE" : "FALSE";
  return "#" + std::string(error_name(v.as_error()));
}

}  // namespace wia
