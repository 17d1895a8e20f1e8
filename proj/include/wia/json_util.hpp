#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "wia/errors.hpp"

namespace wia {

/// JSON pointer of the element the parser was reading when `text` stopped
/// being valid JSON ("" for the document root).
std::string syntax_error_path(std::string_view text);

/// Parses `text`; a syntax error becomes a SchemaError located by
/// syntax_error_path().
template <class Json = nlohmann::json>
Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(syntax_error_path(text),
                      "invalid JSON at byte " + std::to_string(e.byte));
  }
}

}  // namespace wia
