#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "wia/errors.hpp"

namespace wia {

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`, so a
/// reader never sees a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace wia
