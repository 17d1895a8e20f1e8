#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wia {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedAddress : public Error {
 public:
  explicit MalformedAddress(const std::string& text)
      : Error("malformed cell address: '" + text + "'"), text_(text) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Workbook document does not match the canonical schema. `path` is a JSON
/// pointer to the offending element.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)), message_(message) {}
  const std::string& path() const { return path_; }
  /// The message without the path prefix.
  const std::string& message() const { return message_; }

 private:
  std::string path_;
  std::string message_;
};

class DuplicateCell : public Error {
 public:
  explicit DuplicateCell(const std::string& address)
      : Error("duplicate cell " + address), address_(address) {}
  const std::string& address() const { return address_; }

 private:
  std::string address_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected,
             const std::string& message)
      : Error(message), offset_(offset), expected_(std::move(expected)) {}
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class UnknownFunction : public ParseError {
 public:
  UnknownFunction(std::size_t offset, const std::string& name)
      : ParseError(offset, {}, "unknown function '" + name + "' at offset " +
                                   std::to_string(offset)),
        name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class UnknownSlot : public Error {
 public:
  explicit UnknownSlot(std::size_t ordinal)
      : Error("no numeric literal with ordinal " + std::to_string(ordinal)),
        ordinal_(ordinal) {}
  std::size_t ordinal() const { return ordinal_; }

 private:
  std::size_t ordinal_;
};

/// One or more formula cells failed to parse. Each entry pairs the printed
/// address with the parser's message.
class ParseFailure : public Error {
 public:
  struct Entry {
    std::string address;
    std::string message;
  };
  explicit ParseFailure(std::vector<Entry> entries)
      : Error(describe(entries)), entries_(std::move(entries)) {}
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  static std::string describe(const std::vector<Entry>& entries) {
    std::string out = "formula parse failure";
    for (const auto& e : entries) out += "\n  " + e.address + ": " + e.message;
    return out;
  }
  std::vector<Entry> entries_;
};

class UnknownCell : public Error {
 public:
  explicit UnknownCell(const std::string& address)
      : Error("unknown cell " + address), address_(address) {}
  const std::string& address() const { return address_; }

 private:
  std::string address_;
};

}  // namespace wia
