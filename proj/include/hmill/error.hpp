#pragma once

#include <stdexcept>
#include <string>

namespace hmill {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or layer dimensions do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A data or model tree violates a structural invariant; `path()` locates it.
class StructureError : public Error {
 public:
  StructureError(std::string path, const std::string& what)
      : Error(display(path) + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

  static std::string display(const std::string& path) {
    return path.empty() ? std::string("(root)") : path;
  }

 private:
  std::string path_;
};

/// Raised by schema inference/merging and by extraction on kind conflicts.
class SchemaError : public StructureError {
 public:
  using StructureError::StructureError;
};

/// Malformed or incompatible serialized artifact (model, schema, TSV...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// I/O failure: unreadable input, unwritable output.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmill
