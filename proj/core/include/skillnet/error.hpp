#pragma once

#include <stdexcept>
#include <string>

namespace skillnet {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input file does not follow the expected layout (too many malformed rows, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A skill name is not part of the working vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

// Degenerate numerical input: zero-mention skills, zero-norm embeddings, collapsed geometry.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class ConnectivityError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage was invoked before the stage it depends on.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& what, std::string prerequisite)
      : Error(what), prerequisite_(std::move(prerequisite)) {}
  const std::string& prerequisite() const { return prerequisite_; }

 private:
  std::string prerequisite_;
};

// Cached artifacts were produced under a different configuration.
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

}  // namespace skillnet
