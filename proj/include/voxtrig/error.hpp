// Copyright 2026 The voxtrig Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace voxtrig {

// Error categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kInvalidInput,
  kFormat,
  kUnsupportedCodec,
  kIo,
  kConfig,
  kCapacity,
  kBackend,
  kIncompletePredictions,
  kInvalidVariant,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace voxtrig
