// Copyright (c) 2026 vlsmperm developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace vlsm {

// Error kinds map onto CLI exit codes: validation -> 2, runtime -> 3.
enum class ErrorKind { validation, runtime };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message, std::string file = {})
      : std::runtime_error(message), kind_(kind), file_(std::move(file)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Offending file path, when the error concerns a specific input file.
  const std::string& file() const noexcept { return file_; }

private:
  ErrorKind kind_;
  std::string file_;
};

class ValidationError : public Error {
public:
  explicit ValidationError(std::string message, std::string file = {})
      : Error(ErrorKind::validation, std::move(message), std::move(file)) {}
};

class RuntimeError : public Error {
public:
  explicit RuntimeError(std::string message, std::string file = {})
      : Error(ErrorKind::runtime, std::move(message), std::move(file)) {}
};

}  // namespace vlsm
