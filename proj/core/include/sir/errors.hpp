// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sir {

/// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class MissingFile : public IoError {
  public:
    explicit MissingFile(const std::string& path) : IoError("missing file: " + path) {}
};

/// Malformed input data; carries the offending file and 1-based line when known.
class ParseError : public Error {
  public:
    ParseError(const std::string& path, int line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}
    int line() const { return line_; }

  private:
    int line_ = -1;
};

class UnsupportedCameraKind : public Error {
  public:
    explicit UnsupportedCameraKind(const std::string& kind)
        : Error("unsupported camera kind: " + kind) {}
};

class UnsupportedFormat : public Error {
  public:
    using Error::Error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

class OutOfBounds : public Error {
  public:
    using Error::Error;
};

class OverflowError : public Error {
  public:
    using Error::Error;
};

class EmptyProxy : public Error {
  public:
    EmptyProxy() : Error("overlap scoring needs a nonempty proxy point set") {}
};

class NoSources : public Error {
  public:
    using Error::Error;
};

class DegenerateRange : public Error {
  public:
    using Error::Error;
};

class MissingGroundTruth : public Error {
  public:
    using Error::Error;
};

/// Violated precondition or invalid configuration value.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

}  // namespace sir
