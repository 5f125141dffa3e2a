#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace egofields {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Camera model string not among the supported pinhole-family models.
class UnsupportedCameraModel : public Error {
 public:
  using Error::Error;
};

// Fixed-point undistortion did not converge within the iteration cap.
class UndistortionError : public Error {
 public:
  using Error::Error;
};

// Rank-deficient linear system (collinear or coincident points).
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

class InsufficientMatches : public Error {
 public:
  using Error::Error;
};

// RANSAC found no model supported by at least four inliers.
class NoModelFound : public Error {
 public:
  using Error::Error;
};

class FrameReadError : public Error {
 public:
  FrameReadError(std::size_t index, const std::string& what)
      : Error("frame " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) +
              ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// JSON document violating the expected schema; path is a JSON pointer.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class ExternalToolError : public Error {
 public:
  ExternalToolError(const std::string& what, int exit_code, std::string stderr_text)
      : Error(what), exit_code_(exit_code), stderr_(std::move(stderr_text)) {}
  int exit_code() const { return exit_code_; }
  const std::string& stderr_text() const { return stderr_; }

 private:
  int exit_code_;
  std::string stderr_;
};

class LiftFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace egofields
