// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace viewvote {

/// Base class for all viewvote errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an operation's arguments was violated.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file exists but its contents are malformed. Carries file/line context
/// in the message.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, long line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what) {}
  explicit ParseError(const std::string& what) : Error(what) {}
};

/// A segmenter implementation failed to produce a valid result.
class SegmentationError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; message is prefixed with the stage name.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(stage) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace viewvote
