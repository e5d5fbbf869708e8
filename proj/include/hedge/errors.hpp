// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hedge {

// Process exit codes shared by the CLI and anything embedding it.
enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kJudge = 3,
  kDegenerate = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::kFailure)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// A QuestionCase violates one of its invariants.
class InvalidCase : public Error {
 public:
  explicit InvalidCase(const std::string& what) : Error(what, ExitCode::kValidation) {}
};

class EmptyPool : public Error {
 public:
  explicit EmptyPool(const std::string& what) : Error(what, ExitCode::kValidation) {}
};

class InsufficientSamples : public Error {
 public:
  explicit InsufficientSamples(const std::string& what) : Error(what, ExitCode::kValidation) {}
};

// Transport-level failure talking to a judge (bridge down, timeout, non-2xx).
class JudgeUnavailable : public Error {
 public:
  explicit JudgeUnavailable(const std::string& what) : Error(what, ExitCode::kJudge) {}
};

// The judge answered but the payload does not follow the wire protocol.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(what, ExitCode::kJudge) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what, ExitCode::kJudge) {}
};

// Only one label class present; ROC-AUC is undefined.
class DegenerateLabels : public Error {
 public:
  explicit DegenerateLabels(const std::string& what) : Error(what, ExitCode::kDegenerate) {}
};

}  // namespace hedge
