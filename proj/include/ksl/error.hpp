// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ksl {

enum class ErrorCode {
  InvalidArgument = 1,
  Io = 2,
  SolverFailure = 3,
  Blowup = 4,
  Internal = 5,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

/// Raised by the time integrator; carries the simulation time of failure.
class RunError : public Error {
public:
  RunError(ErrorCode code, const std::string& what, double time)
      : Error(code, what), time_(time) {}
  double time() const { return time_; }

private:
  double time_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, msg);
}

}  // namespace ksl
