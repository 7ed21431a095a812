#pragma once

#include <stdexcept>
#include <string>

#include "ddc/sdp.hpp"

namespace ddc {

// Input that violates an operation's preconditions (dimensions, ranges).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotIdentifiable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntersectionFailed : std::runtime_error {
  IntersectionFailed(const std::string& what, sdp::Status s) : std::runtime_error(what), status(s) {}
  sdp::Status status;
};

struct SynthesisInfeasible : std::runtime_error {
  SynthesisInfeasible(const std::string& what, sdp::Status s) : std::runtime_error(what), status(s) {}
  sdp::Status status;
};

struct InvalidSchedule : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DiagnosticUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config validation error anchored at a line of the source file (0 if unknown).
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& what, int line_no)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what),
        line(line_no) {}
  int line;
};

}  // namespace ddc
