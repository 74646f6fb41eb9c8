#pragma once

#include <stdexcept>
#include <string>

namespace surprise {

enum class ErrorKind {
  InvalidInput,
  InvalidParameter,
  Shape,
  Transport,
  Protocol,
  Capability,
  RewardParse,
  Run,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the engine derives from this; `kind()` lets callers
// (the CLI in particular) map failures onto exit codes without RTTI chains.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::InvalidInput, what) {}
};

struct InvalidParameter : Error {
  explicit InvalidParameter(const std::string& what)
      : Error(ErrorKind::InvalidParameter, what) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

// Backend could not be reached. Carries how many attempts were made and
// whether another attempt might succeed.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts, bool retryable)
      : Error(ErrorKind::Transport, what), attempts_(attempts), retryable_(retryable) {}

  int attempts() const noexcept { return attempts_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int attempts_;
  bool retryable_;
};

struct ProtocolError : Error {
  explicit ProtocolError(const std::string& what) : Error(ErrorKind::Protocol, what) {}
};

struct CapabilityError : Error {
  explicit CapabilityError(const std::string& what) : Error(ErrorKind::Capability, what) {}
};

class RewardParseError : public Error {
 public:
  explicit RewardParseError(std::string raw)
      : Error(ErrorKind::RewardParse, "cannot parse reward from judge output: \"" + raw + "\""),
        raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

struct RunError : Error {
  explicit RunError(const std::string& what) : Error(ErrorKind::Run, what) {}
};

}  // namespace surprise
