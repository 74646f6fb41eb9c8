#include "surprise/error.hpp"

namespace surprise {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Capability: return "capability";
    case ErrorKind::RewardParse: return "reward-parse";
    case ErrorKind::Run: return "run";
  }
  return "unknown";
}

}  // namespace surprise
