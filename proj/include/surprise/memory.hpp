#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "surprise/backend.hpp"

namespace surprise {

/// Running narrative of what has happened in the video so far.
struct RollingMemory {
  std::string text;
  std::size_t word_budget = 200;
  std::size_t step_count = 0;
};

/// Caption for the newly observed frame in `ctx`.
std::string describe_event(Backend& backend, const Context& ctx);

/// Appends `caption`, then compresses through the backend if the result is
/// over budget. The returned memory is always within its word budget.
RollingMemory append_and_compress(RollingMemory mem, std::string_view caption, Backend& backend);

}  // namespace surprise
