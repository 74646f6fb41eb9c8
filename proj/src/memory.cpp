#include "surprise/memory.hpp"

namespace surprise {

std::string describe_event(Backend& backend, const Context& ctx) {
  return backend.caption_event(ctx);
}

RollingMemory append_and_compress(RollingMemory mem, std::string_view caption, Backend& backend) {
  if (!caption.empty()) {
    if (!mem.text.empty()) mem.text += ' ';
    mem.text += caption;
  }
  if (word_count(mem.text) > mem.word_budget) {
    mem.text = backend.summarize(mem.text, mem.word_budget);
  }
  ++mem.step_count;
  return mem;
}

}  // namespace surprise
