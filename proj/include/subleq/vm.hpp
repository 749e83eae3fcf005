#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace subleq {

// The single value type of the machine: 32-bit two's complement. The one
// arithmetic operation (subtraction) wraps modulo 2^32.
using Word = std::int32_t;

inline Word wrapping_sub(Word lhs, Word rhs) noexcept {
  return static_cast<Word>(static_cast<std::uint32_t>(lhs) - static_cast<std::uint32_t>(rhs));
}

enum class IoMode {
  interactive,  // operand -1 in A or B position is input / output
  hardware,     // any negative A or B operand stops the processor
};

enum class ValuePolicy {
  strict,  // output outside 0..255 is a fault
  mask,    // output takes the low 8 bits
};

struct VmConfig {
  std::size_t mem_words = 1u << 16;
  IoMode io_mode = IoMode::interactive;
  ValuePolicy out_of_range_value_policy = ValuePolicy::strict;
  std::optional<std::uint64_t> max_steps;  // per run() call
};

enum class FaultReason {
  address_out_of_range,
  output_too_wide,
  input_exhausted,
};

std::string_view fault_name(FaultReason reason);

// Set once a state can no longer execute. Sticky: stepping a terminal
// state reports the same outcome again without touching memory.
struct Terminal {
  enum class Kind { halt, fault } kind = Kind::halt;
  FaultReason reason = FaultReason::address_out_of_range;
};

struct VmState {
  Word ip = 0;
  std::vector<Word> memory;
  std::uint64_t steps_executed = 0;
  IoMode io_mode = IoMode::interactive;
  ValuePolicy value_policy = ValuePolicy::strict;
  std::optional<Terminal> terminal;

  bool runnable() const noexcept { return !terminal.has_value(); }
};

struct StepOutcome {
  enum class Kind { continued, halted, output, input_request, fault };

  Kind kind = Kind::continued;
  std::uint8_t byte = 0;     // output
  Word target_address = 0;   // input_request
  FaultReason reason = FaultReason::address_out_of_range;

  bool operator==(const StepOutcome&) const = default;
};

struct Termination {
  enum class Kind { halt, fault, step_limit };

  Kind kind = Kind::halt;
  FaultReason reason = FaultReason::address_out_of_range;  // fault only

  bool operator==(const Termination&) const = default;
};

struct RunResult {
  Termination termination;
  std::string output;
  std::uint64_t steps = 0;  // executed during this call
  VmState final_state;
};

// Memory is the image padded with zeros to config.mem_words; ip = 0.
// Throws Error(image_too_large) when the image does not fit.
VmState load_image(std::span<const Word> words, const VmConfig& config);

// Executes exactly one instruction. In interactive mode an input
// instruction without `input` reports input_request and leaves the state
// untouched; the caller steps again with the byte.
StepOutcome step(VmState& state, std::optional<std::uint8_t> input = std::nullopt);

// Steps until halt, fault, or config.max_steps. Output bytes accumulate in
// order; input is consumed from the front. A step-limited state can be
// passed to run() again to continue.
RunResult run(VmState state, std::span<const std::uint8_t> input, const VmConfig& config);
RunResult run(VmState state, std::string_view input, const VmConfig& config);

// In-place variant of run() for callers that own a long-lived state
// (array slots). Returns the termination and appends output to `out`.
struct RunProgress {
  Termination termination;
  std::uint64_t steps = 0;
  std::size_t input_consumed = 0;
};
RunProgress run_in_place(VmState& state, std::span<const std::uint8_t> input,
                         std::optional<std::uint64_t> max_steps, std::string& out);

std::vector<Word> dump(const VmState& state);

}  // namespace subleq
