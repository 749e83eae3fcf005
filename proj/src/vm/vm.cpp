#include "subleq/vm.hpp"

#include <limits>

#include "subleq/error.hpp"

namespace subleq {

std::string_view fault_name(FaultReason reason) {
  switch (reason) {
    case FaultReason::address_out_of_range: return "AddressOutOfRange";
    case FaultReason::output_too_wide: return "OutputTooWide";
    case FaultReason::input_exhausted: return "InputExhausted";
  }
  return "Unknown";
}

VmState load_image(std::span<const Word> words, const VmConfig& config) {
  if (config.mem_words < 3)
    throw Error(Errc::invalid_params, "mem_words must be at least 3");
  if (config.mem_words > static_cast<std::size_t>(std::numeric_limits<Word>::max()))
    throw Error(Errc::invalid_params, "mem_words exceeds the addressable range");
  if (words.size() > config.mem_words)
    throw Error(Errc::image_too_large, std::to_string(words.size()) + " words do not fit into " +
                                           std::to_string(config.mem_words));
  VmState state;
  state.memory.assign(config.mem_words, 0);
  std::copy(words.begin(), words.end(), state.memory.begin());
  state.io_mode = config.io_mode;
  state.value_policy = config.out_of_range_value_policy;
  return state;
}

namespace {

StepOutcome fault(VmState& state, FaultReason reason) {
  state.terminal = Terminal{Terminal::Kind::fault, reason};
  return {StepOutcome::Kind::fault, 0, 0, reason};
}

StepOutcome halt(VmState& state) {
  state.terminal = Terminal{Terminal::Kind::halt, {}};
  return {StepOutcome::Kind::halted};
}

bool in_range(Word address, std::size_t size) {
  return address >= 0 && static_cast<std::size_t>(address) < size;
}

}  // namespace

StepOutcome step(VmState& state, std::optional<std::uint8_t> input) {
  if (state.terminal) {
    if (state.terminal->kind == Terminal::Kind::halt) return {StepOutcome::Kind::halted};
    return {StepOutcome::Kind::fault, 0, 0, state.terminal->reason};
  }
  auto& mem = state.memory;
  const std::size_t size = mem.size();
  if (state.ip < 0 || static_cast<std::size_t>(state.ip) + 2 >= size)
    return fault(state, FaultReason::address_out_of_range);

  const auto ip = static_cast<std::size_t>(state.ip);
  const Word a = mem[ip];
  const Word b = mem[ip + 1];
  const Word c = mem[ip + 2];

  if (state.io_mode == IoMode::hardware) {
    if (a < 0 || b < 0) {
      ++state.steps_executed;
      state.ip = -1;
      return halt(state);
    }
  } else if (b == -1) {
    if (!in_range(a, size)) return fault(state, FaultReason::address_out_of_range);
    Word value = mem[static_cast<std::size_t>(a)];
    if ((value < 0 || value > 255) && state.value_policy == ValuePolicy::strict)
      return fault(state, FaultReason::output_too_wide);
    ++state.steps_executed;
    state.ip += 3;
    return {StepOutcome::Kind::output, static_cast<std::uint8_t>(value & 0xff)};
  } else if (a == -1) {
    if (!in_range(b, size)) return fault(state, FaultReason::address_out_of_range);
    if (!input) return {StepOutcome::Kind::input_request, 0, b};
    mem[static_cast<std::size_t>(b)] = *input;
    ++state.steps_executed;
    state.ip += 3;
    return {StepOutcome::Kind::continued};
  }

  if (!in_range(a, size) || !in_range(b, size))
    return fault(state, FaultReason::address_out_of_range);

  Word& target = mem[static_cast<std::size_t>(b)];
  target = wrapping_sub(target, mem[static_cast<std::size_t>(a)]);
  ++state.steps_executed;
  state.ip = target > 0 ? state.ip + 3 : c;
  if (state.ip < 0) return halt(state);
  return {StepOutcome::Kind::continued};
}

namespace {

Termination terminal_to_termination(const Terminal& t) {
  if (t.kind == Terminal::Kind::halt) return {Termination::Kind::halt};
  return {Termination::Kind::fault, t.reason};
}

// Tight loop for the common case: both operands are in-range addresses.
// Anything else (I/O, negative operands, bad addresses) falls back to
// step(), which owns all the slow-path semantics.
RunProgress run_loop(VmState& state, std::span<const std::uint8_t> input,
                     std::uint64_t budget, std::string& out) {
  RunProgress progress;
  if (state.terminal) {
    progress.termination = terminal_to_termination(*state.terminal);
    return progress;
  }
  Word* mem = state.memory.data();
  const auto size = static_cast<std::uint32_t>(state.memory.size());
  const std::uint32_t last_ip = size - 3;
  std::uint64_t done = 0;

  for (;;) {
    std::uint32_t ip = static_cast<std::uint32_t>(state.ip);
    std::uint64_t fast = 0;
    const std::uint64_t fast_budget = budget - done;
    // The fast path never leaves ip negative: a negative jump exits to
    // the slow path below with state.ip untouched.
    while (fast < fast_budget && ip <= last_ip) {
      const Word a = mem[ip];
      const Word b = mem[ip + 1];
      if (static_cast<std::uint32_t>(a) >= size || static_cast<std::uint32_t>(b) >= size) break;
      const Word c = mem[ip + 2];
      const Word r = wrapping_sub(mem[b], mem[a]);
      mem[b] = r;
      ++fast;
      if (r > 0) {
        ip += 3;
      } else if (c >= 0) {
        ip = static_cast<std::uint32_t>(c);
      } else {
        state.ip = c;
        state.steps_executed += fast;
        done += fast;
        halt(state);
        progress.termination = {Termination::Kind::halt};
        progress.steps = done;
        return progress;
      }
    }
    state.ip = static_cast<Word>(ip);
    state.steps_executed += fast;
    done += fast;
    if (done >= budget) {
      progress.termination = {Termination::Kind::step_limit};
      progress.steps = done;
      return progress;
    }

    const std::uint32_t at = static_cast<std::uint32_t>(state.ip);
    const bool wants_input = state.io_mode == IoMode::interactive && at <= last_ip &&
                             mem[at] == -1 && mem[at + 1] != -1;
    std::optional<std::uint8_t> byte;
    if (wants_input && progress.input_consumed < input.size()) byte = input[progress.input_consumed];
    const StepOutcome outcome = step(state, byte);
    switch (outcome.kind) {
      case StepOutcome::Kind::continued:
        ++done;
        if (wants_input) ++progress.input_consumed;
        break;
      case StepOutcome::Kind::output:
        ++done;
        out.push_back(static_cast<char>(outcome.byte));
        break;
      case StepOutcome::Kind::halted:
        ++done;
        progress.termination = {Termination::Kind::halt};
        progress.steps = done;
        return progress;
      case StepOutcome::Kind::input_request:
        fault(state, FaultReason::input_exhausted);
        progress.termination = {Termination::Kind::fault, FaultReason::input_exhausted};
        progress.steps = done;
        return progress;
      case StepOutcome::Kind::fault:
        progress.termination = {Termination::Kind::fault, outcome.reason};
        progress.steps = done;
        return progress;
    }
  }
}

}  // namespace

RunProgress run_in_place(VmState& state, std::span<const std::uint8_t> input,
                         std::optional<std::uint64_t> max_steps, std::string& out) {
  return run_loop(state, input, max_steps.value_or(std::numeric_limits<std::uint64_t>::max()),
                  out);
}

RunResult run(VmState state, std::span<const std::uint8_t> input, const VmConfig& config) {
  RunResult result;
  const RunProgress progress = run_in_place(state, input, config.max_steps, result.output);
  result.termination = progress.termination;
  result.steps = progress.steps;
  result.final_state = std::move(state);
  return result;
}

RunResult run(VmState state, std::string_view input, const VmConfig& config) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(input.data());
  return run(std::move(state), std::span<const std::uint8_t>(bytes, input.size()), config);
}

std::vector<Word> dump(const VmState& state) { return state.memory; }

}  // namespace subleq
