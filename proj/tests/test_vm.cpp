#include <random>

#include "doctest.h"
#include "subleq/assembler.hpp"
#include "subleq/error.hpp"
#include "subleq/image_io.hpp"
#include "subleq/vm.hpp"

using namespace subleq;

namespace {

VmConfig config_with(std::size_t mem, std::optional<std::uint64_t> max_steps = std::nullopt,
                     IoMode mode = IoMode::interactive) {
  VmConfig c;
  c.mem_words = mem;
  c.max_steps = max_steps;
  c.io_mode = mode;
  return c;
}

const std::vector<Word> kCycleExample = {3, 4, 6, 2, 1, 0, 4, 4, 0};

}  // namespace

TEST_CASE("load_image pads with zeros and starts at address zero") {
  VmState s = load_image(kCycleExample, config_with(16));
  CHECK(s.ip == 0);
  CHECK(s.steps_executed == 0);
  CHECK(s.memory.size() == 16);
  CHECK(s.memory[4] == 1);
  CHECK(s.memory[15] == 0);

  VmState empty = load_image({}, config_with(8));
  CHECK(empty.memory == std::vector<Word>(8, 0));

  std::vector<Word> big(2049, 0);
  CHECK_THROWS_AS(load_image(big, config_with(512)), Error);
  try {
    load_image(big, config_with(512));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::image_too_large);
  }
}

TEST_CASE("three-line example: B cell runs 1, -1, 0, -2, 0, -2, 0") {
  VmState s = load_image(kCycleExample, config_with(16));
  std::vector<Word> seen{s.memory[4]};
  std::vector<Word> ips;
  for (int i = 0; i < 6; ++i) {
    ips.push_back(s.ip);
    CHECK(step(s).kind == StepOutcome::Kind::continued);
    seen.push_back(s.memory[4]);
  }
  CHECK(seen == std::vector<Word>{1, -1, 0, -2, 0, -2, 0});
  CHECK(ips == std::vector<Word>{0, 6, 0, 6, 0, 6});
}

TEST_CASE("step count grows by two per B cycle") {
  VmState s = load_image(kCycleExample, config_with(16));
  std::uint64_t last_zero_step = 0;
  int cycles = 0;
  for (int i = 0; i < 40; ++i) {
    step(s);
    if (s.memory[4] == 0) {
      if (cycles > 0) CHECK(s.steps_executed - last_zero_step == 2);
      last_zero_step = s.steps_executed;
      ++cycles;
    }
  }
  CHECK(cycles == 20);
}

TEST_CASE("halt idiom leaves memory unchanged") {
  // Z Z (-1) with Z at address 3
  std::vector<Word> image = {3, 3, -1, 0};
  VmState s = load_image(image, config_with(8));
  const auto before = dump(s);
  CHECK(step(s).kind == StepOutcome::Kind::halted);
  CHECK(dump(s) == before);
  CHECK_FALSE(s.runnable());
  // sticky
  CHECK(step(s).kind == StepOutcome::Kind::halted);
  CHECK(s.steps_executed == 1);
}

TEST_CASE("A A c clears A and always jumps") {
  for (Word v : {-7, 0, 1, 123456}) {
    std::vector<Word> image = {6, 6, 3, 0, 0, 0, v};
    VmState s = load_image(image, config_with(16));
    step(s);
    CHECK(s.memory[6] == 0);
    CHECK(s.ip == 3);
  }
}

TEST_CASE("subtraction wraps modulo 2^32") {
  // B = INT_MIN, A = 1: INT_MIN - 1 wraps to INT_MAX (> 0, falls through)
  std::vector<Word> image = {4, 5, -1, 0, 1, INT32_MIN};
  VmState s = load_image(image, config_with(8));
  CHECK(step(s).kind == StepOutcome::Kind::continued);
  CHECK(s.memory[5] == INT32_MAX);
  CHECK(s.ip == 3);
}

TEST_CASE("run: hello world") {
  auto out = assembler::assemble("L:H (-1); U L; U ?+2; Z H (-1); Z Z L\n"
                                 ". U:-1 H:\"hello, world\\n\" Z:0\n");
  auto r = run(load_image(out.image, config_with(64)), std::string_view{}, config_with(64));
  CHECK(r.termination.kind == Termination::Kind::halt);
  CHECK(r.output == "hello, world\n");
  // output never writes memory: the first data cell is still 'h'
  CHECK(dump(r.final_state)[out.symbols.at("H")] == 104);
}

TEST_CASE("run: all-zero image loops until the step limit") {
  auto cfg = config_with(8, 1000);
  auto r = run(load_image({}, cfg), std::string_view{}, cfg);
  CHECK(r.termination.kind == Termination::Kind::step_limit);
  CHECK(r.steps == 1000);
  CHECK(r.final_state.ip == 0);
  // resumable
  auto again = run(std::move(r.final_state), std::string_view{}, cfg);
  CHECK(again.termination.kind == Termination::Kind::step_limit);
  CHECK(again.final_state.steps_executed == 2000);
}

TEST_CASE("run: single-character echo") {
  // (-1) T ?; T (-1) ?; Z Z (-1); . T:0 Z:0
  auto out = assembler::assemble("(-1) T ?; T (-1) ?; Z Z (-1)\n. T:0 Z:0\n");
  // Hand trace: [-1 9 3 | 9 -1 6 | 10 10 -1 | T=0 Z=0]
  CHECK(out.image == std::vector<Word>{-1, 9, 3, 9, -1, 6, 10, 10, -1, 0, 0});
  auto cfg = config_with(16);
  auto r = run(load_image(out.image, cfg), std::string_view("Q"), cfg);
  CHECK(r.termination.kind == Termination::Kind::halt);
  CHECK(r.output == "Q");
  CHECK(r.steps == 3);

  auto starved = run(load_image(out.image, cfg), std::string_view{}, cfg);
  CHECK(starved.termination == Termination{Termination::Kind::fault, FaultReason::input_exhausted});
}

TEST_CASE("step reports an input request before consuming input") {
  std::vector<Word> image = {-1, 3, -1, 0};
  VmState s = load_image(image, config_with(8));
  auto o = step(s);
  CHECK(o.kind == StepOutcome::Kind::input_request);
  CHECK(o.target_address == 3);
  CHECK(s.ip == 0);
  CHECK(s.steps_executed == 0);
  o = step(s, std::uint8_t{'x'});
  CHECK(o.kind == StepOutcome::Kind::continued);
  CHECK(s.memory[3] == 'x');
  CHECK(s.ip == 3);
}

TEST_CASE("output policies") {
  std::vector<Word> image = {3, -1, 0, 300};
  auto strict = config_with(8);
  auto r = run(load_image(image, strict), std::string_view{}, strict);
  CHECK(r.termination == Termination{Termination::Kind::fault, FaultReason::output_too_wide});
  CHECK(r.output.empty());

  auto masked = config_with(8, 1);
  masked.out_of_range_value_policy = ValuePolicy::mask;
  auto m = run(load_image(image, masked), std::string_view{}, masked);
  REQUIRE(m.output.size() == 1);
  CHECK(static_cast<unsigned char>(m.output[0]) == (300 & 0xff));
}

TEST_CASE("address faults") {
  auto cfg = config_with(8);
  SUBCASE("operand beyond memory") {
    std::vector<Word> image = {100, 3, 0};
    auto r = run(load_image(image, cfg), std::string_view{}, cfg);
    CHECK(r.termination ==
          Termination{Termination::Kind::fault, FaultReason::address_out_of_range});
    CHECK(r.steps == 0);
  }
  SUBCASE("jump leaves no room for a triple") {
    std::vector<Word> image = {3, 3, 6, 0};
    auto r = run(load_image(image, cfg), std::string_view{}, cfg);
    CHECK(r.termination ==
          Termination{Termination::Kind::fault, FaultReason::address_out_of_range});
    CHECK(r.steps == 1);
    CHECK(r.final_state.ip == 6);
  }
  SUBCASE("negative operand other than -1 in interactive mode") {
    std::vector<Word> image = {-2, 3, 0, 0};
    auto r = run(load_image(image, cfg), std::string_view{}, cfg);
    CHECK(r.termination.kind == Termination::Kind::fault);
  }
}

TEST_CASE("hardware mode: negative operand stops the processor") {
  auto cfg = config_with(8, std::nullopt, IoMode::hardware);
  for (std::vector<Word> image : {std::vector<Word>{3, -1, 0, 5}, std::vector<Word>{-1, 3, 0, 5},
                                  std::vector<Word>{-9, 3, 0, 5}}) {
    auto r = run(load_image(image, cfg), std::string_view{}, cfg);
    CHECK(r.termination.kind == Termination::Kind::halt);
    CHECK(r.output.empty());
    CHECK(r.final_state.memory[3] == image[3]);
  }
}

TEST_CASE("self-modifying code executes the overwritten instruction") {
  // Instruction 0 writes -1 into cell 5 (the C of instruction 1), turning
  // `Z Z 0` (an endless loop back to 0) into `Z Z -1`.
  //   0: K C1 ?      C1 -= K  (C1: 0 - 1 = -1)
  //   3: Z Z 0       (C cell 5 is C1)
  //   6: Z=0  7: K=1
  std::vector<Word> image = {7, 5, 3, 6, 6, 0, 0, 1};
  auto cfg = config_with(16, 100);
  auto r = run(load_image(image, cfg), std::string_view{}, cfg);
  CHECK(r.termination.kind == Termination::Kind::halt);
  CHECK(r.steps == 2);
}

TEST_CASE("property: a non-I/O step changes at most the B cell") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Word> image(48);
    for (auto& w : image) w = static_cast<Word>(rng() % 45);
    VmState s = load_image(image, config_with(48));
    for (int i = 0; i < 200 && s.runnable(); ++i) {
      const auto before = dump(s);
      const Word b = s.ip >= 0 && s.ip + 2 < 48 ? before[s.ip + 1] : -1;
      auto o = step(s);
      const auto after = dump(s);
      int changed = 0;
      for (std::size_t k = 0; k < after.size(); ++k) {
        if (after[k] != before[k]) {
          ++changed;
          CHECK(static_cast<Word>(k) == b);
        }
      }
      CHECK(changed <= 1);
      if (o.kind != StepOutcome::Kind::continued) break;
    }
  }
}

TEST_CASE("property: runs are deterministic and fast path matches single stepping") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Word> image(64);
    for (auto& w : image) w = static_cast<Word>(rng() % 70) - 3;
    auto cfg = config_with(64, 500);
    cfg.out_of_range_value_policy = ValuePolicy::mask;
    std::string input = "abcdefgh";
    auto r1 = run(load_image(image, cfg), std::string_view(input), cfg);
    auto r2 = run(load_image(image, cfg), std::string_view(input), cfg);
    CHECK(r1.termination == r2.termination);
    CHECK(r1.output == r2.output);
    CHECK(dump(r1.final_state) == dump(r2.final_state));

    // reference: single steps
    VmState s = load_image(image, cfg);
    std::string out;
    std::size_t in = 0;
    std::uint64_t steps = 0;
    Termination term{Termination::Kind::step_limit};
    while (steps < 500) {
      auto o = step(s);
      if (o.kind == StepOutcome::Kind::input_request) {
        if (in == input.size()) {
          term = {Termination::Kind::fault, FaultReason::input_exhausted};
          break;
        }
        o = step(s, static_cast<std::uint8_t>(input[in++]));
      }
      if (o.kind == StepOutcome::Kind::fault) {
        term = {Termination::Kind::fault, o.reason};
        break;
      }
      ++steps;
      if (o.kind == StepOutcome::Kind::output) out.push_back(static_cast<char>(o.byte));
      if (o.kind == StepOutcome::Kind::halted) {
        term = {Termination::Kind::halt};
        break;
      }
    }
    CHECK(r1.termination == term);
    CHECK(r1.output == out);
    CHECK(r1.steps == steps);
    CHECK(dump(r1.final_state) == dump(s));
  }
}

TEST_CASE("property: interactive and hardware modes agree without negative operands") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    // 10 instructions of code (cells 0..29), data in cells 30..47. B only
    // ever targets data, so code operands stay non-negative.
    std::vector<Word> image(48);
    for (int i = 0; i < 10; ++i) {
      image[3 * i] = static_cast<Word>(rng() % 48);
      image[3 * i + 1] = static_cast<Word>(30 + rng() % 18);
      image[3 * i + 2] = static_cast<Word>(3 * (rng() % 10));
    }
    // last instruction clears its B cell and always jumps, so ip never
    // reaches the data region
    image[27] = image[28] = static_cast<Word>(30 + rng() % 18);
    for (int i = 30; i < 48; ++i) image[i] = static_cast<Word>(rng() % 20) - 10;
    auto inter = config_with(48, 300);
    auto hard = config_with(48, 300, IoMode::hardware);
    auto a = run(load_image(image, inter), std::string_view{}, inter);
    auto b = run(load_image(image, hard), std::string_view{}, hard);
    CHECK(a.termination == b.termination);
    CHECK(a.steps == b.steps);
    CHECK(dump(a.final_state) == dump(b.final_state));
  }
}

TEST_CASE("image formats") {
  const std::vector<Word> words = {0, -1, 2147483647, INT32_MIN, 42};
  CHECK(parse_text_image(format_text_image(words, "sample")) == words);
  CHECK(parse_binary_image(format_binary_image(words)) == words);
  CHECK(bytes_to_words(words_to_bytes(words)) == words);

  const std::string bin = format_binary_image({1, -2});
  CHECK(bin.substr(0, 4) == "SQIM");
  CHECK(bin.size() == 16);
  CHECK(static_cast<unsigned char>(bin[4]) == 2);
  CHECK(static_cast<unsigned char>(bin[12]) == 0xfe);
  CHECK(static_cast<unsigned char>(bin[15]) == 0xff);

  CHECK(parse_text_image("# header\n# more\n 1 -2\n\n3\n") == std::vector<Word>{1, -2, 3});
  CHECK_THROWS_AS(parse_text_image("1 x 3"), Error);
  CHECK_THROWS_AS(parse_text_image("4294967296"), Error);
  CHECK_THROWS_AS(parse_binary_image("SQIM\x02\x00\x00\x00\x01"), Error);
  CHECK_THROWS_AS(parse_binary_image("JUNK"), Error);
}
