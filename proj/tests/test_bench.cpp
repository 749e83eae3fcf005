#include <numeric>
#include <random>

#include <json.hpp>

#include "doctest.h"
#include "subleq/array.hpp"
#include "subleq/bench.hpp"
#include "subleq/error.hpp"
#include "subleq/vm.hpp"

using namespace subleq;
using namespace subleq::bench;

namespace {

std::optional<Errc> error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Multiplicative order of 2 modulo odd m.
std::int64_t order_of_two(std::int64_t m) {
  std::int64_t v = 2 % m, k = 1;
  while (v != 1 % m) {
    v = v * 2 % m;
    ++k;
  }
  return k;
}

Word run_chunk_on_vm(const ChunkImage& img) {
  VmConfig config;
  config.mem_words = array::kSlotWords;
  config.io_mode = IoMode::hardware;
  RunResult r = run(load_image(img.words, config), std::string_view{}, config);
  REQUIRE(r.termination.kind == Termination::Kind::halt);
  return r.final_state.memory[static_cast<std::size_t>(img.result_address)];
}

}  // namespace

// --- Test #1 -------------------------------------------------------------------

TEST_CASE("test1 oracle: the published count and small moduli") {
  CHECK(test1_oracle(5039) == 12693241);
  CHECK(test1_oracle(2) == 1);  // x and y reach 0 = (x0, y0) on the first pass
  CHECK(test1_oracle(3) == 6);
  CHECK(error_of([] { test1_oracle(1); }) == Errc::invalid_params);
}

TEST_CASE("test1 oracle: equals lcm(m, ord_m(2)) for odd m") {
  // The state after i passes is (2^i, (i+1) 2^i) mod m.
  for (std::int64_t m : {3, 5, 7, 9, 15, 17, 21, 251, 1001, 5039}) {
    CAPTURE(m);
    CHECK(test1_oracle(static_cast<Word>(m)) == std::lcm(m, order_of_two(m)));
  }
}

TEST_CASE("test1: compiled program agrees with the oracle") {
  for (Word m : {2, 3, 5, 17, 251}) {
    CAPTURE(m);
    BenchReport r = run_test1({m, {}});
    REQUIRE(r.result);
    CHECK(*r.result == test1_oracle(m));
    CHECK(r.output.empty());
  }
  CHECK(error_of([] { run_test1({1, {}}); }) == Errc::invalid_params);
}

TEST_CASE("test1: progress mode prints one line per pass") {
  RunOptions opt;
  opt.progress_output = true;
  BenchReport r = run_test1({17, test1_oracle(17)}, opt);
  CHECK(r.matches());
  CHECK(r.output.rfind("point: ", 0) == 0);
  CHECK(r.output.find("loop: 1 of 2\n") != std::string::npos);
  auto lines = std::count(r.output.begin(), r.output.end(), '\n');
  CHECK(lines >= test1_oracle(17));
}

TEST_CASE("test1: step limit is reported") {
  RunOptions opt;
  opt.max_steps = 1000;
  CHECK(error_of([&] { run_test1({251, {}}, opt); }) == Errc::step_limit);
}

// --- Test #2 building blocks ---------------------------------------------------

TEST_CASE("dfact oracle") {
  CHECK(dfact_oracle(5029, 1, 5039) == 95);
  CHECK(dfact_oracle(1, 1, 7) == 1);
  CHECK(dfact_oracle(4, 1, 7) == 1);    // 2 * 6 * (24 mod 7 = 3) = 36 = 1 mod 7
  CHECK(dfact_oracle(3, 1, 101) == 12);  // 2 * 6
  CHECK(dfact_oracle(5, 3, 1000) == 2880 % 1000);  // 4! * 5! = 24 * 120
  CHECK(error_of([] { dfact_oracle(3, 4, 7); }) == Errc::invalid_params);
  CHECK(error_of([] { dfact_oracle(3, 0, 7); }) == Errc::invalid_params);
  CHECK(error_of([] { dfact_oracle(3, 1, 1); }) == Errc::invalid_params);
}

TEST_CASE("plan_chunks") {
  ChunkPlan full = plan_chunks(5029, 1, 28);
  REQUIRE(full.size() == 28);
  CHECK(full.front().lo == 2);
  CHECK(full.back().hi == 5029);
  CHECK(plan_chunks(3, 1, 28) == ChunkPlan{{2, 2}, {3, 3}});
  CHECK(plan_chunks(1, 1, 28).empty());
  CHECK(plan_chunks(10, 1, 1) == ChunkPlan{{2, 10}});
}

TEST_CASE("property: chunk plans partition the range into near-equal parts") {
  std::mt19937 rng(3);
  for (int i = 0; i < 500; ++i) {
    Word b = std::uniform_int_distribution<Word>(1, 50)(rng);
    Word n = b + std::uniform_int_distribution<Word>(0, 400)(rng);
    int procs = std::uniform_int_distribution<int>(1, 63)(rng);
    CAPTURE(n);
    CAPTURE(b);
    CAPTURE(procs);
    ChunkPlan plan = plan_chunks(n, b, procs);
    CHECK(static_cast<int>(plan.size()) <= procs);
    Word next = b + 1;
    Word smallest = INT32_MAX, largest = 0;
    for (const Chunk& c : plan) {
      CHECK(c.lo == next);
      CHECK(c.hi >= c.lo);
      next = c.hi + 1;
      smallest = std::min(smallest, c.hi - c.lo + 1);
      largest = std::max(largest, c.hi - c.lo + 1);
    }
    CHECK(next == n + 1);
    if (!plan.empty()) CHECK(largest - smallest <= 1);
  }
}

TEST_CASE("emit_chunk_program patches only A, B and MOD") {
  ChunkImage base = base_chunk_image();
  CHECK(base.words.size() <= array::kSlotWords);
  ChunkImage img = emit_chunk_program({3, 100}, 101);
  REQUIRE(img.words.size() == base.words.size());
  int differing = 0;
  for (std::size_t i = 0; i < img.words.size(); ++i) differing += img.words[i] != base.words[i];
  CHECK(differing == 3);
  // The board version has no output instruction, so hardware mode halts cleanly.
  CHECK(run_chunk_on_vm(emit_chunk_program({2, 2}, 7)) == 2);
  CHECK(error_of([] { emit_chunk_program({3, 2}, 7); }) == Errc::invalid_params);
}

TEST_CASE("hand-written program matches the oracle for small patched parameters") {
  for (auto [n, b, m] : std::vector<std::tuple<Word, Word, Word>>{
           {12, 1, 101}, {4, 1, 7}, {9, 4, 11}, {30, 1, 997}, {2, 1, 5}, {20, 19, 1009}}) {
    CAPTURE(n);
    CAPTURE(b);
    CAPTURE(m);
    CHECK(run_chunk_on_vm(emit_chunk_program({b + 1, n}, m)) == dfact_oracle(n, b, m));
  }
  CHECK(run_chunk_on_vm(emit_chunk_program({2, 12}, 101)) == 30);
}

TEST_CASE("combine") {
  CHECK(combine(std::vector<Word>{1, 1, 1}, 7) == 1);
  CHECK(combine(std::vector<Word>{5}, 7) == 5);
  CHECK(combine(std::vector<Word>{}, 7) == 1);
  std::vector<Word> partials;
  for (const Chunk& c : plan_chunks(12, 1, 4)) partials.push_back(run_chunk_on_vm(emit_chunk_program(c, 101)));
  CHECK(partials.size() == 4);
  CHECK(combine(partials, 101) == dfact_oracle(12, 1, 101));
}

// --- Test #2 runs --------------------------------------------------------------

TEST_CASE("test2: every backend agrees with the oracle on the desk grid") {
  for (Word m : {5, 7, 101})
    for (Word n = 2; n <= 12; ++n) {
      CAPTURE(n);
      CAPTURE(m);
      Word want = dfact_oracle(n, 1, m);
      for (Backend be : {Backend::array, Backend::vm_hand, Backend::vm_c, Backend::vm_c_nomul}) {
        CAPTURE(backend_name(be));
        BenchReport r = run_test2({n, 1, m, want}, be);
        CHECK(r.matches());
        CHECK(r.steps > 0);
      }
    }
}

TEST_CASE("test2: array result does not depend on the processor count") {
  for (auto [n, m] : std::vector<std::pair<Word, Word>>{{12, 101}, {60, 101}, {150, 5039}}) {
    Word want = dfact_oracle(n, 1, m);
    for (int procs : {1, 2, 7, 28}) {
      CAPTURE(n);
      CAPTURE(procs);
      RunOptions opt;
      opt.proc_count = procs;
      BenchReport r = run_test2({n, 1, m, want}, Backend::array, opt);
      CHECK(r.matches());
      CHECK(static_cast<int>(r.slot_steps.size()) == std::min<int>(procs, n - 1));
    }
  }
}

TEST_CASE("property: splitting conserves work within a factor of two") {
  RunOptions one;
  one.proc_count = 1;
  std::uint64_t single = run_test2({300, 1, 5039, {}}, Backend::array, one).steps;
  for (int procs : {2, 7, 28}) {
    RunOptions opt;
    opt.proc_count = procs;
    BenchReport r = run_test2({300, 1, 5039, {}}, Backend::array, opt);
    CAPTURE(procs);
    CHECK(r.steps <= 2 * single);
    CHECK(r.steps >= single / 2);
    CHECK(std::accumulate(r.slot_steps.begin(), r.slot_steps.end(), std::uint64_t{0}) == r.steps);
  }
}

TEST_CASE("test2: compiled programs print the published desk-scale value") {
  CHECK(run_test2({12, 1, 101, {}}, Backend::vm_c).output == "30");
  CHECK(run_test2({12, 1, 101, {}}, Backend::vm_c_nomul).output == "30");
}

TEST_CASE("test2: parameter checks") {
  CHECK(error_of([] { run_test2({5, 6, 7, {}}, Backend::array); }) == Errc::invalid_params);
  CHECK(error_of([] { run_test2({5, 5, 7, {}}, Backend::vm_hand); }) == Errc::invalid_params);
  CHECK(error_of([] { run_test2({5, 5, 7, {}}, Backend::vm_c_nomul); }) == Errc::invalid_params);
  CHECK(*run_test2({5, 5, 7, {}}, Backend::array).result == 1);
  CHECK(*run_test2({5, 5, 7, {}}, Backend::vm_c).result == 1);
  RunOptions opt;
  opt.proc_count = 64;
  CHECK(error_of([&] { run_test2({5, 1, 7, {}}, Backend::array, opt); }) == Errc::bad_proc_count);
  RunOptions tight;
  tight.max_steps = 100;
  CHECK(error_of([&] { run_test2({12, 1, 101, {}}, Backend::vm_c, tight); }) == Errc::step_limit);
}

TEST_CASE("backend names round-trip") {
  for (Backend be : {Backend::array, Backend::vm_hand, Backend::vm_c, Backend::vm_c_nomul})
    CHECK(parse_backend(backend_name(be)) == be);
  CHECK(parse_backend("vm") == Backend::vm_c);
  CHECK(!parse_backend("fpga"));
}

TEST_CASE("report json") {
  BenchReport r = run_test2({12, 1, 101, 30}, Backend::array);
  auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["test"] == "test2");
  CHECK(j["backend"] == "array");
  CHECK(j["params"]["n"] == 12);
  CHECK(j["result"] == 30);
  CHECK(j["expected"] == 30);
  CHECK(j["matches"] == true);
  CHECK(j["slot_steps"].size() == 11);
  CHECK(j["steps"].get<std::uint64_t>() == r.steps);
}

TEST_CASE("corpus lookup") {
  CHECK(corpus_file("hello.sq").find("hello, world") != std::string_view::npos);
  CHECK(corpus_names().size() >= 6);
  CHECK(error_of([] { corpus_file("missing.c"); }) == Errc::io);
}
