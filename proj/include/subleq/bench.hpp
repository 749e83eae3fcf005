#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subleq/cc/ast.hpp"
#include "subleq/vm.hpp"

namespace subleq::bench {

// Embedded corpus: test1.c, dfact_mul.c, dfact_nomul.c, dfact.sq, hello.sq,
// cycle.sq. Error(io) for an unknown name.
std::string_view corpus_file(std::string_view name);
std::vector<std::string_view> corpus_names();

// --- Test #1: cycle length of the doubling orbit ---------------------------

struct Test1Params {
  Word m = 5039;
  std::optional<std::int64_t> expected;
};

// Value of c+1 when the program's loop breaks, i.e. the cycle length found
// by the saved-point doubling search.
std::int64_t test1_oracle(Word m);

// The test program with m patched and, when `progress` is false, the
// per-iteration printf removed.
cc::Unit test1_program(Word m, bool progress);

// --- Test #2: modular double factorial --------------------------------------

struct Test2Params {
  Word n = 5029;
  Word b = 1;
  Word m = 5039;
  std::optional<std::int64_t> expected;
};

// Product of (k! mod m) for k = b+1..n, taken mod m; 1 for an empty range.
Word dfact_oracle(Word n, Word b, Word m);

// Outer-index range lo..hi, inclusive.
struct Chunk {
  Word lo = 0;
  Word hi = 0;
  bool operator==(const Chunk&) const = default;
};
using ChunkPlan = std::vector<Chunk>;

// Near-equal contiguous chunks covering b+1..n in ascending order, at most
// proc_count of them and none empty.
ChunkPlan plan_chunks(Word n, Word b, int proc_count);

// Hand-written program without its output instruction, as loaded into a
// slot, and the address of its result cell X.
struct ChunkImage {
  std::vector<Word> words;
  Word result_address = 0;
};
ChunkImage base_chunk_image();
// Base image with A = chunk.hi, B = chunk.lo - 1, MOD = m.
ChunkImage emit_chunk_program(const Chunk& chunk, Word m);

Word combine(std::span<const Word> partials, Word m);

// The compiled-C programs with their a, b, m initializers replaced.
cc::Unit dfact_program(bool builtin_mul, Word n, Word b, Word m);

// --- Runs -------------------------------------------------------------------

enum class Backend {
  vm_c,         // compiled C on the interactive VM (Test #1, and Test #2 with `*`)
  vm_c_nomul,   // compiled C without `*` (Test #2)
  vm_hand,      // hand-written program on the VM (Test #2)
  array,        // hand-written program split over the array simulator (Test #2)
};
std::string_view backend_name(Backend backend);
std::optional<Backend> parse_backend(std::string_view name);

struct RunOptions {
  std::optional<std::uint64_t> max_steps;  // whole run; Error(step_limit) when exceeded
  int proc_count = 28;                     // array backend
  unsigned threads = 0;                    // array workers; 0 = hardware concurrency
  bool progress_output = false;            // Test #1 progress printf
};

struct BenchReport {
  std::string test;                        // "test1" or "test2"
  Backend backend = Backend::vm_c;
  std::vector<std::pair<std::string, std::int64_t>> params;
  std::optional<std::int64_t> result;      // present iff the run terminated
  std::optional<std::int64_t> expected;
  std::uint64_t steps = 0;                 // summed over slots for the array
  std::vector<std::uint64_t> slot_steps;   // array only, one per chunk
  double host_seconds = 0;
  std::string output;                      // bytes printed by the program

  bool matches() const { return !expected || (result && *result == *expected); }
};

BenchReport run_test1(const Test1Params& params, const RunOptions& options = {});
BenchReport run_test2(const Test2Params& params, Backend backend, const RunOptions& options = {});

std::string report_json(const BenchReport& report);

}  // namespace subleq::bench
