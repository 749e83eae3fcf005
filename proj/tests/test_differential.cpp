#include "doctest.h"
#include "subleq/error.hpp"
#include "support/harness.hpp"
#include "support/progen.hpp"
#include "support/ref_interp.hpp"

using namespace subleq;

TEST_CASE("differential: compiled output equals the reference interpreter") {
  constexpr std::uint64_t kPrograms = 200;
  int mismatches = 0;
  for (std::uint64_t seed = 0; seed < kPrograms; ++seed) {
    std::string src = testing::generate_program(seed);
    CAPTURE(seed);
    std::string want = testing::interpret(src).output;
    auto got = testing::run_c(src, {}, 100'000'000);
    REQUIRE(got.run.termination.kind == Termination::Kind::halt);
    if (got.run.output != want) {
      ++mismatches;
      MESSAGE("seed " << seed << "\n" << src << "\nwant:\n" << want << "\ngot:\n" << got.run.output);
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("differential: unpooled temporaries give the same output") {
  cc::CompileOptions no_pool;
  no_pool.pool_temporaries = false;
  for (std::uint64_t seed = 1000; seed < 1040; ++seed) {
    std::string src = testing::generate_program(seed);
    CAPTURE(seed);
    CHECK(testing::run_c(src, no_pool, 100'000'000).run.output == testing::interpret(src).output);
  }
}

TEST_CASE("generator: programs are deterministic per seed and vary across seeds") {
  CHECK(testing::generate_program(5) == testing::generate_program(5));
  CHECK(testing::generate_program(5) != testing::generate_program(6));
}
