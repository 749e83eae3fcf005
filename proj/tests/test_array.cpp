#include "doctest.h"
#include "subleq/array.hpp"
#include "subleq/assembler.hpp"
#include "subleq/error.hpp"
#include "subleq/image_io.hpp"
#include "support/checks.hpp"

using namespace subleq;
using namespace subleq::array;

namespace {

std::optional<Errc> error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::vector<std::uint8_t> program(std::string_view src) {
  return image_to_slot_bytes(assembler::assemble(src).image);
}

// Halts at once.
const char* kHalt = "Z Z (-1)\n. Z:0";
// Never halts.
const char* kSpin = "Z Z 0\n. Z:0";
// Counts N down to zero, incrementing C on each pass, then halts.
const char* kCount = "L: one N E\n neg C\n Z Z L\nE: Z Z (-1)\n. N:1000 C:0 one:1 neg:-1 Z:0";

Word cell_after_full_read(Device& dev, int slot, Word addr) {
  auto bytes = dev.host_read(slot, kFullReadBytes);
  return slot_bytes_to_words(std::span(bytes).subspan(4))[static_cast<std::size_t>(addr)];
}

}  // namespace

TEST_CASE("device: processor count bounds") {
  CHECK(Device().proc_count() == 28);
  CHECK(Device(1).proc_count() == 1);
  CHECK(Device(63).proc_count() == 63);
  CHECK(error_of([] { Device d(64); }) == Errc::bad_proc_count);
  CHECK(error_of([] { Device d(0); }) == Errc::bad_proc_count);
}

TEST_CASE("device: index 0 reads the processor count") {
  Device dev;
  CHECK(dev.host_read(0, 1) == std::vector<std::uint8_t>{28});
  CHECK(Device(5).host_read(0, 1) == std::vector<std::uint8_t>{5});
  CHECK(error_of([&] { dev.host_read(0, 2); }) == Errc::bad_length);
  CHECK(error_of([&] { dev.host_write(0, program(kHalt)); }) == Errc::bad_index);
}

TEST_CASE("device: fresh slots are zeroed and never run") {
  Device dev(3);
  for (int i = 1; i <= 3; ++i) {
    CHECK(dev.host_read(i, 1) == std::vector<std::uint8_t>{0xA0});
    auto full = dev.host_read(i, kFullReadBytes);
    CHECK(full.size() == 2052);
    CHECK(full[0] == 0xA0);
    CHECK(std::all_of(full.begin() + 1, full.end(), [](std::uint8_t b) { return b == 0; }));
    CHECK(dev.host_read(i, 1) == std::vector<std::uint8_t>{0xA0});
  }
}

TEST_CASE("device: writes start a slot, bad index and length are rejected") {
  Device dev;
  dev.host_write(3, program(kSpin));
  CHECK(dev.host_read(3, 1)[0] == 0xA1);
  CHECK(error_of([&] { dev.host_write(29, program(kHalt)); }) == Errc::bad_index);
  CHECK(error_of([&] { dev.host_write(-1, program(kHalt)); }) == Errc::bad_index);
  CHECK(error_of([&] { dev.host_write(3, std::vector<std::uint8_t>(100)); }) == Errc::bad_length);
  CHECK(error_of([&] { dev.host_read(29, 1); }) == Errc::bad_index);
  CHECK(error_of([&] { dev.host_read(3, 4); }) == Errc::bad_length);
  CHECK(error_of([&] { image_to_slot_bytes(std::vector<Word>(513)); }) == Errc::image_too_large);
}

TEST_CASE("device: halting and spinning programs") {
  Device dev(2);
  dev.host_write(1, program(kHalt));
  dev.host_write(2, program(kSpin));
  auto steps = dev.advance(1000);
  CHECK(steps[0] == 1);
  CHECK(steps[1] == 1000);
  CHECK(dev.host_read(1, 1)[0] == 0xA2);
  CHECK(dev.host_read(2, 1)[0] == 0xA1);
  dev.advance(100000);
  CHECK(dev.host_read(2, 1)[0] == 0xA1);
  CHECK(!dev.quiescent());
  CHECK(dev.debug(1).terminal->kind == Terminal::Kind::halt);
}

TEST_CASE("device: status peek keeps running, full read stops") {
  Device dev(5);
  auto out = assembler::assemble(kCount);
  dev.host_write(5, image_to_slot_bytes(out.image));
  dev.advance(30);
  CHECK(dev.host_read(5, 1) == std::vector<std::uint8_t>{0xA1});
  dev.advance(30);
  CHECK(dev.debug(5).steps == 60);
  auto full = dev.host_read(5, kFullReadBytes);
  CHECK(full[0] == 0xA2);
  CHECK(full[1] == 0);
  Word c = slot_bytes_to_words(std::span(full).subspan(4))[static_cast<std::size_t>(out.symbols.at("C"))];
  CHECK(c == 20);
  // Stopped by the read: no further progress and no resume without a reload.
  CHECK(dev.advance(1000)[4] == 0);
  CHECK(dev.host_read(5, 1)[0] == 0xA2);
  CHECK(!dev.debug(5).terminal);
  dev.host_write(5, image_to_slot_bytes(out.image));
  CHECK(dev.host_read(5, 1)[0] == 0xA1);
  while (!dev.quiescent()) dev.advance(512);
  CHECK(cell_after_full_read(dev, 5, out.symbols.at("C")) == 999);
}

TEST_CASE("device: hardware mode stops on any negative operand, faults read as stopped") {
  Device dev(3);
  dev.host_write(1, program("H (-1) 3\n. H:72"));   // output attempt
  dev.host_write(2, program("(-1) Z 3\n. Z:0"));    // input attempt
  dev.host_write(3, program("Z 600 0\n. Z:0"));     // operand outside the slot
  dev.advance(10);
  for (int i = 1; i <= 3; ++i) CHECK(dev.host_read(i, 1)[0] == 0xA2);
  CHECK(dev.debug(1).terminal->kind == Terminal::Kind::halt);
  CHECK(dev.debug(2).terminal->kind == Terminal::Kind::halt);
  CHECK(dev.debug(3).terminal->kind == Terminal::Kind::fault);
  CHECK(dev.debug(3).terminal->reason == FaultReason::address_out_of_range);
}

TEST_CASE("device: slots are isolated") {
  Device dev(4);
  auto spin = program(kSpin);
  // Writers only ever modify their own C cell.
  auto writer = program("L: inc C; inc C; Z Z L\n. C:0 inc:-1 Z:0");
  dev.host_write(2, program(kHalt));
  dev.host_write(1, writer);
  dev.host_write(3, spin);
  dev.advance(5000);
  auto before2 = dev.host_read(2, kFullReadBytes);
  auto before3 = dev.host_read(3, kFullReadBytes);
  dev.host_write(3, spin);
  dev.advance(5000);
  dev.host_write(4, writer);
  dev.advance(5000);
  CHECK(dev.host_read(2, kFullReadBytes) == before2);
  auto after3 = dev.host_read(3, kFullReadBytes);
  CHECK(std::equal(after3.begin() + 4, after3.end(), before3.begin() + 4));
}

TEST_CASE("device: threaded advance matches sequential advance") {
  auto count = assembler::assemble(kCount);
  Device seq(7, 1), par(7, 4);
  for (int i = 1; i <= 7; ++i) {
    auto img = count.image;
    img[static_cast<std::size_t>(count.symbols.at("N"))] = 100 * i;
    seq.host_write(i, image_to_slot_bytes(img));
    par.host_write(i, image_to_slot_bytes(img));
  }
  for (int round = 0; round < 20; ++round) CHECK(seq.advance(97) == par.advance(97));
  for (int i = 1; i <= 7; ++i) CHECK(seq.host_read(i, kFullReadBytes) == par.host_read(i, kFullReadBytes));
}

TEST_CASE("property: status transitions under random host operations") {
  CHECK(testing::protocol_violations(10000, 99) == 0);
  CHECK(testing::protocol_violations(10000, 100) == 0);
}

TEST_CASE("device: snapshot and restore continue exactly where the run left off") {
  auto count = assembler::assemble(kCount);
  Device a(3);
  a.host_write(2, image_to_slot_bytes(count.image));
  a.advance(77);
  Device b = Device::restore(a.snapshot());
  CHECK(b.proc_count() == 3);
  CHECK(b.host_read(2, 1)[0] == 0xA1);
  CHECK(a.advance(500) == b.advance(500));
  CHECK(a.host_read(2, kFullReadBytes) == b.host_read(2, kFullReadBytes));
  CHECK(b.debug(1).status == Status::never_run);
  CHECK(error_of([] { Device::restore({}); }) == Errc::bad_proc_count);
  auto broken = a.snapshot();
  broken[0].vm.memory.resize(10);
  CHECK(error_of([&] { Device::restore(broken); }) == Errc::bad_image);
}
