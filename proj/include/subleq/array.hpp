#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "subleq/vm.hpp"

namespace subleq::array {

inline constexpr int kDefaultProcs = 28;
inline constexpr int kMaxProcs = 63;
inline constexpr std::size_t kSlotWords = 512;
inline constexpr std::size_t kSlotBytes = kSlotWords * 4;
inline constexpr std::size_t kFullReadBytes = 4 + kSlotBytes;

enum class Status : std::uint8_t {
  never_run = 0xA0,
  running = 0xA1,
  stopped = 0xA2,
};

// Why a slot stopped. Not visible through the host protocol, where halt
// and fault both read as 0xA2.
struct SlotDebug {
  Status status = Status::never_run;
  std::optional<Terminal> terminal;  // empty while running or when stopped by a read
  std::uint64_t steps = 0;           // since the last load
};

// Complete state of one slot, for persisting a device between host
// sessions. Taking it does not go through the protocol, so it stops nothing.
struct SlotState {
  VmState vm;
  Status status = Status::never_run;
  std::uint64_t steps = 0;  // since the last load
};

// An array of independent Subleq processors behind the host protocol:
// index 0 is the processor count, a full write loads and starts a slot, a
// one-byte read peeks at its status, a full read stops it and returns the
// status word followed by memory. Host calls are serialized by the caller;
// advance() may run slots on several threads between them.
class Device {
public:
  explicit Device(int proc_count = kDefaultProcs, unsigned worker_threads = 1);

  int proc_count() const noexcept { return static_cast<int>(slots_.size()); }

  // bytes: exactly kSlotBytes, little-endian words.
  void host_write(int index, std::span<const std::uint8_t> bytes);

  // length 1: index 0 yields the processor count, a slot yields its status.
  // length kFullReadBytes on a slot: stop it, return status word + memory.
  std::vector<std::uint8_t> host_read(int index, std::size_t length);

  // Gives every running slot up to `steps` instructions. Returns the number
  // executed by each slot, index 0 for slot 1.
  std::vector<std::uint64_t> advance(std::uint64_t steps);

  bool quiescent() const noexcept;

  SlotDebug debug(int index) const;

  std::vector<SlotState> snapshot() const { return slots_; }
  // Error(bad_proc_count) for an empty or oversized set, Error(bad_image)
  // when a slot's memory is not kSlotWords long.
  static Device restore(std::vector<SlotState> slots, unsigned worker_threads = 1);

private:
  using Slot = SlotState;

  Slot& slot(int index);
  const Slot& slot(int index) const;
  static std::uint64_t run_slot(Slot& s, std::uint64_t steps);

  std::vector<Slot> slots_;
  unsigned workers_;
};

// Little-endian conversion between a memory image and slot bytes. The image
// is zero-padded to kSlotWords; Error(image_too_large) when it is longer.
std::vector<std::uint8_t> image_to_slot_bytes(std::span<const Word> image);
std::vector<Word> slot_bytes_to_words(std::span<const std::uint8_t> bytes);

}  // namespace subleq::array
