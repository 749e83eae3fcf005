#include "subleq/array.hpp"

#include <algorithm>
#include <string>
#include <thread>

#include "subleq/error.hpp"
#include "subleq/image_io.hpp"

namespace subleq::array {

namespace {

VmConfig slot_config() {
  VmConfig c;
  c.mem_words = kSlotWords;
  c.io_mode = IoMode::hardware;
  return c;
}

}  // namespace

std::vector<std::uint8_t> image_to_slot_bytes(std::span<const Word> image) {
  if (image.size() > kSlotWords)
    throw Error(Errc::image_too_large,
                "image has " + std::to_string(image.size()) + " words, a slot holds " + std::to_string(kSlotWords));
  std::vector<Word> words(image.begin(), image.end());
  words.resize(kSlotWords, 0);
  return words_to_bytes(words);
}

std::vector<Word> slot_bytes_to_words(std::span<const std::uint8_t> bytes) {
  return bytes_to_words(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

Device::Device(int proc_count, unsigned worker_threads) : workers_(std::max(1u, worker_threads)) {
  if (proc_count < 1 || proc_count > kMaxProcs)
    throw Error(Errc::bad_proc_count,
                "processor count " + std::to_string(proc_count) + " outside 1.." + std::to_string(kMaxProcs));
  slots_.resize(static_cast<std::size_t>(proc_count));
  for (auto& s : slots_) {
    std::vector<Word> zero(kSlotWords, 0);
    s.vm = load_image(zero, slot_config());
  }
}

Device Device::restore(std::vector<SlotState> slots, unsigned worker_threads) {
  Device dev(std::clamp(static_cast<int>(slots.size()), 1, kMaxProcs), worker_threads);
  if (slots.empty() || slots.size() > static_cast<std::size_t>(kMaxProcs))
    throw Error(Errc::bad_proc_count, "saved device has " + std::to_string(slots.size()) + " slots");
  for (const auto& s : slots)
    if (s.vm.memory.size() != kSlotWords || s.vm.io_mode != IoMode::hardware)
      throw Error(Errc::bad_image, "saved slot is not a " + std::to_string(kSlotWords) + "-word hardware slot");
  dev.slots_ = std::move(slots);
  return dev;
}

Device::Slot& Device::slot(int index) {
  return const_cast<Slot&>(static_cast<const Device*>(this)->slot(index));
}

const Device::Slot& Device::slot(int index) const {
  if (index < 1 || index > proc_count())
    throw Error(Errc::bad_index, "slot index " + std::to_string(index) + " outside 1.." +
                                     std::to_string(proc_count()));
  return slots_[static_cast<std::size_t>(index - 1)];
}

void Device::host_write(int index, std::span<const std::uint8_t> bytes) {
  if (index == 0) throw Error(Errc::bad_index, "index 0 is the read-only processor count");
  Slot& s = slot(index);
  if (bytes.size() != kSlotBytes)
    throw Error(Errc::bad_length, "slot writes are exactly " + std::to_string(kSlotBytes) + " bytes, got " +
                                      std::to_string(bytes.size()));
  s.vm = load_image(slot_bytes_to_words(bytes), slot_config());
  s.status = Status::running;
  s.steps = 0;
}

std::vector<std::uint8_t> Device::host_read(int index, std::size_t length) {
  if (index == 0) {
    if (length != 1) throw Error(Errc::bad_length, "index 0 reads exactly one byte");
    return {static_cast<std::uint8_t>(proc_count())};
  }
  Slot& s = slot(index);
  if (length == 1) return {static_cast<std::uint8_t>(s.status)};
  if (length != kFullReadBytes)
    throw Error(Errc::bad_length, "slot reads are 1 or " + std::to_string(kFullReadBytes) + " bytes, got " +
                                      std::to_string(length));
  // A stopped slot keeps its state; it restarts only through host_write.
  if (s.status == Status::running) s.status = Status::stopped;
  std::vector<std::uint8_t> out = {static_cast<std::uint8_t>(s.status), 0, 0, 0};
  auto mem = words_to_bytes(s.vm.memory);
  out.insert(out.end(), mem.begin(), mem.end());
  return out;
}

std::uint64_t Device::run_slot(Slot& s, std::uint64_t steps) {
  if (s.status != Status::running) return 0;
  std::string ignored;  // hardware mode never produces output
  RunProgress p = run_in_place(s.vm, {}, steps, ignored);
  s.steps += p.steps;
  if (p.termination.kind != Termination::Kind::step_limit) s.status = Status::stopped;
  return p.steps;
}

std::vector<std::uint64_t> Device::advance(std::uint64_t steps) {
  std::vector<std::uint64_t> done(slots_.size(), 0);
  if (steps == 0) return done;
  unsigned workers = std::min<unsigned>(workers_, static_cast<unsigned>(slots_.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < slots_.size(); ++i) done[i] = run_slot(slots_[i], steps);
    return done;
  }
  // Slots share nothing, so a static partition gives the same result as
  // running them one after another.
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < slots_.size(); i += workers) done[i] = run_slot(slots_[i], steps);
      });
  }
  return done;
}

bool Device::quiescent() const noexcept {
  return std::none_of(slots_.begin(), slots_.end(), [](const Slot& s) { return s.status == Status::running; });
}

SlotDebug Device::debug(int index) const {
  const Slot& s = slot(index);
  return {s.status, s.vm.terminal, s.steps};
}

}  // namespace subleq::array
