// sq: assembler, compiler, VM runner, array simulator and benchmarks.
//
// Exit status: 0 success, 1 library error or failed run, 2 usage error,
// 3 benchmark result differs from --expect.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "subleq/array.hpp"
#include "subleq/assembler.hpp"
#include "subleq/bench.hpp"
#include "subleq/cc/compiler.hpp"
#include "subleq/error.hpp"
#include "subleq/image_io.hpp"
#include "subleq/vm.hpp"

namespace fs = std::filesystem;
using namespace subleq;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMismatch = 3;

// Scaled Test #2 parameters: the full modulus with a tenth of the range.
constexpr Word kScaledN = 503;

std::vector<Word> load_program(const fs::path& path) {
  if (path.extension() == ".sq") return assembler::assemble(read_file(path)).image;
  return read_image_file(path);
}

// --- asm ----------------------------------------------------------------------

struct AsmArgs {
  std::string input, output, format = "text", listing, symbols;
};

int cmd_asm(const AsmArgs& a) {
  const std::string source = read_file(a.input);
  assembler::AssemblyOutput out = assembler::assemble(source);
  write_image_file(a.output, out.image, a.format == "bin");
  if (!a.listing.empty()) write_file(a.listing, assembler::format_listing(out, source));
  if (!a.symbols.empty()) write_file(a.symbols, assembler::format_symbols(out.symbols));
  return 0;
}

// --- cc -----------------------------------------------------------------------

struct CcArgs {
  std::string input, output, frame_map;
  bool no_pool = false;
};

int cmd_cc(const CcArgs& a) {
  cc::CompileOptions options;
  options.pool_temporaries = !a.no_pool;
  cc::CompileResult r = cc::compile(read_file(a.input), options);
  write_file(a.output, r.assembly);
  if (!a.frame_map.empty()) write_file(a.frame_map, cc::format_frame_map(r.frames));
  return 0;
}

// --- run ----------------------------------------------------------------------

struct RunArgs {
  std::string image, input, input_file;
  std::uint64_t max_steps = 0;
  std::size_t mem_words = 1u << 16;
  bool hardware = false, mask = false, stats = false;
};

int cmd_run(const RunArgs& a) {
  VmConfig config;
  config.mem_words = a.mem_words;
  config.io_mode = a.hardware ? IoMode::hardware : IoMode::interactive;
  config.out_of_range_value_policy = a.mask ? ValuePolicy::mask : ValuePolicy::strict;
  if (a.max_steps) config.max_steps = a.max_steps;
  std::string input = a.input_file.empty() ? a.input : read_file(a.input_file);
  RunResult r = run(load_image(load_program(a.image), config), input, config);
  std::cout << r.output << std::flush;
  const auto& t = r.termination;
  if (a.stats || t.kind != Termination::Kind::halt) {
    std::cerr << "sq: " << (t.kind == Termination::Kind::halt    ? "halted"
                            : t.kind == Termination::Kind::fault ? "fault " + std::string(fault_name(t.reason))
                                                                 : std::string("step limit reached"))
              << " after " << r.steps << " steps at ip " << r.final_state.ip << "\n";
  }
  return t.kind == Termination::Kind::halt ? 0 : kExitFailure;
}

// --- array --------------------------------------------------------------------

std::string status_name(array::Status s) {
  switch (s) {
    case array::Status::never_run: return "never-run";
    case array::Status::running: return "running";
    case array::Status::stopped: return "stopped";
  }
  return "?";
}

json slot_to_json(const array::SlotState& s) {
  json j;
  j["status"] = static_cast<int>(s.status);
  j["steps"] = s.steps;
  j["ip"] = s.vm.ip;
  j["steps_executed"] = s.vm.steps_executed;
  if (s.vm.terminal) {
    j["terminal"] = s.vm.terminal->kind == Terminal::Kind::halt ? "halt" : "fault";
    j["reason"] = static_cast<int>(s.vm.terminal->reason);
  }
  j["memory"] = s.vm.memory;
  return j;
}

array::SlotState slot_from_json(const json& j) {
  array::SlotState s;
  s.status = static_cast<array::Status>(j.at("status").get<int>());
  if (s.status != array::Status::never_run && s.status != array::Status::running &&
      s.status != array::Status::stopped)
    throw Error(Errc::bad_image, "state file: unknown slot status");
  s.steps = j.at("steps").get<std::uint64_t>();
  s.vm.ip = j.at("ip").get<Word>();
  s.vm.steps_executed = j.at("steps_executed").get<std::uint64_t>();
  s.vm.io_mode = IoMode::hardware;
  if (j.contains("terminal")) {
    Terminal t;
    t.kind = j["terminal"] == "halt" ? Terminal::Kind::halt : Terminal::Kind::fault;
    t.reason = static_cast<FaultReason>(j.at("reason").get<int>());
    s.vm.terminal = t;
  }
  s.vm.memory = j.at("memory").get<std::vector<Word>>();
  return s;
}

struct ArrayArgs {
  std::string state = ".sq-array.json";
  std::optional<int> procs;
  unsigned threads = 0;
};

array::Device open_device(const ArrayArgs& a) {
  unsigned threads = a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency());
  if (!fs::exists(a.state)) return array::Device(a.procs.value_or(array::kDefaultProcs), threads);
  json j;
  try {
    j = json::parse(read_file(a.state));
    std::vector<array::SlotState> slots;
    for (const auto& s : j.at("slots")) slots.push_back(slot_from_json(s));
    array::Device dev = array::Device::restore(std::move(slots), threads);
    if (a.procs && *a.procs != dev.proc_count())
      throw Error(Errc::bad_proc_count, "state file " + a.state + " holds " + std::to_string(dev.proc_count()) +
                                            " processors; run `sq array reset` to change the count");
    return dev;
  } catch (const json::exception& e) {
    throw Error(Errc::bad_image, "state file " + a.state + ": " + e.what());
  }
}

void save_device(const ArrayArgs& a, const array::Device& dev) {
  json j;
  j["slots"] = json::array();
  for (const auto& s : dev.snapshot()) j["slots"].push_back(slot_to_json(s));
  write_file(a.state, j.dump());
}

void print_slot(array::Device& dev, int slot) {
  auto d = dev.debug(slot);
  std::printf("slot %2d  0x%02X %-9s steps %llu", slot, static_cast<unsigned>(dev.host_read(slot, 1)[0]),
              status_name(d.status).c_str(), static_cast<unsigned long long>(d.steps));
  if (d.terminal)
    std::printf("  (%s)", d.terminal->kind == Terminal::Kind::halt ? "halt"
                                                                   : std::string(fault_name(d.terminal->reason)).c_str());
  std::printf("\n");
}

int cmd_array_load(const ArrayArgs& a, int slot, const std::string& image) {
  array::Device dev = open_device(a);
  dev.host_write(slot, array::image_to_slot_bytes(load_program(image)));
  save_device(a, dev);
  print_slot(dev, slot);
  return 0;
}

int cmd_array_status(const ArrayArgs& a, std::optional<int> slot) {
  array::Device dev = open_device(a);
  if (slot) {
    print_slot(dev, *slot);
    return 0;
  }
  std::printf("processors %d\n", dev.host_read(0, 1)[0]);
  for (int i = 1; i <= dev.proc_count(); ++i) print_slot(dev, i);
  return 0;
}

int cmd_array_read(const ArrayArgs& a, int slot, const std::string& out, const std::string& format) {
  array::Device dev = open_device(a);
  auto bytes = dev.host_read(slot, array::kFullReadBytes);
  save_device(a, dev);
  if (format == "raw") {
    write_file(out, std::string(bytes.begin(), bytes.end()));
  } else {
    auto words = array::slot_bytes_to_words(std::span(bytes).subspan(4));
    write_image_file(out, words, format == "bin");
  }
  print_slot(dev, slot);
  return 0;
}

int cmd_array_run(const ArrayArgs& a, std::uint64_t steps, bool until_quiescent) {
  array::Device dev = open_device(a);
  constexpr std::uint64_t kQuantum = 1u << 22;
  std::vector<std::uint64_t> total(static_cast<std::size_t>(dev.proc_count()), 0);
  std::uint64_t left = steps;
  while (left > 0 && !dev.quiescent()) {
    std::uint64_t q = std::min(left, kQuantum);
    auto done = dev.advance(q);
    for (std::size_t i = 0; i < done.size(); ++i) total[i] += done[i];
    left -= q;
  }
  save_device(a, dev);
  for (int i = 1; i <= dev.proc_count(); ++i)
    if (total[static_cast<std::size_t>(i - 1)] > 0 || dev.debug(i).status == array::Status::running)
      print_slot(dev, i);
  std::printf("quiescent %s\n", dev.quiescent() ? "yes" : "no");
  return until_quiescent && !dev.quiescent() ? kExitFailure : 0;
}

// --- bench --------------------------------------------------------------------

struct BenchArgs {
  std::string json_path;
  std::optional<std::int64_t> expect;
  bool check = false;
  std::uint64_t max_steps = 0;
};

int finish_bench(const bench::BenchReport& r, const BenchArgs& a) {
  std::printf("%s backend=%s", r.test.c_str(), std::string(bench::backend_name(r.backend)).c_str());
  for (const auto& [k, v] : r.params) std::printf(" %s=%lld", k.c_str(), static_cast<long long>(v));
  std::printf(" result=%s", r.result ? std::to_string(*r.result).c_str() : "none");
  if (r.expected) std::printf(" expected=%lld", static_cast<long long>(*r.expected));
  std::printf(" steps=%llu seconds=%.3f\n", static_cast<unsigned long long>(r.steps), r.host_seconds);
  if (!a.json_path.empty()) write_file(a.json_path, bench::report_json(r) + "\n");
  if (!r.matches()) {
    std::fprintf(stderr, "sq: result does not match the expected value\n");
    return kExitMismatch;
  }
  return 0;
}

struct Test1Args {
  Word m = 5039;
  std::string backend = "vm";
  bool progress = false;
};

int cmd_bench_test1(const Test1Args& t, const BenchArgs& a) {
  auto backend = bench::parse_backend(t.backend);
  if (backend != bench::Backend::vm_c)
    throw Error(Errc::invalid_params, "test1 runs only on the vm backend (compiled C)");
  bench::Test1Params p{t.m, a.expect};
  if (a.check) p.expected = bench::test1_oracle(t.m);
  bench::RunOptions o;
  o.max_steps = a.max_steps ? a.max_steps : 5'000'000'000ull;
  o.progress_output = t.progress;
  bench::BenchReport r = bench::run_test1(p, o);
  if (t.progress) std::fputs(r.output.c_str(), stdout);
  return finish_bench(r, a);
}

struct Test2Args {
  Word n = 5029, b = 1, m = 5039;
  std::string backend = "array";
  int procs = array::kDefaultProcs;
  unsigned threads = 0;
  bool scaled = false;
};

int cmd_bench_test2(Test2Args t, const BenchArgs& a) {
  auto backend = bench::parse_backend(t.backend);
  if (!backend) throw Error(Errc::invalid_params, "unknown backend " + t.backend);
  if (t.scaled) {
    t.n = kScaledN;
    t.b = 1;
    t.m = 5039;
  }
  bench::Test2Params p{t.n, t.b, t.m, a.expect};
  if (a.check) p.expected = bench::dfact_oracle(t.n, t.b, t.m);
  bench::RunOptions o;
  if (a.max_steps) o.max_steps = a.max_steps;
  o.proc_count = t.procs;
  o.threads = t.threads;
  return finish_bench(bench::run_test2(p, *backend, o), a);
}

void add_bench_common(CLI::App* cmd, BenchArgs& a) {
  cmd->add_option("--json", a.json_path, "Write the report as JSON");
  cmd->add_option("--expect", a.expect, "Exit 3 unless the result equals this value");
  cmd->add_flag("--check", a.check, "Use the host-computed oracle as the expected value");
  cmd->add_option("--max-steps", a.max_steps, "Abort after this many Subleq steps");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subleq toolchain: assembler, C compiler, VM, processor-array simulator, benchmarks"};
  app.require_subcommand(1);
  std::function<int()> action;

  AsmArgs asm_args;
  auto* asm_cmd = app.add_subcommand("asm", "Assemble Subleq source into a memory image");
  asm_cmd->add_option("input", asm_args.input, "Assembly source")->required()->check(CLI::ExistingFile);
  asm_cmd->add_option("-o,--output", asm_args.output, "Image file")->required();
  asm_cmd->add_option("--format", asm_args.format, "Image format")->check(CLI::IsMember({"text", "bin"}));
  asm_cmd->add_option("--listing", asm_args.listing, "Write an address/source listing");
  asm_cmd->add_option("--symbols", asm_args.symbols, "Write `name address` lines sorted by address");
  asm_cmd->callback([&] { action = [&] { return cmd_asm(asm_args); }; });

  CcArgs cc_args;
  auto* cc_cmd = app.add_subcommand("cc", "Compile a C subset program to Subleq assembly");
  cc_cmd->add_option("input", cc_args.input, "C source")->required()->check(CLI::ExistingFile);
  cc_cmd->add_option("-o,--output", cc_args.output, "Assembly output")->required();
  cc_cmd->add_flag("--no-pool", cc_args.no_pool, "Give every temporary its own stack cell");
  cc_cmd->add_option("--emit-frame-map", cc_args.frame_map, "Write per-function `name offset` lines");
  cc_cmd->callback([&] { action = [&] { return cmd_cc(cc_args); }; });

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run an image (or .sq source) on the VM");
  run_cmd->add_option("image", run_args.image, "Image file or .sq source")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--input", run_args.input, "Bytes supplied to input instructions");
  run_cmd->add_option("--input-file", run_args.input_file, "Read input bytes from a file")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--max-steps", run_args.max_steps, "Stop after this many steps (0 = unbounded)");
  run_cmd->add_option("--mem-words", run_args.mem_words, "Memory size in words")->check(CLI::Range(3, 1 << 26));
  run_cmd->add_flag("--hardware", run_args.hardware, "Halt on any negative operand instead of doing I/O");
  run_cmd->add_flag("--mask", run_args.mask, "Output the low byte of wide values instead of faulting");
  run_cmd->add_flag("--stats", run_args.stats, "Report the step count on stderr");
  run_cmd->callback([&] { action = [&] { return cmd_run(run_args); }; });

  ArrayArgs array_args;
  auto* array_cmd = app.add_subcommand("array", "Drive the processor-array simulator");
  array_cmd->require_subcommand(1);
  array_cmd->add_option("--procs", array_args.procs, "Processor count when creating the device")
      ->check(CLI::Range(1, array::kMaxProcs));
  array_cmd->add_option("--state", array_args.state, "Device state file");
  array_cmd->add_option("--threads", array_args.threads, "Worker threads (0 = hardware concurrency)");

  int slot = 0;
  std::string image_path;
  auto* load_cmd = array_cmd->add_subcommand("load", "Write an image into a slot, starting it");
  load_cmd->add_option("slot", slot, "Slot index")->required();
  load_cmd->add_option("image", image_path, "Image file or .sq source")->required()->check(CLI::ExistingFile);
  load_cmd->callback([&] { action = [&] { return cmd_array_load(array_args, slot, image_path); }; });

  std::optional<int> status_slot;
  auto* status_cmd = array_cmd->add_subcommand("status", "Peek at status bytes without stopping anything");
  status_cmd->add_option("slot", status_slot, "Slot index (default: all)");
  status_cmd->callback([&] { action = [&] { return cmd_array_status(array_args, status_slot); }; });

  std::string read_out, read_format = "text";
  auto* read_cmd = array_cmd->add_subcommand("read", "Stop a slot and save its memory");
  read_cmd->add_option("slot", slot, "Slot index")->required();
  read_cmd->add_option("-o,--output", read_out, "Output file")->required();
  read_cmd->add_option("--format", read_format, "text/bin image, or the raw 2052-byte reply")
      ->check(CLI::IsMember({"text", "bin", "raw"}));
  read_cmd->callback([&] { action = [&] { return cmd_array_read(array_args, slot, read_out, read_format); }; });

  std::uint64_t run_steps = 0;
  bool until_quiescent = false;
  auto* arun_cmd = array_cmd->add_subcommand("run", "Advance every running slot");
  arun_cmd->add_option("--steps", run_steps, "Steps per slot")->required();
  arun_cmd->add_flag("--until-quiescent", until_quiescent, "Exit 1 if a slot is still running afterwards");
  arun_cmd->callback([&] { action = [&] { return cmd_array_run(array_args, run_steps, until_quiescent); }; });

  auto* reset_cmd = array_cmd->add_subcommand("reset", "Delete the device state file");
  reset_cmd->callback([&] {
    action = [&] {
      fs::remove(array_args.state);
      return 0;
    };
  });

  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark");
  bench_cmd->require_subcommand(1);
  BenchArgs bench_args;

  Test1Args t1;
  auto* t1_cmd = bench_cmd->add_subcommand("test1", "Cycle length of the doubling orbit (compiled C)");
  t1_cmd->add_option("--m", t1.m, "Modulus")->check(CLI::Range(2, INT32_MAX));
  t1_cmd->add_option("--backend", t1.backend, "Backend")->check(CLI::IsMember({"vm", "vm-c"}));
  t1_cmd->add_flag("--progress", t1.progress, "Keep the per-iteration printf and show its output");
  add_bench_common(t1_cmd, bench_args);
  t1_cmd->callback([&] { action = [&] { return cmd_bench_test1(t1, bench_args); }; });

  Test2Args t2;
  auto* t2_cmd = bench_cmd->add_subcommand("test2", "Product of factorials modulo m");
  t2_cmd->add_option("--n", t2.n, "Upper bound");
  t2_cmd->add_option("--b", t2.b, "Lower bound");
  t2_cmd->add_option("--m", t2.m, "Modulus");
  t2_cmd->add_option("--backend", t2.backend, "Backend")
      ->check(CLI::IsMember({"array", "vm-hand", "vm-c", "vm-c-nomul"}));
  t2_cmd->add_option("--procs", t2.procs, "Array processor count")->check(CLI::Range(1, array::kMaxProcs));
  t2_cmd->add_option("--threads", t2.threads, "Array worker threads (0 = hardware concurrency)");
  t2_cmd->add_flag("--scaled", t2.scaled, "Use n=503, b=1, m=5039 instead of the full-scale parameters");
  add_bench_common(t2_cmd, bench_args);
  t2_cmd->callback([&] { action = [&] { return cmd_bench_test2(t2, bench_args); }; });

  std::string corpus_name;
  auto* corpus_cmd = app.add_subcommand("corpus", "List embedded sources or print one");
  corpus_cmd->add_option("name", corpus_name, "File to print");
  corpus_cmd->callback([&] {
    action = [&] {
      if (corpus_name.empty())
        for (auto n : bench::corpus_names()) std::cout << n << "\n";
      else
        std::cout << bench::corpus_file(corpus_name);
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "sq: error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "sq: " << e.what() << "\n";
    return kExitFailure;
  }
}
