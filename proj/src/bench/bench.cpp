#include <algorithm>
#include <charconv>
#include <chrono>
#include <thread>

#include <json.hpp>

#include "subleq/array.hpp"
#include "subleq/assembler.hpp"
#include "subleq/bench.hpp"
#include "subleq/cc/compiler.hpp"
#include "subleq/cc/parser.hpp"
#include "subleq/error.hpp"

namespace subleq::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kArrayQuantum = 1u << 22;

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(Errc::invalid_params, message);
}

void validate(const Test1Params& p) { require(p.m >= 2, "test1 needs m >= 2"); }

void validate(const Test2Params& p) {
  require(p.b >= 1 && p.b <= p.n, "test2 needs 1 <= b <= n");
  require(p.m >= 2, "test2 needs m >= 2");
  // Products k*x stay below n*m; the division loop doubles them once more.
  require(static_cast<std::int64_t>(p.n) * p.m < (std::int64_t{1} << 30), "test2 needs n*m < 2^30");
}

cc::Expr number(Word v) {
  cc::Expr e;
  e.kind = cc::Expr::Kind::number;
  e.value = v;
  return e;
}

// Sets the initializer of every declaration of `name`, global or in a
// top-level declaration of main. Returns how many were patched.
int patch_initializer(cc::Unit& unit, const std::string& name, Word value) {
  int patched = 0;
  auto patch = [&](cc::Declarator& d) {
    if (d.name != name || d.is_array) return;
    d.init = {number(value)};
    ++patched;
  };
  for (auto& g : unit.globals) patch(g);
  for (auto& fn : unit.functions)
    if (fn.name == "main")
      for (auto& s : fn.body)
        if (s.kind == cc::Stmt::Kind::decl)
          for (auto& d : s.decls) patch(d);
  return patched;
}

bool is_printf_statement(const cc::Stmt& s) {
  return s.kind == cc::Stmt::Kind::expr && s.expr->kind == cc::Expr::Kind::call &&
         s.expr->args[0].kind == cc::Expr::Kind::name && s.expr->args[0].name == "printf";
}

void strip_printf(std::vector<cc::Stmt>& list) {
  std::erase_if(list, is_printf_statement);
  for (auto& s : list) strip_printf(s.body);
}

struct VmRun {
  RunResult result;
  assembler::AssemblyOutput assembled;
};

VmRun run_on_vm(const std::vector<Word>& image, const RunOptions& options) {
  VmConfig config;
  config.max_steps = options.max_steps;
  RunResult r = run(load_image(image, config), std::string_view{}, config);
  switch (r.termination.kind) {
    case Termination::Kind::halt:
      break;
    case Termination::Kind::step_limit:
      throw Error(Errc::step_limit, "run exceeded " + std::to_string(*options.max_steps) + " steps");
    case Termination::Kind::fault:
      throw Error(Errc::slot_fault, "program faulted: " + std::string(fault_name(r.termination.reason)));
  }
  return {std::move(r), {}};
}

VmRun run_compiled(const cc::Unit& unit, const RunOptions& options) {
  auto assembled = assembler::assemble(cc::compile(unit).assembly);
  VmRun r = run_on_vm(assembled.image, options);
  r.assembled = std::move(assembled);
  return r;
}

std::int64_t parse_printed(const std::string& out) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(out.data(), out.data() + out.size(), v);
  if (ec != std::errc{} || ptr != out.data() + out.size())
    throw Error(Errc::io, "program printed '" + out + "', expected a number");
  return v;
}

struct BaseImage {
  std::vector<Word> words;
  Word a = 0, b = 0, mod = 0, x = 0;
};

const BaseImage& base_image() {
  static const BaseImage base = [] {
    std::string src(corpus_file("dfact.sq"));
    // The board has no output device; the print of X is emulator-only.
    const std::string print = "\nX (-1)\n";
    auto at = src.find(print);
    if (at == std::string::npos || src.find(print, at + 1) != std::string::npos)
      throw Error(Errc::bad_image, "dfact.sq: expected exactly one 'X (-1)' line");
    src.erase(at + 1, print.size() - 1);
    auto out = assembler::assemble(src);
    BaseImage b;
    b.words = std::move(out.image);
    b.a = out.symbols.at("A");
    b.b = out.symbols.at("B");
    b.mod = out.symbols.at("MOD");
    b.x = out.symbols.at("X");
    return b;
  }();
  return base;
}

template <class Body>
BenchReport timed(BenchReport report, Body&& body) {
  auto start = Clock::now();
  body(report);
  report.host_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace

// --- Test #1 -----------------------------------------------------------------

std::int64_t test1_oracle(Word m) {
  validate(Test1Params{m, {}});
  std::int64_t x = 1, y = 1, c = 0, ctr = 1, x0 = 0, y0 = 0;
  for (;;) {
    y += x;
    y += y;
    x += x;
    while (x >= m) x -= m;
    while (y >= m) y -= m;
    if (x == x0 && y == y0) return c + 1;
    if (++c == ctr) {
      x0 = x;
      y0 = y;
      c = 0;
      ctr += ctr;
    }
  }
}

cc::Unit test1_program(Word m, bool progress) {
  cc::Unit unit = cc::parse_c(corpus_file("test1.c"));
  if (patch_initializer(unit, "m", m) != 1) throw Error(Errc::bad_image, "test1.c: no unique 'm'");
  if (!progress)
    for (auto& fn : unit.functions) strip_printf(fn.body);
  return unit;
}

BenchReport run_test1(const Test1Params& params, const RunOptions& options) {
  validate(params);
  BenchReport report;
  report.test = "test1";
  report.backend = Backend::vm_c;
  report.params = {{"m", params.m}};
  report.expected = params.expected;
  return timed(std::move(report), [&](BenchReport& r) {
    VmRun run = run_compiled(test1_program(params.m, options.progress_output), options);
    Word c = run.result.final_state.memory.at(run.assembled.symbols.at(cc::mangle("c")));
    r.result = static_cast<std::int64_t>(c) + 1;
    r.steps = run.result.steps;
    r.output = std::move(run.result.output);
  });
}

// --- Test #2 -----------------------------------------------------------------

Word dfact_oracle(Word n, Word b, Word m) {
  validate(Test2Params{n, b, m, {}});
  std::int64_t x = 1;
  for (std::int64_t a = n; a > b; --a)
    for (std::int64_t k = a; k >= 1; --k) x = x * k % m;
  return static_cast<Word>(x);
}

ChunkPlan plan_chunks(Word n, Word b, int proc_count) {
  require(proc_count >= 1, "plan_chunks needs at least one processor");
  ChunkPlan plan;
  if (n <= b) return plan;
  std::int64_t count = static_cast<std::int64_t>(n) - b;
  std::int64_t chunks = std::min<std::int64_t>(proc_count, count);
  std::int64_t lo = static_cast<std::int64_t>(b) + 1;
  for (std::int64_t i = 0; i < chunks; ++i) {
    std::int64_t len = count / chunks + (i < count % chunks ? 1 : 0);
    plan.push_back({static_cast<Word>(lo), static_cast<Word>(lo + len - 1)});
    lo += len;
  }
  return plan;
}

ChunkImage base_chunk_image() { return {base_image().words, base_image().x}; }

ChunkImage emit_chunk_program(const Chunk& chunk, Word m) {
  require(chunk.lo >= 1 && chunk.lo <= chunk.hi, "chunk needs 1 <= lo <= hi");
  require(m >= 2 && static_cast<std::int64_t>(chunk.hi) * m < (std::int64_t{1} << 30),
          "chunk needs m >= 2 and hi*m < 2^30");
  const BaseImage& base = base_image();
  if (base.words.size() > array::kSlotWords)
    throw Error(Errc::image_too_large, "hand-written program does not fit a slot");
  ChunkImage img{base.words, base.x};
  img.words[base.a] = chunk.hi;
  img.words[base.b] = chunk.lo - 1;
  img.words[base.mod] = m;
  return img;
}

Word combine(std::span<const Word> partials, Word m) {
  std::int64_t x = 1 % m;
  for (Word p : partials) x = x * p % m;
  return static_cast<Word>(x);
}

cc::Unit dfact_program(bool builtin_mul, Word n, Word b, Word m) {
  const char* file = builtin_mul ? "dfact_mul.c" : "dfact_nomul.c";
  cc::Unit unit = cc::parse_c(corpus_file(file));
  for (auto [name, value] : {std::pair{"a", n}, {"b", b}, {"m", m}})
    if (patch_initializer(unit, name, value) != 1)
      throw Error(Errc::bad_image, std::string(file) + ": no unique '" + name + "'");
  return unit;
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::vm_c: return "vm-c";
    case Backend::vm_c_nomul: return "vm-c-nomul";
    case Backend::vm_hand: return "vm-hand";
    case Backend::array: return "array";
  }
  return "?";
}

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "vm" || name == "vm-c") return Backend::vm_c;
  if (name == "vm-c-nomul") return Backend::vm_c_nomul;
  if (name == "vm-hand") return Backend::vm_hand;
  if (name == "array") return Backend::array;
  return std::nullopt;
}

namespace {

void run_array(const Test2Params& p, const RunOptions& options, BenchReport& r) {
  ChunkPlan plan = plan_chunks(p.n, p.b, options.proc_count);
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  array::Device dev(options.proc_count, threads);
  Word x_addr = base_image().x;
  for (std::size_t i = 0; i < plan.size(); ++i)
    dev.host_write(static_cast<int>(i + 1), array::image_to_slot_bytes(emit_chunk_program(plan[i], p.m).words));

  r.slot_steps.assign(plan.size(), 0);
  while (!dev.quiescent()) {
    auto done = dev.advance(kArrayQuantum);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      r.slot_steps[i] += done[i];
      r.steps += done[i];
    }
    if (options.max_steps && r.steps > *options.max_steps)
      throw Error(Errc::step_limit, "array run exceeded " + std::to_string(*options.max_steps) + " steps");
  }

  std::vector<Word> partials;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    int slot = static_cast<int>(i + 1);
    auto dbg = dev.debug(slot);
    if (dbg.terminal && dbg.terminal->kind == Terminal::Kind::fault)
      throw Error(Errc::slot_fault, "slot " + std::to_string(slot) + " faulted: " +
                                        std::string(fault_name(dbg.terminal->reason)));
    auto bytes = dev.host_read(slot, array::kFullReadBytes);
    auto words = array::slot_bytes_to_words(std::span(bytes).subspan(4));
    partials.push_back(words.at(static_cast<std::size_t>(x_addr)));
  }
  r.result = combine(partials, p.m);
}

}  // namespace

BenchReport run_test2(const Test2Params& params, Backend backend, const RunOptions& options) {
  validate(params);
  // The hand-written and goto programs test their loop condition after the
  // first outer pass, so n == b would compute n! instead of the empty product.
  if (backend == Backend::vm_hand || backend == Backend::vm_c_nomul)
    require(params.n > params.b, std::string(backend_name(backend)) + " needs n > b");
  BenchReport report;
  report.test = "test2";
  report.backend = backend;
  report.params = {{"n", params.n}, {"b", params.b}, {"m", params.m}};
  report.expected = params.expected;
  return timed(std::move(report), [&](BenchReport& r) {
    switch (backend) {
      case Backend::array:
        run_array(params, options, r);
        return;
      case Backend::vm_hand: {
        ChunkImage img = emit_chunk_program({params.b + 1, params.n}, params.m);
        VmRun run = run_on_vm(img.words, options);
        r.result = run.result.final_state.memory.at(static_cast<std::size_t>(img.result_address));
        r.steps = run.result.steps;
        return;
      }
      case Backend::vm_c:
      case Backend::vm_c_nomul: {
        bool mul = backend == Backend::vm_c;
        VmRun run = run_compiled(dfact_program(mul, params.n, params.b, params.m), options);
        r.steps = run.result.steps;
        r.output = run.result.output;
        r.result = parse_printed(r.output);
        if (!mul) {
          Word x = run.result.final_state.memory.at(run.assembled.symbols.at(cc::mangle("x")));
          if (x != *r.result)
            throw Error(Errc::slot_fault, "printed " + r.output + " but x holds " + std::to_string(x));
        }
        return;
      }
    }
  });
}

std::string report_json(const BenchReport& report) {
  nlohmann::ordered_json j;
  j["test"] = report.test;
  j["backend"] = backend_name(report.backend);
  for (const auto& [k, v] : report.params) j["params"][k] = v;
  j["result"] = report.result ? nlohmann::ordered_json(*report.result) : nlohmann::ordered_json(nullptr);
  j["expected"] = report.expected ? nlohmann::ordered_json(*report.expected) : nlohmann::ordered_json(nullptr);
  j["matches"] = report.matches();
  j["steps"] = report.steps;
  if (!report.slot_steps.empty()) j["slot_steps"] = report.slot_steps;
  j["host_seconds"] = report.host_seconds;
  return j.dump(2) + "\n";
}

}  // namespace subleq::bench
