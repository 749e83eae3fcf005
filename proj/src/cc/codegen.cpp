#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>

#include "subleq/cc/compiler.hpp"
#include "subleq/cc/parser.hpp"
#include "subleq/error.hpp"

namespace subleq::cc {

std::string mangle(std::string_view name) { return "_" + std::string(name); }

namespace {

// Register cells. `sp` holds minus the stack-top address, `nbp` holds minus
// bp (lets an operand be patched to bp+offset in two instructions), `ax`
// holds minus the return value.
constexpr const char* kRegisterData = ". ax:0 bp:0 nbp:0";
constexpr const char* kFinalData = ". inc:-1 Z:0 dec:1 sp:-sp";

constexpr const char* kRuntimeNames[] = {"divmod", "mul", "sdiv", "smod", "printd"};

bool is_runtime_name(std::string_view n) {
  return std::find(std::begin(kRuntimeNames), std::end(kRuntimeNames), n) != std::end(kRuntimeNames);
}

Word negate(Word v) { return static_cast<Word>(0u - static_cast<std::uint32_t>(v)); }

std::string word_text(Word v) { return v < 0 ? "(" + std::to_string(v) + ")" : std::to_string(v); }

[[noreturn]] void fail(Errc code, const std::string& msg, SourcePos at) {
  throw Error(code, msg, at.line, at.column);
}

// An operand source/destination.
struct Value {
  enum class Kind { cell, frame, deref };

  Kind kind = Kind::cell;
  std::string cell;   // cell: operand text; deref: cell holding the target address
  int offset = 0;     // frame: offset from bp
  bool owned = false; // the cell (or, for deref, the address cell) is a temporary
  bool constant = false;        // immutable cell
  std::optional<Word> literal;  // value of an integer constant cell

  static Value of(std::string c, bool is_constant = false) {
    Value v;
    v.cell = std::move(c);
    v.constant = is_constant;
    return v;
  }
  static Value temp(std::string c) {
    Value v;
    v.cell = std::move(c);
    v.owned = true;
    return v;
  }
  static Value frame(int off) {
    Value v;
    v.kind = Kind::frame;
    v.offset = off;
    return v;
  }
  static Value deref(std::string addr, bool owned_addr) {
    Value v;
    v.kind = Kind::deref;
    v.cell = std::move(addr);
    v.owned = owned_addr;
    return v;
  }

  bool is_const_zero() const { return literal && *literal == 0; }
  bool is_temp() const { return kind == Kind::cell && owned; }
};

bool has_side_effects(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::assign:
    case Expr::Kind::call:
    case Expr::Kind::pre_inc:
    case Expr::Kind::pre_dec:
    case Expr::Kind::post_inc:
    case Expr::Kind::post_dec:
      return true;
    default:
      return std::any_of(e.args.begin(), e.args.end(), has_side_effects);
  }
}

bool is_comparison(Op op) {
  return op == Op::eq || op == Op::ne || op == Op::lt || op == Op::gt || op == Op::le ||
         op == Op::ge;
}

// Lowest free name first; without pooling every request mints a new one.
class TempPool {
public:
  explicit TempPool(bool pooling) : pooling_(pooling) {}

  void begin_function() {
    used_.clear();
    free_.clear();
    if (pooling_)
      for (int i = 1; i <= minted_; ++i) free_.insert(i);
  }

  std::string acquire() {
    int n;
    if (pooling_ && !free_.empty()) {
      n = *free_.begin();
      free_.erase(free_.begin());
    } else {
      n = ++minted_;
    }
    used_.insert(n);
    return name(n);
  }

  void release(const std::string& t) {
    if (pooling_) free_.insert(std::stoi(t.substr(1)));
  }

  const std::set<int>& used() const { return used_; }
  int minted() const { return minted_; }
  static std::string name(int n) { return "t" + std::to_string(n); }

private:
  bool pooling_;
  int minted_ = 0;
  std::set<int> free_;
  std::set<int> used_;
};

struct Line {
  bool is_label = false;
  std::string text;
  bool pure_jump = false;  // `Z Z L` with Z already 0; removable before L
};

struct Local {
  int offset = 0;
  bool is_array = false;
};

struct GlobalVar {
  bool is_array = false;
  std::vector<Word> cells;
};

class Codegen {
public:
  explicit Codegen(const CompileOptions& opts) : opts_(opts), pool_(opts.pool_temporaries) {}

  CompileResult run(const Unit& unit) {
    collect_globals(unit);
    for (const auto& fn : unit.functions) {
      if (functions_.count(fn.name)) fail(Errc::duplicate_label, "function '" + fn.name + "' redefined", fn.pos);
      if (globals_.count(fn.name)) fail(Errc::duplicate_label, "'" + fn.name + "' is both a variable and a function", fn.pos);
      functions_.insert(fn.name);
    }
    declared_.insert(unit.prototypes.begin(), unit.prototypes.end());

    std::vector<Error> errors;
    for (const auto& fn : unit.functions) {
      try {
        gen_function(fn, false);
      } catch (const Error& e) {
        errors.push_back(e);
      }
    }
    if (errors.empty() && !functions_.count("main"))
      errors.emplace_back(Errc::undefined_function, "no 'main' function");
    if (!errors.empty()) throw combine(errors);

    emit_runtime();
    return finish();
  }

private:
  // --- emission helpers ----------------------------------------------------

  void emit(std::string instr) { code_.push_back({false, std::move(instr), false}); }
  void label(std::string name) { code_.push_back({true, std::move(name), false}); }
  std::string new_label() { return "L" + std::to_string(++label_counter_); }
  std::string new_patch() { return "P" + std::to_string(++patch_counter_); }

  std::string constant(Word v) {
    if (v == 0) return "Z";
    if (v == 1) return "dec";
    if (v == -1) return "inc";
    auto it = consts_.find(v);
    if (it != consts_.end()) return it->second;
    std::string n = v < 0 ? "cm" + std::to_string(-static_cast<std::int64_t>(v)) : "c" + std::to_string(v);
    consts_.emplace(v, n);
    return n;
  }

  Value const_value(Word v) {
    Value c = Value::of(constant(v), true);
    c.literal = v;
    return c;
  }

  // Data cell holding the address denoted by `label_expr`.
  std::string address_cell(const std::string& label_expr) {
    auto it = addresses_.find(label_expr);
    if (it != addresses_.end()) return it->second;
    std::string n = "a" + std::to_string(addresses_.size() + 1);
    addresses_.emplace(label_expr, n);
    address_order_.push_back(label_expr);
    return n;
  }

  // Operand text for `v`; frame and deref operands get a fresh patched cell
  // whose setup code is emitted first.
  std::string use(const Value& v) {
    switch (v.kind) {
      case Value::Kind::cell:
        return v.cell;
      case Value::Kind::frame: {
        std::string p = new_patch();
        emit(p);
        emit("nbp " + p);
        emit(constant(-v.offset) + " " + p);
        return p + ":0";
      }
      case Value::Kind::deref: {
        std::string p = new_patch();
        emit(p);
        emit(v.cell + " Z");
        emit("Z " + p);
        emit("Z");
        return p + ":0";
      }
    }
    return {};
  }

  // b -= a, jump to `target` when the result is <= 0.
  void sub(const Value& a, const Value& b, const std::string& target = {}) {
    std::string ta = use(a);
    std::string tb = use(b);
    if (target.empty()) {
      if (ta == tb && a.kind == Value::Kind::cell) emit(ta);
      else emit(ta + " " + tb);
    } else {
      emit(ta + " " + tb + " " + target);
    }
  }

  void clear(const Value& v) { sub(v, v); }

  void release(const Value& v) {
    if (v.owned) pool_.release(v.cell);
  }

  Value fresh() {
    Value t = Value::temp(pool_.acquire());
    emit(t.cell);
    return t;
  }

  // dst = src. The source is negated into Z before dst is cleared, so the
  // two may alias.
  void copy(const Value& src, const Value& dst) {
    if (src.literal) {
      clear(dst);
      if (*src.literal != 0) sub(const_value(negate(*src.literal)), dst);
      return;
    }
    std::string ts = use(src);
    std::string d1 = use(dst);
    std::string d2 = dst.kind == Value::Kind::cell ? d1 : use(dst);
    std::string d3 = dst.kind == Value::Kind::cell ? d1 : use(dst);
    emit(ts + " Z");
    emit(d1 == d2 && dst.kind == Value::Kind::cell ? d1 : d1 + " " + d2);
    emit("Z " + d3);
    emit("Z");
  }

  // dst += src
  void add_into(const Value& src, const Value& dst) {
    if (src.literal) {
      sub(const_value(negate(*src.literal)), dst);
      return;
    }
    std::string ts = use(src);
    std::string td = use(dst);
    emit(ts + " Z");
    emit("Z " + td);
    emit("Z");
  }

  // Materializes any value into a fresh temporary holding a copy.
  Value load(const Value& v) {
    Value t = fresh();
    add_into(v, t);
    release(v);
    return t;
  }

  // Makes `v` usable as a plain cell operand.
  Value to_cell(const Value& v) {
    if (v.kind == Value::Kind::cell) return v;
    return load(v);
  }

  // Detaches a value from mutable storage (needed when later evaluation
  // can write the location it names).
  Value snapshot(const Value& v) {
    if (v.kind == Value::Kind::cell && (v.owned || v.constant)) return v;
    return load(v);
  }

  // --- scopes --------------------------------------------------------------

  struct Binding {
    enum class Kind { local, global, function, none } kind = Kind::none;
    Local local;
    const GlobalVar* global = nullptr;
  };

  Binding lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return {Binding::Kind::local, f->second, nullptr};
    }
    if (auto g = globals_.find(name); g != globals_.end()) return {Binding::Kind::global, {}, &g->second};
    if (callable(name)) return {Binding::Kind::function, {}, nullptr};
    return {};
  }

  // Runtime routines are implicitly declared library functions.
  bool callable(const std::string& name) const { return functions_.count(name) || is_runtime_name(name); }

  void note_function_use(const std::string& name, SourcePos pos) {
    called_.emplace(name, pos);
    // Inside the runtime a user definition of the same name is a collision.
    if (is_runtime_name(name) && (compiling_runtime_ || !functions_.count(name))) runtime_wanted_.insert(name);
  }

  int declare_local(const Declarator& d) {
    auto& scope = scopes_.back();
    if (scope.count(d.name)) fail(Errc::duplicate_label, "'" + d.name + "' redeclared", d.pos);
    int off = stack_size_ + 1;
    stack_size_ += d.is_array ? d.array_size : 1;
    scope[d.name] = Local{off, d.is_array};
    frame_.slots.emplace_back(d.name, off);
    return off;
  }

  // --- expressions ---------------------------------------------------------

  Value rvalue(const Expr& e) {
    if (auto c = fold_constant(e)) return const_value(*c);
    switch (e.kind) {
      case Expr::Kind::number:
        return const_value(e.value);
      case Expr::Kind::string:
        fail(Errc::unsupported_construct, "string literals are only supported as printf formats", e.pos);
      case Expr::Kind::name:
        return name_value(e);
      case Expr::Kind::unary:
        return unary(e);
      case Expr::Kind::binary:
        return binary(e);
      case Expr::Kind::assign:
        return assign(e, true);
      case Expr::Kind::index: {
        Value addr = index_address(e);
        return deref_load(addr);
      }
      case Expr::Kind::call:
        return call(e, true);
      case Expr::Kind::pre_inc:
      case Expr::Kind::pre_dec:
      case Expr::Kind::post_inc:
      case Expr::Kind::post_dec:
        return increment(e, true);
    }
    return const_value(0);
  }

  void discard(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::assign:
        assign(e, false);
        return;
      case Expr::Kind::call:
        call(e, false);
        return;
      case Expr::Kind::pre_inc:
      case Expr::Kind::pre_dec:
      case Expr::Kind::post_inc:
      case Expr::Kind::post_dec:
        increment(e, false);
        return;
      default:
        release(rvalue(e));
    }
  }

  Value name_value(const Expr& e) {
    Binding b = lookup(e.name);
    switch (b.kind) {
      case Binding::Kind::local:
        if (b.local.is_array) return frame_address(b.local.offset);
        return Value::frame(b.local.offset);
      case Binding::Kind::global:
        if (b.global->is_array) return Value::of(address_cell(mangle(e.name)), true);
        return Value::of(mangle(e.name));
      case Binding::Kind::function:
        note_function_use(e.name, e.pos);
        return Value::of(address_cell(mangle(e.name)), true);
      case Binding::Kind::none:
        break;
    }
    fail(Errc::undefined_variable, "undefined variable '" + e.name + "'", e.pos);
  }

  // Temporary holding bp+off.
  Value frame_address(int off) {
    Value t = fresh();
    emit("nbp " + t.cell);
    emit(constant(-off) + " " + t.cell);
    return t;
  }

  Value unary(const Expr& e) {
    switch (e.op) {
      case Op::neg: {
        Value v = rvalue(e.args[0]);
        Value t = fresh();
        sub(v, t);
        release(v);
        return t;
      }
      case Op::lnot:
        return bool_value(e);
      case Op::deref:
        return deref_load(rvalue(e.args[0]));
      case Op::addr:
        return address_of(e.args[0]);
      default:
        break;
    }
    fail(Errc::unsupported_construct, "unsupported unary operator", e.pos);
  }

  Value address_of(const Expr& e) {
    if (e.kind == Expr::Kind::name) {
      Binding b = lookup(e.name);
      switch (b.kind) {
        case Binding::Kind::local:
          return frame_address(b.local.offset);
        case Binding::Kind::global:
        case Binding::Kind::function:
          if (b.kind == Binding::Kind::function) note_function_use(e.name, e.pos);
          return Value::of(address_cell(mangle(e.name)), true);
        case Binding::Kind::none:
          fail(Errc::undefined_variable, "undefined variable '" + e.name + "'", e.pos);
      }
    }
    if (e.kind == Expr::Kind::unary && e.op == Op::deref) return rvalue(e.args[0]);
    if (e.kind == Expr::Kind::index) return index_address(e);
    fail(Errc::syntax_error, "cannot take the address of this expression", e.pos);
  }

  // Eager load through a pointer: s = -*addr, r = -s.
  Value deref_load(const Value& addr_in) {
    Value addr = to_cell(addr_in);
    Value s = fresh();
    Value r = fresh();
    sub(Value::deref(addr.cell, false), s);
    sub(s, r);
    release(addr);
    release(s);
    return r;
  }

  Value index_address(const Expr& e) { return add_values(e.args[0], e.args[1], Op::add); }

  // Evaluates both operands left to right; the left one is detached when
  // the right one has side effects.
  std::pair<Value, Value> operands(const Expr& a, const Expr& b) {
    Value l = rvalue(a);
    if (has_side_effects(b)) l = snapshot(l);
    Value r = rvalue(b);
    return {l, r};
  }

  // Each node takes a scratch temporary s and a result temporary r.
  Value add_values(const Expr& a, const Expr& b, Op op) {
    auto [l, r] = operands(a, b);
    Value s = fresh();
    Value res = fresh();
    if (op == Op::add) {
      sub(l, s);
      sub(r, s);
      sub(s, res);
    } else {
      sub(l, s);
      sub(s, res);
      sub(r, res);
    }
    release(l);
    release(r);
    release(s);
    return res;
  }

  Value binary(const Expr& e) {
    switch (e.op) {
      case Op::add:
      case Op::sub:
        return add_values(e.args[0], e.args[1], e.op);
      case Op::mul:
      case Op::div:
      case Op::mod: {
        auto [l, r] = operands(e.args[0], e.args[1]);
        return runtime_call(e.op == Op::mul ? "mul" : e.op == Op::div ? "sdiv" : "smod", {l, r}, true);
      }
      default:
        return bool_value(e);
    }
  }

  Value lvalue(const Expr& e) {
    if (e.kind == Expr::Kind::name) {
      Binding b = lookup(e.name);
      if (b.kind == Binding::Kind::local && !b.local.is_array) return Value::frame(b.local.offset);
      if (b.kind == Binding::Kind::global && !b.global->is_array) return Value::of(mangle(e.name));
      if (b.kind == Binding::Kind::none)
        fail(Errc::undefined_variable, "undefined variable '" + e.name + "'", e.pos);
      fail(Errc::syntax_error, "'" + e.name + "' is not assignable", e.pos);
    }
    if (e.kind == Expr::Kind::unary && e.op == Op::deref) {
      Value a = to_cell(rvalue(e.args[0]));
      return Value::deref(a.cell, a.owned);
    }
    if (e.kind == Expr::Kind::index) {
      Value a = index_address(e);
      return Value::deref(a.cell, a.owned);
    }
    fail(Errc::syntax_error, "expression is not assignable", e.pos);
  }

  // The value of an updated lvalue as an rvalue.
  Value lvalue_result(const Value& lv) {
    if (lv.kind == Value::Kind::deref) {
      Value r = load(Value::deref(lv.cell, false));
      release(lv);
      return r;
    }
    return lv;
  }

  Value assign(const Expr& e, bool want) {
    const Expr& lhs = e.args[0];
    const Expr& rhs = e.args[1];
    Value r = rvalue(rhs);
    Value lv = lvalue(lhs);
    switch (e.op) {
      case Op::none:
        copy(r, lv);
        break;
      case Op::add:
        add_into(r, lv);
        break;
      case Op::sub:
        sub(r, lv);
        break;
      default: {
        const char* fn = e.op == Op::mul ? "mul" : e.op == Op::div ? "sdiv" : "smod";
        Value current = lv;
        current.owned = false;
        Value res = runtime_call(fn, {current, r}, true);
        copy(res, lv);
        release(res);
        r = const_value(0);
        break;
      }
    }
    if (!want) {
      release(r);
      release(lv);
      return const_value(0);
    }
    if (lv.kind == Value::Kind::deref && e.op == Op::none) {
      release(lv);
      return snapshot(r);
    }
    release(r);
    return lvalue_result(lv);
  }

  Value increment(const Expr& e, bool want) {
    bool up = e.kind == Expr::Kind::pre_inc || e.kind == Expr::Kind::post_inc;
    bool post = e.kind == Expr::Kind::post_inc || e.kind == Expr::Kind::post_dec;
    Value lv = lvalue(e.args[0]);
    Value before;
    if (want && post) before = load(lv.kind == Value::Kind::deref ? Value::deref(lv.cell, false) : lv);
    sub(Value::of(up ? "inc" : "dec", true), lv);
    if (!want) {
      release(lv);
      return const_value(0);
    }
    if (post) {
      release(lv);
      return before;
    }
    return lvalue_result(lv);
  }

  // --- calls ---------------------------------------------------------------

  // Pushes a copy of v onto the stack.
  void push_value(const Value& v) {
    clear_stack_top();
    std::string p = new_patch();
    std::string tv = use(v);
    emit(p);
    emit("sp " + p);
    emit(tv + " Z");
    emit("Z " + p + ":0");
    emit("Z");
  }

  // dec sp; then zero the new top cell.
  void clear_stack_top() {
    std::string p1 = new_patch(), p2 = new_patch();
    emit("dec sp");
    emit(p1);
    emit("sp " + p1);
    emit(p2);
    emit("sp " + p2);
    emit(p1 + ":0 " + p2 + ":0");
  }

  // Pushes the return address and jumps to `target` (operand text).
  void push_return_and_jump(const std::string& ret, const std::string& target) {
    clear_stack_top();
    std::string p = new_patch();
    emit(p);
    emit("sp " + p);
    emit(address_cell(ret) + " " + p + ":0 " + target);
  }

  Value after_call(int argc, bool want) {
    sub(const_value(-(argc + 1)), Value::of("sp"));
    if (!want) return const_value(0);
    Value r = fresh();
    emit("ax " + r.cell);
    return r;
  }

  // Calls a runtime routine on already evaluated arguments, releasing them.
  Value runtime_call(const std::string& fn, std::vector<Value> args, bool want) {
    runtime_wanted_.insert(fn);
    for (auto it = args.rbegin(); it != args.rend(); ++it) {
      push_value(*it);
      release(*it);
    }
    std::string ret = new_label();
    push_return_and_jump(ret, mangle(fn));
    label(ret);
    return after_call(static_cast<int>(args.size()), want);
  }

  Value call(const Expr& e, bool want) {
    const Expr& callee = e.args[0];
    const std::size_t argc = e.args.size() - 1;
    bool direct = false;
    if (callee.kind == Expr::Kind::name) {
      Binding b = lookup(callee.name);
      if (b.kind == Binding::Kind::none && callee.name == "printf") return printf_call(e, want);
      if (b.kind == Binding::Kind::none) {
        if (declared_.count(callee.name))
          fail(Errc::undefined_function, "function '" + callee.name + "' is declared but never defined", callee.pos);
        fail(Errc::undefined_function, "undefined function '" + callee.name + "'", callee.pos);
      }
      direct = b.kind == Binding::Kind::function;
      if (direct) note_function_use(callee.name, callee.pos);
    }
    for (std::size_t i = argc; i >= 1; --i) {
      Value v = rvalue(e.args[i]);
      push_value(v);
      release(v);
    }
    std::string ret = new_label();
    if (direct) {
      push_return_and_jump(ret, mangle(callee.name));
    } else {
      Value target = to_cell(rvalue(callee));
      Value patched = Value::deref(target.cell, false);
      clear_stack_top();
      std::string p = new_patch();
      emit(p);
      emit("sp " + p);
      std::string jt = use(patched);
      emit(address_cell(ret) + " " + p + ":0 " + jt);
      release(target);
    }
    label(ret);
    return after_call(static_cast<int>(argc), want);
  }

  Value printf_call(const Expr& e, bool want) {
    if (e.args.size() < 2 || e.args[1].kind != Expr::Kind::string)
      fail(Errc::unsupported_construct, "printf needs a string literal format", e.pos);
    const std::string& fmt = e.args[1].text;
    const std::size_t argc = e.args.size() - 2;

    // Arguments are evaluated right to left, like any call.
    std::vector<Value> vals(argc);
    for (std::size_t i = argc; i >= 1; --i) {
      Value v = rvalue(e.args[i + 1]);
      bool later_effects = false;
      for (std::size_t j = 1; j < i; ++j) later_effects |= has_side_effects(e.args[j + 1]);
      vals[i - 1] = later_effects ? snapshot(v) : v;
    }
    std::size_t next = 0;
    for (std::size_t k = 0; k < fmt.size(); ++k) {
      char c = fmt[k];
      if (c != '%') {
        emit(constant(static_cast<unsigned char>(c)) + " (-1)");
        continue;
      }
      if (++k >= fmt.size()) fail(Errc::syntax_error, "dangling '%' in printf format", e.args[1].pos);
      char conv = fmt[k];
      if (conv == '%') {
        emit(constant('%') + " (-1)");
        continue;
      }
      if (conv != 'd' && conv != 'c')
        fail(Errc::unsupported_construct, std::string("printf conversion %") + conv + " is not supported", e.args[1].pos);
      if (next >= argc) fail(Errc::syntax_error, "printf has fewer arguments than conversions", e.pos);
      Value v = vals[next++];
      v.owned = false;  // released once below; a value may feed several conversions
      if (conv == 'c') {
        std::string tv = use(v);
        emit(tv + " (-1)");
      } else {
        runtime_call("printd", {v}, false);
      }
    }
    if (next != argc) fail(Errc::syntax_error, "printf has more arguments than conversions", e.pos);
    for (auto& v : vals) release(v);
    (void)want;
    return const_value(0);
  }

  // --- conditions ----------------------------------------------------------

  // d = a - b as a value (possibly one of the operands itself).
  Value difference(const Value& a, const Value& b) {
    if (b.is_const_zero()) return a;
    if (a.is_const_zero()) {
      Value t = fresh();
      sub(b, t);
      release(b);
      return t;
    }
    if (a.is_temp()) {
      sub(b, a);
      release(b);
      return a;
    }
    Value t = fresh();
    add_into(a, t);
    sub(b, t);
    release(a);
    release(b);
    return t;
  }

  void jump(const std::string& target) { code_.push_back({false, "Z Z " + target, true}); }

  // Jumps to T when d > 0 (positive=true) or d <= 0 (positive=false).
  void test_sign(const Value& d, bool positive, const std::string& t, const std::string& f) {
    if (positive) {
      sub(Value::of("Z"), d, f);
      jump(t);
    } else {
      sub(Value::of("Z"), d, t);
      jump(f);
    }
  }

  // Three-way split on d: lt / eq / gt targets. d is left unchanged and Z
  // is zero on every exit.
  void three_way(const Value& d, const std::string& lt, const std::string& eq, const std::string& gt) {
    std::string skip = new_label();
    sub(Value::of("Z"), d, skip);
    jump(gt);
    label(skip);
    std::string td = use(d);
    std::string maybe_zero = new_label(), zero = new_label();
    emit(td + " Z " + maybe_zero);
    emit("Z Z " + lt);  // also restores Z = 0 after Z -= d
    // Z = -d is 0 here, or INT_MIN when d = INT_MIN (which is negative).
    label(maybe_zero);
    emit("dec Z " + zero);
    emit("Z Z " + lt);
    label(zero);
    emit("inc Z " + eq);
  }

  void cond(const Expr& e, const std::string& t, const std::string& f) {
    if (auto c = fold_constant(e)) {
      jump(*c ? t : f);
      return;
    }
    if (e.kind == Expr::Kind::unary && e.op == Op::lnot) {
      cond(e.args[0], f, t);
      return;
    }
    if (e.kind == Expr::Kind::binary && (e.op == Op::land || e.op == Op::lor)) {
      std::string mid = new_label();
      if (e.op == Op::land) cond(e.args[0], mid, f);
      else cond(e.args[0], t, mid);
      label(mid);
      cond(e.args[1], t, f);
      return;
    }
    if (e.kind == Expr::Kind::binary && is_comparison(e.op)) {
      auto [l, r] = operands(e.args[0], e.args[1]);
      // x < 0 and x >= 0 through the difference would wrap for INT_MIN.
      bool lt_zero = (e.op == Op::lt && r.is_const_zero()) || (e.op == Op::gt && l.is_const_zero());
      bool ge_zero = (e.op == Op::ge && r.is_const_zero()) || (e.op == Op::le && l.is_const_zero());
      if (lt_zero || ge_zero) {
        Value x = r.is_const_zero() ? l : r;
        if (lt_zero) three_way(x, t, f, f);
        else three_way(x, f, t, t);
        release(x);
        return;
      }
      Value d;
      switch (e.op) {
        case Op::gt: d = difference(l, r); test_sign(d, true, t, f); break;
        case Op::lt: d = difference(r, l); test_sign(d, true, t, f); break;
        case Op::le: d = difference(l, r); test_sign(d, false, t, f); break;
        case Op::ge: d = difference(r, l); test_sign(d, false, t, f); break;
        case Op::eq: d = difference(l, r); three_way(d, f, t, f); break;
        default: d = difference(l, r); three_way(d, t, f, t); break;
      }
      release(d);
      return;
    }
    Value v = rvalue(e);
    three_way(v, t, f, t);
    release(v);
  }

  // C-style 0/1 from a condition.
  Value bool_value(const Expr& e) {
    Value r = fresh();
    std::string t = new_label(), f = new_label();
    cond(e, t, f);
    label(t);
    emit("inc " + r.cell);
    label(f);
    return r;
  }

  // --- statements ----------------------------------------------------------

  std::string user_label(const std::string& name) {
    auto it = labels_.find(name);
    if (it != labels_.end()) return it->second;
    std::string l = new_label();
    labels_.emplace(name, l);
    return l;
  }

  void statement(const Stmt& s) {
    if (opts_.statement_marks) {
      std::string m = "S" + std::to_string(marks_.size() + 1);
      label(m);
      marks_.push_back({m, fn_name_});
    }
    switch (s.kind) {
      case Stmt::Kind::empty:
        return;
      case Stmt::Kind::expr:
        discard(*s.expr);
        return;
      case Stmt::Kind::block:
        scopes_.emplace_back();
        for (const auto& item : s.body) statement(item);
        scopes_.pop_back();
        return;
      case Stmt::Kind::decl:
        for (const auto& d : s.decls) local_declaration(d);
        return;
      case Stmt::Kind::if_: {
        std::string then_l = new_label(), else_l = new_label();
        cond(*s.expr, then_l, else_l);
        label(then_l);
        statement(s.body[0]);
        if (s.body.size() > 1) {
          std::string end = new_label();
          jump(end);
          label(else_l);
          statement(s.body[1]);
          label(end);
        } else {
          label(else_l);
        }
        return;
      }
      case Stmt::Kind::while_: {
        std::string top = new_label(), body = new_label(), end = new_label();
        label(top);
        cond(*s.expr, body, end);
        label(body);
        loops_.push_back({end, top});
        statement(s.body[0]);
        loops_.pop_back();
        jump(top);
        label(end);
        return;
      }
      case Stmt::Kind::for_: {
        scopes_.emplace_back();
        for (const auto& i : s.init) statement(i);
        std::string top = new_label(), body = new_label(), cont = new_label(), end = new_label();
        label(top);
        if (s.expr) cond(*s.expr, body, end);
        label(body);
        loops_.push_back({end, cont});
        statement(s.body[0]);
        loops_.pop_back();
        label(cont);
        if (s.step) discard(*s.step);
        jump(top);
        label(end);
        scopes_.pop_back();
        return;
      }
      case Stmt::Kind::goto_:
        goto_refs_.emplace(s.name, s.pos);
        jump(user_label(s.name));
        return;
      case Stmt::Kind::label:
        if (!defined_labels_.insert(s.name).second)
          fail(Errc::duplicate_label, "label '" + s.name + "' redefined", s.pos);
        label(user_label(s.name));
        statement(s.body[0]);
        return;
      case Stmt::Kind::break_:
      case Stmt::Kind::continue_:
        if (loops_.empty()) fail(Errc::syntax_error, "break/continue outside a loop", s.pos);
        jump(s.kind == Stmt::Kind::break_ ? loops_.back().first : loops_.back().second);
        return;
      case Stmt::Kind::return_: {
        if (s.expr) {
          Value v = rvalue(*s.expr);
          emit("ax");
          sub(v, Value::of("ax"));
          release(v);
        } else {
          emit("ax");
        }
        jump(epilogue_);
        return;
      }
    }
  }

  void local_declaration(const Declarator& d) {
    int off = declare_local(d);
    if (d.init.empty()) return;
    if (!d.is_array) {
      Value v = rvalue(d.init[0]);
      copy(v, Value::frame(off));
      release(v);
      return;
    }
    for (int k = 0; k < d.array_size; ++k) {
      if (k < static_cast<int>(d.init.size())) {
        Value v = rvalue(d.init[k]);
        copy(v, Value::frame(off + k));
        release(v);
      } else {
        clear(Value::frame(off + k));
      }
    }
  }

  // --- functions -----------------------------------------------------------

  void gen_function(const Function& fn, bool runtime) {
    compiling_runtime_ = runtime;
    fn_name_ = fn.name;
    code_.clear();
    scopes_.assign(1, {});
    labels_.clear();
    defined_labels_.clear();
    goto_refs_.clear();
    loops_.clear();
    stack_size_ = 0;
    frame_ = FrameLayout{fn.name, {}, 0};
    pool_.begin_function();
    epilogue_ = new_label();

    for (std::size_t i = 0; i < fn.params.size(); ++i) {
      const auto& p = fn.params[i];
      if (scopes_[0].count(p.name)) fail(Errc::duplicate_label, "parameter '" + p.name + "' repeated", p.pos);
      int off = -2 - static_cast<int>(i);
      scopes_[0][p.name] = Local{off, false};
      frame_.slots.emplace_back(p.name, off);
    }
    scopes_.emplace_back();
    for (const auto& s : fn.body) statement(s);
    if (fn.body.empty() || fn.body.back().kind != Stmt::Kind::return_) emit("ax");
    for (const auto& [name, pos] : goto_refs_)
      if (!defined_labels_.count(name)) fail(Errc::undefined_label, "goto to undefined label '" + name + "'", pos);

    std::vector<Line> body = std::move(code_);
    code_.clear();

    std::vector<std::string> temps;
    for (int n : pool_.used()) temps.push_back(TempPool::name(n));

    label(mangle(fn.name));
    emit_raw("dec sp; ?+11; sp ?+7; ?+6; sp ?+2; 0");
    emit_raw("?+6; sp ?+2; bp 0");
    emit_raw("bp; sp bp");
    emit_raw("nbp; bp nbp");
    if (stack_size_ > 0) emit(constant(stack_size_) + " sp");
    for (const auto& t : temps) {
      emit_raw("dec sp; ?+11; sp ?+7; ?+6; sp ?+2; 0");
      emit_raw("?+6; sp ?+2; " + t + " 0");
    }
    code_.insert(code_.end(), body.begin(), body.end());
    label(epilogue_);
    for (auto it = temps.rbegin(); it != temps.rend(); ++it)
      emit_raw("?+8; sp ?+4; " + *it + "; 0 " + *it + "; inc sp");
    emit_raw("sp; bp sp");
    emit_raw("?+8; sp ?+4; bp; 0 bp; inc sp");
    emit_raw("nbp; bp nbp");
    emit_raw("?+8; sp ?+4; ?+7; 0 ?+3; Z Z 0");

    peephole(code_);
    out_ << "\n# function " << fn.name << "\n";
    for (const auto& line : code_) out_ << (line.is_label ? line.text + ":" : line.text) << "\n";

    frame_.stack_size = stack_size_;
    std::stable_sort(frame_.slots.begin(), frame_.slots.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    frames_.push_back(frame_);
    temps_[fn.name] = static_cast<int>(temps.size());
  }

  // Sequences whose `?` offsets assume consecutive cells stay on one line.
  void emit_raw(std::string text) { code_.push_back({false, std::move(text), false}); }

  // Drops `Z Z L` when L labels the very next cell.
  static void peephole(std::vector<Line>& code) {
    std::vector<Line> out;
    for (std::size_t i = 0; i < code.size(); ++i) {
      const Line& l = code[i];
      if (l.pure_jump) {
        std::string target = l.text.substr(4);
        bool next = false;
        for (std::size_t j = i + 1; j < code.size() && code[j].is_label; ++j)
          if (code[j].text == target) next = true;
        if (next) continue;
      }
      out.push_back(l);
    }
    code = std::move(out);
  }

  // --- program -------------------------------------------------------------

  void collect_globals(const Unit& unit) {
    for (const auto& d : unit.globals) {
      if (globals_.count(d.name)) fail(Errc::duplicate_label, "global '" + d.name + "' redefined", d.pos);
      GlobalVar g;
      g.is_array = d.is_array;
      g.cells.assign(d.is_array ? d.array_size : 1, 0);
      for (std::size_t k = 0; k < d.init.size(); ++k) {
        auto v = fold_constant(d.init[k]);
        if (!v) fail(Errc::unsupported_construct, "global initializers must be integer constants", d.init[k].pos);
        g.cells[k] = *v;
      }
      globals_.emplace(d.name, std::move(g));
      global_order_.push_back(d.name);
    }
  }

  void emit_runtime() {
    if (runtime_wanted_.empty()) return;
    Unit rt = parse_c(runtime_source());
    std::set<std::string> done;
    for (;;) {
      auto it = std::find_if(runtime_wanted_.begin(), runtime_wanted_.end(),
                             [&](const std::string& n) { return !done.count(n); });
      if (it == runtime_wanted_.end()) break;
      std::string name = *it;
      done.insert(name);
      if (functions_.count(name) || globals_.count(name))
        throw Error(Errc::duplicate_label, "function '" + name + "' collides with the runtime routine of the same name");
      auto fn = std::find_if(rt.functions.begin(), rt.functions.end(),
                             [&](const Function& f) { return f.name == name; });
      gen_function(*fn, true);
      runtime_emitted_.push_back(name);
    }
  }

  CompileResult finish() {
    for (const auto& [name, pos] : called_)
      if (!functions_.count(name) && !is_runtime_name(name))
        fail(Errc::undefined_function, "undefined function '" + name + "'", pos);

    std::ostringstream prog;
    prog << "0 0 sqmain\n" << out_.str();

    // Entry trampoline: call main, then halt.
    code_.clear();
    label("sqmain");
    std::string ret = new_label();
    push_return_and_jump(ret, mangle("main"));
    label(ret);
    emit("inc sp");
    emit("0 0 (-1)");
    prog << "\n";
    for (const auto& line : code_) prog << (line.is_label ? line.text + ":" : line.text) << "\n";

    prog << "\n";
    for (const auto& name : global_order_) {
      const GlobalVar& g = globals_.at(name);
      prog << ". " << mangle(name) << ":" << word_text(g.cells[0]);
      for (std::size_t k = 1; k < g.cells.size(); ++k) prog << " " << word_text(g.cells[k]);
      prog << "\n";
    }
    emit_data_list(prog, [&](auto add) {
      for (int n = 1; n <= pool_.minted(); ++n) add(TempPool::name(n) + ":0");
    });
    emit_data_list(prog, [&](auto add) {
      for (const auto& [v, n] : consts_) add(n + ":" + word_text(v));
    });
    emit_data_list(prog, [&](auto add) {
      for (const auto& target : address_order_) add(addresses_.at(target) + ":" + target);
    });
    prog << kRegisterData << "\n" << kFinalData << "\n";

    CompileResult res;
    res.assembly = prog.str();
    res.frames = frames_;
    res.temporaries = temps_;
    res.runtime_routines = runtime_emitted_;
    res.marks = marks_;
    return res;
  }

  template <typename Fill>
  static void emit_data_list(std::ostringstream& os, Fill fill) {
    std::vector<std::string> items;
    fill([&](std::string s) { items.push_back(std::move(s)); });
    for (std::size_t i = 0; i < items.size(); i += 8) {
      os << ".";
      for (std::size_t k = i; k < std::min(items.size(), i + 8); ++k) os << " " << items[k];
      os << "\n";
    }
  }

  static Error combine(const std::vector<Error>& errors) {
    if (errors.size() == 1) return errors.front();
    std::string msg = std::to_string(errors.size()) + " errors:";
    for (const auto& e : errors) msg += "\n  " + std::string(e.what());
    return Error(errors.front().code(), msg, errors.front().line(), errors.front().column());
  }

  const CompileOptions& opts_;
  TempPool pool_;
  std::ostringstream out_;
  std::vector<Line> code_;
  int label_counter_ = 0;
  int patch_counter_ = 0;
  std::map<Word, std::string> consts_;
  std::map<std::string, std::string> addresses_;
  std::vector<std::string> address_order_;

  std::map<std::string, GlobalVar> globals_;
  std::vector<std::string> global_order_;
  std::set<std::string> functions_;
  std::set<std::string> declared_;
  std::multimap<std::string, SourcePos> called_;
  std::set<std::string> runtime_wanted_;
  std::vector<std::string> runtime_emitted_;
  bool compiling_runtime_ = false;

  std::string fn_name_;
  std::vector<std::map<std::string, Local>> scopes_;
  std::map<std::string, std::string> labels_;
  std::set<std::string> defined_labels_;
  std::multimap<std::string, SourcePos> goto_refs_;
  std::vector<std::pair<std::string, std::string>> loops_;  // break, continue
  std::string epilogue_;
  int stack_size_ = 0;
  FrameLayout frame_;

  std::vector<FrameLayout> frames_;
  std::map<std::string, int> temps_;
  std::vector<StatementMark> marks_;
};

}  // namespace

CompileResult compile(const Unit& unit, const CompileOptions& options) {
  return Codegen(options).run(unit);
}

CompileResult compile(std::string_view source, const CompileOptions& options) {
  return compile(parse_c(source), options);
}

std::string format_frame_map(const std::vector<FrameLayout>& frames) {
  std::ostringstream os;
  for (const auto& f : frames) {
    os << "function " << f.function << " stack_size " << f.stack_size << "\n";
    for (const auto& [name, off] : f.slots) os << name << " " << off << "\n";
  }
  return os.str();
}

}  // namespace subleq::cc
