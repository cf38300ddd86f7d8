#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamir/ir.hpp"
#include "streamir/memory.hpp"
#include "streamir/spec.hpp"

namespace streamir {

struct EmissionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a backend sees about the monitor being emitted.
struct EmitInput {
  const AnalyzedSpec* spec = nullptr;
  const MemoryLayout* layout = nullptr;  // null: unbounded prefixes
  StmtPtr event_body;
  StmtPtr timed_body;
  bool instrument = false;
  std::string ns = "monitor";  // namespace of the generated code
};

// Current binder while walking a body.
struct Scope {
  std::string self;     // variable holding the bound instance
  Type self_type = Type::Unit;
};

// One hook per IR constructor plus program-level hooks. Operands and bodies arrive
// already rendered. Unimplemented hooks throw EmissionError naming the construct.
class Formatter {
 public:
  virtual ~Formatter() = default;

  virtual std::string expr_const(const Value& v);
  virtual std::string expr_self(const Scope& sc);
  virtual std::string expr_syn(const std::string& stream, const std::string& inst);
  virtual std::string expr_get(const std::string& stream, const std::string& inst, std::uint32_t offset,
                               const std::string& dft);
  virtual std::string expr_window(const std::string& stream, const std::string& inst, Duration dur,
                                  const Aggregation& agg);
  virtual std::string expr_bin(BinOp op, Type operand, const std::string& l, const std::string& r);
  virtual std::string expr_un(UnOp op, Type operand, const std::string& a);

  virtual std::string guard_input(const std::string& stream);
  virtual std::string guard_schedule(const Freq& f, const Scope& sc);
  virtual std::string guard_dynamic(const std::string& e);
  virtual std::string guard_and(const std::string& a, const std::string& b);
  virtual std::string guard_or(const std::string& a, const std::string& b);
  virtual std::string guard_true();
  virtual std::string guard_false();

  virtual std::string stmt_skip();
  virtual std::string stmt_shift(const std::string& stream, const Scope& sc);
  virtual std::string stmt_input(const std::string& stream);
  virtual std::string stmt_spawn(const std::string& stream, const std::string& inst);
  virtual std::string stmt_eval(const std::string& stream, const Scope& sc, const std::string& value);
  virtual std::string stmt_close(const std::string& stream, const Scope& sc);
  virtual std::string stmt_seq(const std::string& a, const std::string& b);
  virtual std::string stmt_par(const std::string& a, const std::string& b);
  virtual std::string stmt_if(const std::string& g, const std::string& then_s, const std::string& else_s);
  virtual std::string stmt_iterate(const std::string& stream, const Scope& inner, const std::string& body);
  virtual std::string stmt_assign(const std::string& stream, const Scope& inner, const std::string& inst,
                                  const std::string& body);

  // Storage and deadline declarations.
  virtual std::string memory_decls(const EmitInput& in);
  // Trace reading, deadline scheduling and the two body procedures.
  virtual std::string driver(const EmitInput& in, const std::string& event_body, const std::string& timed_body);
  // Files besides the main source, e.g. a runtime header.
  virtual std::map<std::string, std::string> support_files();
  virtual std::string main_file_name() { return "monitor.src"; }
  virtual std::vector<std::string> build_commands(const std::string& dir);

  // Called by the walker before rendering a program.
  virtual void begin(const EmitInput& in) { in_ = &in; }

 protected:
  const EmitInput* in_ = nullptr;
};

// Reference backend: standalone C++20 batch program.
class CppFormatter : public Formatter {
 public:
  std::string expr_const(const Value& v) override;
  std::string expr_self(const Scope& sc) override;
  std::string expr_syn(const std::string& stream, const std::string& inst) override;
  std::string expr_get(const std::string& stream, const std::string& inst, std::uint32_t offset,
                       const std::string& dft) override;
  std::string expr_window(const std::string& stream, const std::string& inst, Duration dur,
                          const Aggregation& agg) override;
  std::string expr_bin(BinOp op, Type operand, const std::string& l, const std::string& r) override;
  std::string expr_un(UnOp op, Type operand, const std::string& a) override;

  std::string guard_input(const std::string& stream) override;
  std::string guard_schedule(const Freq& f, const Scope& sc) override;
  std::string guard_dynamic(const std::string& e) override;
  std::string guard_and(const std::string& a, const std::string& b) override;
  std::string guard_or(const std::string& a, const std::string& b) override;
  std::string guard_true() override;
  std::string guard_false() override;

  std::string stmt_skip() override;
  std::string stmt_shift(const std::string& stream, const Scope& sc) override;
  std::string stmt_input(const std::string& stream) override;
  std::string stmt_spawn(const std::string& stream, const std::string& inst) override;
  std::string stmt_eval(const std::string& stream, const Scope& sc, const std::string& value) override;
  std::string stmt_close(const std::string& stream, const Scope& sc) override;
  std::string stmt_seq(const std::string& a, const std::string& b) override;
  std::string stmt_par(const std::string& a, const std::string& b) override;
  std::string stmt_if(const std::string& g, const std::string& then_s, const std::string& else_s) override;
  std::string stmt_iterate(const std::string& stream, const Scope& inner, const std::string& body) override;
  std::string stmt_assign(const std::string& stream, const Scope& inner, const std::string& inst,
                          const std::string& body) override;

  std::string memory_decls(const EmitInput& in) override;
  std::string driver(const EmitInput& in, const std::string& event_body, const std::string& timed_body) override;
  std::map<std::string, std::string> support_files() override;
  std::string main_file_name() override { return "monitor.cpp"; }
  std::vector<std::string> build_commands(const std::string& dir) override;

 private:
  std::string count(int stmt_kind) const;
  std::string eval_count() const;
};

struct EmittedProgram {
  std::map<std::string, std::string> files;  // relative path -> text
  std::vector<std::string> build;            // shell commands, run from the output directory
  std::string entry = "monitor";             // executable produced by the build
};

// The runtime header text, embedded at build time.
extern const char* const kRuntimeHeader;

// Splits the body into event/timed halves and renders it through `f`.
EmittedProgram emit(const Monitor& m, const AnalyzedSpec& spec, const MemoryLayout* layout, Formatter& f,
                    bool instrument = false);

// Several monitors in one translation unit; the program takes `--monitor N`.
struct BundleItem {
  const Monitor* monitor;
  const AnalyzedSpec* spec;
  const MemoryLayout* layout;
};
EmittedProgram emit_bundle(const std::vector<BundleItem>& items, bool instrument = false);

struct BackendReport {
  bool built = false;
  std::string build_output;
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Writes the program into `dir` and builds it with the host compiler ($CXX or c++).
BackendReport build_program(const EmittedProgram& p, const std::string& dir, const std::string& opt_flag = "-O1");
// Runs a built program over a trace file.
BackendReport run_program(const std::string& exe, const std::string& trace_path,
                          const std::vector<std::string>& extra_args = {});
// Build, then run over `trace_path`.
BackendReport check_backend(const EmittedProgram& p, const std::string& dir, const std::string& trace_path);

}  // namespace streamir
