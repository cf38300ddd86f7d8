#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamir/ir.hpp"

namespace streamir {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

struct Diagnostic {
  std::string file;
  SourceLoc loc;
  std::string severity = "error";
  std::string message;
  std::string format() const;
};

struct SpecError : std::runtime_error {
  explicit SpecError(std::vector<Diagnostic> ds);
  std::vector<Diagnostic> diagnostics;
};

// Positive boolean combination of input names.
struct EventFormula {
  enum class Kind { Atom, And, Or } kind = Kind::Atom;
  std::string name;
  std::vector<EventFormula> args;

  bool eval(const std::set<std::string>& present) const;
  void atoms(std::set<std::string>& out) const;
  std::string str() const;
  bool operator==(const EventFormula& o) const;
};

struct Pacing {
  enum class Kind { Event, Global, Local } kind = Kind::Event;
  EventFormula event;
  Duration period;
  bool operator==(const Pacing& o) const;
  std::string str() const;
};

struct Clause {
  std::optional<Pacing> pacing;  // filled by infer_pacings
  ExprPtr when;                  // nullptr = true
  ExprPtr with;                  // nullptr for close
  // Streams accessed synchronously (excluding .hold() reads); drives pacing inference.
  std::vector<std::string> sync_deps;
  SourceLoc loc;
  bool operator==(const Clause& o) const;
};

struct InputDecl {
  std::string name;
  Type type = Type::Int64;
  SourceLoc loc;
};

struct OutputDecl {
  std::string name;
  bool parameterized = false;
  std::string param_name;
  Type param_type = Type::Unit;
  Type type = Type::Unit;
  std::optional<Clause> spawn;  // parameterized only
  Clause eval;
  std::optional<Clause> close;
  SourceLoc loc;
};

struct StreamSpec {
  std::string file;
  std::vector<InputDecl> inputs;
  std::vector<OutputDecl> outputs;
  std::set<Freq> frequencies;  // every Global and Local frequency used; filled by infer_pacings

  const InputDecl* input(std::string_view n) const;
  const OutputDecl* output(std::string_view n) const;
  bool is_input(std::string_view n) const { return input(n) != nullptr; }
  // Declaration index over inputs followed by outputs; -1 if unknown.
  int decl_index(std::string_view n) const;
  Type value_type(std::string_view n) const;
  std::size_t stream_count() const { return inputs.size() + outputs.size(); }
};

// Parses and type-checks; pacings stay as written (possibly absent).
StreamSpec parse_spec(std::string_view text, std::string file = "<spec>");
StreamSpec infer_pacings(StreamSpec spec);

struct Task {
  enum class Kind { Input, Spawn, Shift, Eval, Close } kind = Kind::Input;
  std::string stream;
  auto operator<=>(const Task&) const = default;
  std::string str() const;
};

struct DependencyGraph {
  std::vector<Task> nodes;
  std::set<std::pair<std::size_t, std::size_t>> edges;  // indices into nodes
  std::optional<std::size_t> find(const Task& t) const;
  bool has_edge(const Task& a, const Task& b) const;
};

using LayerList = std::vector<std::vector<Task>>;

DependencyGraph build_dependency_graph(const StreamSpec& spec);
LayerList compute_layers(const DependencyGraph& g, const StreamSpec* spec = nullptr);

struct MemoryBound {
  std::size_t length = 1;
  bool window = false;
  Duration max_window;
};
using MemoryBounds = std::map<std::string, MemoryBound>;

MemoryBounds compute_memory_bounds(const StreamSpec& spec);

struct AnalyzedSpec {
  StreamSpec spec;
  DependencyGraph graph;
  LayerList layers;
  MemoryBounds bounds;
  std::vector<Diagnostic> warnings;
  int layer_of(const Task& t) const;
};

// parse → infer pacings → graph → layers → bounds. Throws SpecError.
AnalyzedSpec analyze(std::string_view text, std::string file = "<spec>");
AnalyzedSpec analyze(StreamSpec spec);

// Type of an expression under a stream environment; nullopt if ill-typed.
struct TypeEnv {
  const StreamSpec* spec = nullptr;
  Type self_type = Type::Unit;
  bool has_self = false;
};
std::optional<Type> type_of(const ExprPtr& e, const TypeEnv& env, std::string* err = nullptr);

// Static well-formedness of a monitor against a spec; empty iff well-formed.
std::vector<std::string> well_formed(const Monitor& m, const StreamSpec& spec);

}  // namespace streamir
