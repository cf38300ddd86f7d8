#include "streamir/lowering.hpp"

namespace streamir {

namespace {

GuardPtr event_guard(const EventFormula& f) {
  switch (f.kind) {
    case EventFormula::Kind::Atom: return ir::input_present(f.name);
    case EventFormula::Kind::And: {
      GuardPtr g = event_guard(f.args[0]);
      for (std::size_t i = 1; i < f.args.size(); ++i) g = ir::g_and(g, event_guard(f.args[i]));
      return g;
    }
    case EventFormula::Kind::Or: {
      GuardPtr g = event_guard(f.args[0]);
      for (std::size_t i = 1; i < f.args.size(); ++i) g = ir::g_or(g, event_guard(f.args[i]));
      return g;
    }
  }
  return ir::g_true();
}

GuardPtr clause_guard(const Clause& c, const std::string& stream) {
  GuardPtr g = pacing_guard(*c.pacing, stream);
  if (c.when) g = ir::g_and(g, ir::dynamic(c.when));
  return g;
}

}  // namespace

GuardPtr pacing_guard(const Pacing& p, const std::string& stream) {
  switch (p.kind) {
    case Pacing::Kind::Event: return event_guard(p.event);
    case Pacing::Kind::Global: return ir::schedule_global(p.period);
    case Pacing::Kind::Local: return ir::schedule_local(p.period, stream);
  }
  return ir::g_true();
}

StmtPtr translate_task(const StreamSpec& spec, const Task& t) {
  using K = Task::Kind;
  if (t.kind == K::Input)
    return ir::if_(ir::input_present(t.stream), ir::seq(ir::shift(t.stream), ir::input(t.stream)));
  const OutputDecl& o = *spec.output(t.stream);
  switch (t.kind) {
    case K::Spawn: return ir::if_(clause_guard(*o.spawn, o.name), ir::spawn(o.name, o.spawn->with));
    case K::Shift: return ir::iterate(o.name, ir::if_(clause_guard(o.eval, o.name), ir::shift(o.name)));
    case K::Eval: return ir::iterate(o.name, ir::if_(clause_guard(o.eval, o.name), ir::eval(o.name, o.eval.with)));
    case K::Close: return ir::iterate(o.name, ir::if_(clause_guard(*o.close, o.name), ir::close(o.name)));
    default: break;
  }
  return ir::skip();
}

Monitor translate(const StreamSpec& spec, const LayerList& layers) {
  std::vector<StmtPtr> ls;
  for (auto& layer : layers) {
    std::vector<StmtPtr> tasks;
    for (auto& t : layer) tasks.push_back(translate_task(spec, t));
    if (!tasks.empty()) ls.push_back(ir::par_all(tasks));
  }
  return Monitor{ir::seq_all(ls)};
}

Memory initial_memory(const StreamSpec& spec, const MemoryLayout* layout, bool allow_single_cell) {
  Memory m;
  auto storage = [&](const std::string& s) {
    if (!layout) return Storage{};
    auto it = layout->find(s);
    return it == layout->end() ? Storage{} : storage_for(it->second, allow_single_cell);
  };
  for (auto& i : spec.inputs) {
    m.storage[i.name] = storage(i.name);
    m.types[i.name] = i.type;
    m.prefixes[i.name].emplace(Value(Unit{}), Instance{Prefix(m.storage[i.name]), Time{0}});
  }
  for (auto& o : spec.outputs) {
    m.storage[o.name] = storage(o.name);
    m.types[o.name] = o.type;
    auto& map = m.prefixes[o.name];
    if (!o.parameterized) map.emplace(Value(Unit{}), Instance{Prefix(m.storage[o.name]), Time{0}});
  }
  for (auto& f : spec.frequencies) {
    if (!f.local) {
      m.deadlines.global[f.period] = Time{0} + f.period;
    } else {
      m.deadlines.local_freqs.insert({f.period, f.stream});
      const OutputDecl* o = spec.output(f.stream);
      if (o && !o->parameterized) m.deadlines.local[LocalKey{f.period, f.stream, Value(Unit{})}] = Time{0} + f.period;
    }
  }
  return m;
}

}  // namespace streamir
