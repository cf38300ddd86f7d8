#include "streamir/pipeline.hpp"

#include "streamir/lowering.hpp"

namespace streamir {

std::optional<OptLevel> parse_opt_level(std::string_view s) {
  if (s == "none") return OptLevel::None;
  if (s == "stmt") return OptLevel::Stmt;
  if (s == "mem") return OptLevel::Mem;
  if (s == "all") return OptLevel::All;
  return std::nullopt;
}

Compiled compile(const AnalyzedSpec& a, const CompileOptions& o) {
  Compiled c;
  c.monitor = translate(a.spec, a.layers);
  bool stmt = o.level == OptLevel::Stmt || o.level == OptLevel::All;
  bool mem = o.level == OptLevel::Mem || o.level == OptLevel::All;
  if (mem) c.layout = optimize_memory(a, &c.monitor.body);
  if (!stmt && !mem && o.only.empty()) {
    c.rewrite.body = c.monitor.body;
    return c;
  }
  RewriteConfig cfg = default_rewrite_config(stmt, mem);
  if (!o.only.empty()) cfg.enabled = o.only;
  cfg.max_passes = o.max_passes;
  RewriteContext ctx = rewrite_context(a, c.layout ? &*c.layout : nullptr);
  ctx.broken_unique_assign = o.broken_unique_assign;
  c.rewrite = rewrite_fixpoint(c.monitor.body, cfg, ctx, o.observe);
  c.monitor.body = c.rewrite.body;
  return c;
}

RunResult interpret(const AnalyzedSpec& a, const Compiled& c, const std::vector<TraceEvent>& trace,
                    RunOptions opts) {
  Memory init = initial_memory(a.spec, c.layout ? &*c.layout : nullptr, true);
  return run(c.monitor, std::move(init), trace, opts);
}

RunResult interpret(const AnalyzedSpec& a, const Compiled& c, const std::vector<TraceEvent>& trace) {
  return interpret(a, c, trace, default_run_options(a));
}

std::string verdict_log(const std::vector<VerdictRecord>& vs) {
  std::string out;
  for (auto& v : vs) out += format_verdict(v) + "\n";
  return out;
}

}  // namespace streamir
