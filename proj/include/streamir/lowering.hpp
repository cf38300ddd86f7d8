#pragma once

#include "streamir/memory.hpp"
#include "streamir/spec.hpp"

namespace streamir {

GuardPtr pacing_guard(const Pacing& p, const std::string& stream);
StmtPtr translate_task(const StreamSpec& spec, const Task& t);
Monitor translate(const StreamSpec& spec, const LayerList& layers);

// Inputs empty; non-parameterized outputs live with an empty prefix; no parameterized instances.
// Global deadlines start one period after 0; local deadlines exist for the always-live outputs only.
Memory initial_memory(const StreamSpec& spec, const MemoryLayout* layout = nullptr, bool allow_single_cell = true);

}  // namespace streamir
