#include "streamir/memory.hpp"

namespace streamir {

Prefix Prefix::of(const std::vector<std::pair<Time, Value>>& pairs, bool trailing_slot) {
  Prefix p;
  for (auto& [t, v] : pairs) {
    p.slots_.push_back(Slot{true, t, v});
    ++p.length_;
  }
  if (trailing_slot) {
    p.slots_.push_back(Slot{});
    ++p.length_;
  }
  return p;
}

void Prefix::shift(Time now) {
  if (storage_.kind == StorageKind::SingleCell) return;
  slots_.push_back(Slot{});
  ++length_;
  if (storage_.kind == StorageKind::Ring) {
    while (slots_.size() > storage_.keep) slots_.pop_front();
  } else if (storage_.kind == StorageKind::TimedDeque) {
    while (slots_.size() > storage_.keep && slots_.front().filled && slots_.front().t < now - storage_.horizon)
      slots_.pop_front();
  }
}

void Prefix::fill(Time t, Value v) {
  if (storage_.kind == StorageKind::SingleCell) {
    slots_.clear();
    slots_.push_back(Slot{true, t, std::move(v)});
    length_ = 1;
    return;
  }
  if (slots_.empty() || slots_.back().filled) throw RuntimeFault("no unfilled slot to write");
  slots_.back() = Slot{true, t, std::move(v)};
}

void Prefix::overwrite(Time t, Value v) {
  if (slots_.empty()) {
    slots_.push_back(Slot{});
    ++length_;
  }
  slots_.back() = Slot{true, t, std::move(v)};
}

const Slot* Prefix::from_end(std::uint64_t off) const {
  if (off >= length_) return nullptr;
  if (off >= slots_.size()) throw RuntimeFault("offset access beyond retained memory (bound violated)");
  return &slots_[slots_.size() - 1 - off];
}

std::optional<Time> Deadlines::min() const {
  std::optional<Time> m;
  for (auto& [f, t] : global)
    if (t && (!m || *t < *m)) m = t;
  for (auto& [k, t] : local)
    if (!m || t < *m) m = t;
  return m;
}

const Instance* Memory::find(const std::string& s, const Value& inst) const {
  auto it = prefixes.find(s);
  if (it == prefixes.end()) return nullptr;
  auto jt = it->second.find(inst);
  if (jt == it->second.end() || jt->second.closed) return nullptr;
  return &jt->second;
}

Instance* Memory::find(const std::string& s, const Value& inst) {
  return const_cast<Instance*>(static_cast<const Memory*>(this)->find(s, inst));
}

std::optional<std::vector<Value>> slice(const Prefix* p, Time cutoff, bool strict) {
  if (!p) return std::nullopt;
  std::vector<Value> out;
  const auto& slots = p->slots();
  for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
    if (!it->filled) throw RuntimeFault("window over an unfilled slot");
    bool keep = strict ? cutoff < it->t : cutoff <= it->t;
    if (!keep) break;
    out.push_back(it->v);
  }
  return std::vector<Value>(out.rbegin(), out.rend());
}

Storage storage_for(const StreamLayout& l, bool allow_single_cell) {
  switch (l.values) {
    case StreamLayout::Values::Unbounded: return Storage{};
    case StreamLayout::Values::SingleCell:
      if (allow_single_cell) return Storage{StorageKind::SingleCell, 1, {}};
      return Storage{StorageKind::Ring, 1, {}};
    case StreamLayout::Values::Ring: return Storage{StorageKind::Ring, l.k, {}};
    case StreamLayout::Values::TimedDeque: return Storage{StorageKind::TimedDeque, l.k, l.horizon};
  }
  return Storage{};
}

}  // namespace streamir
