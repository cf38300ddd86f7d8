#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "streamir/ir.hpp"

namespace streamir {

struct RuntimeFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StorageKind { Unbounded, Ring, SingleCell, TimedDeque };

struct Storage {
  StorageKind kind = StorageKind::Unbounded;
  std::size_t keep = 1;  // ring size, or minimum retained entries for a timed deque
  Duration horizon;      // timed deque: entries older than now - horizon may be dropped
};

struct Slot {
  bool filled = false;
  Time t;
  Value v;
};

// A stream instance's prefix. Logical length is tracked separately from what is stored.
class Prefix {
 public:
  explicit Prefix(Storage s = {}) : storage_(s) {}
  static Prefix of(const std::vector<std::pair<Time, Value>>& pairs, bool trailing_slot = false);

  void shift(Time now);
  void fill(Time t, Value v);
  // Writes into the last slot even if it is filled (appends when empty).
  void overwrite(Time t, Value v);
  // Last slot; nullptr when empty.
  const Slot* last() const { return slots_.empty() ? nullptr : &slots_.back(); }
  // Slot at 1-indexed position length - off, i.e. `off` positions before the last one.
  const Slot* from_end(std::uint64_t off) const;
  std::uint64_t length() const { return length_; }
  std::size_t stored() const { return slots_.size(); }
  const std::deque<Slot>& slots() const { return slots_; }
  const Storage& storage() const { return storage_; }

 private:
  Storage storage_;
  std::deque<Slot> slots_;
  std::uint64_t length_ = 0;
};

struct Instance {
  Prefix prefix;
  Time spawned;
  bool closed = false;  // only used by the seeded "iterate over closed instances" bug
};

// Instances keyed by parameter value; a non-parameterized stream has the single key ().
using InstanceMap = std::map<Value, Instance>;

struct LocalKey {
  Duration period;
  std::string stream;
  Value inst;
  auto operator<=>(const LocalKey& o) const {
    if (auto c = period <=> o.period; c != 0) return c;
    if (auto c = stream <=> o.stream; c != 0) return c;
    return inst.compare(o.inst);
  }
  bool operator==(const LocalKey& o) const { return (*this <=> o) == 0; }
};

struct Deadlines {
  std::map<Duration, std::optional<Time>> global;
  std::map<LocalKey, Time> local;  // absent key = no deadline
  // Local frequencies in use, as (period, stream); new instances get a deadline for each.
  std::set<std::pair<Duration, std::string>> local_freqs;

  std::optional<Time> min() const;
  bool operator==(const Deadlines& o) const { return global == o.global && local == o.local; }
};

struct Memory {
  std::map<std::string, InstanceMap> prefixes;
  Deadlines deadlines;
  // Storage policy for instances created by spawn.
  std::map<std::string, Storage> storage;
  // Declared value types; an empty window still needs one to pick its neutral element.
  std::map<std::string, Type> types;

  const Instance* find(const std::string& s, const Value& inst) const;
  Instance* find(const std::string& s, const Value& inst);
  bool live(const std::string& s, const Value& inst) const { return find(s, inst) != nullptr; }
};

// Values with time >= cutoff, oldest first; stops at the first older pair. nullopt for ⊥.
std::optional<std::vector<Value>> slice(const Prefix* p, Time cutoff, bool strict = false);

// Per-stream representation chosen by the memory optimization.
struct StreamLayout {
  enum class Values { Unbounded, SingleCell, Ring, TimedDeque } values = Values::Unbounded;
  enum class Instances { NotParameterized, InstanceMap, ParameterErased } instances = Instances::NotParameterized;
  std::size_t k = 1;
  Duration horizon;
};
using MemoryLayout = std::map<std::string, StreamLayout>;

Storage storage_for(const StreamLayout& l, bool allow_single_cell = true);

}  // namespace streamir
