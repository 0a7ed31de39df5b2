#pragma once

#include "bfo/checker.hpp"
#include "bfo/rational.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bfo {

/// Runtime value: an integer or a heap address.
struct Value {
  enum class Kind { Int, Addr };
  Kind kind = Kind::Int;
  long long v = 0;

  static Value integer(long long n) { return {Kind::Int, n}; }
  static Value address(long long a) { return {Kind::Addr, a}; }
  bool is_int() const { return kind == Kind::Int; }
  bool is_addr() const { return kind == Kind::Addr; }

  friend bool operator==(const Value&, const Value&) = default;
};

/// Deterministic input stream resolving `_` reads: an explicit value list
/// (0 once exhausted) or a seeded uniform generator over a closed range.
class HavocStream {
 public:
  static HavocStream from_list(std::vector<long long> values);
  static HavocStream seeded(std::uint64_t seed, long long lo = -2,
                            long long hi = 2);

  long long next();
  /// Every value handed out so far, in order (replayable as from_list).
  const std::vector<long long>& drawn() const { return drawn_; }

 private:
  HavocStream() = default;
  std::vector<long long> list_;
  std::size_t pos_ = 0;
  bool use_rng_ = false;
  std::mt19937_64 rng_;
  long long lo_ = 0, hi_ = 0;
  std::vector<long long> drawn_;
};

enum class RunStatus { Done, Fail, AliasFail, FuelExhausted, Stuck, AuditViolated };
const char* status_str(RunStatus s);

/// First ownership-accounting violation found by the dynamic audit.
struct AuditViolation {
  long long step = 0;
  long long addr = 0;
  Rational own_total;
  std::string message;
};

/// One observable step effect, recorded for differential testing against the
/// translated program.
struct SourceEvent {
  enum class Kind { Havoc, MkRef, Deref, Assign, Alias, IfZ, Call, Ret, Drop, Fail, Done };
  Kind kind;
  int node_id = -1;
  std::string name;     // Drop: the dropped binding
  long long addr = -1;  // MkRef/Deref/Assign/Alias/Drop
  long long value = 0;  // Havoc/MkRef/Deref/Assign/IfZ/Drop/Done

  friend bool operator==(const SourceEvent&, const SourceEvent&) = default;
};

struct RunOptions {
  long long fuel = 1000000;
  bool trace = false;
  bool audit = false;
  bool record_events = false;
};

struct RunResult {
  RunStatus status = RunStatus::Stuck;
  long long value = 0;  // Done
  long long steps = 0;
  std::vector<std::string> trace;
  std::string stuck_reason;
  std::optional<AuditViolation> violation;
  std::vector<SourceEvent> events;
};

/// Runs a checked program from the empty configuration until a terminal
/// status or fuel exhaustion. Deterministic for a fixed havoc stream.
RunResult run_source(const TypedProgram& p, HavocStream& havoc,
                     const RunOptions& opts = {});

}  // namespace bfo
