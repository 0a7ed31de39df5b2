#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bfo/interp.hpp"
#include "bfo/target.hpp"

namespace bfo {

/// Differential replay of a translated program against a recorded source
/// run.  The replay follows the exact control path the recording took, pins
/// every draw to the value the recording dictates, and checks each aligned
/// observation: reads, writes, branch scrutinees, call/return structure, the
/// final value, and every `assume`.
///
/// Prophecy draws have no recorded counterpart, so they are resolved in a
/// first pass that walks the same path treating them as unknowns and reads
/// each one's value off the `assume` that pins it — that assume sits exactly
/// where the mirrored binding's lifetime ends, so the resolved value is the
/// final value of the cell the pair stands for.  A second pass then replays
/// with every draw concrete and every check armed.

/// Tweaks for the checked replay.
struct OracleOptions {
  /// Replaces resolved prophecy values (keyed by draw order) before the
  /// checked pass; lets tests prove that a wrong prophecy is caught.
  std::map<int, long long> prophecy_overrides;
};

/// First point where the replay and the recording disagree.
struct OracleDivergence {
  long long step = 0;  ///< target steps taken when the divergence surfaced
  std::string message;
};

struct OracleResult {
  bool consistent = false;
  std::optional<OracleDivergence> divergence;
  /// Resolved prophecy values in draw order.  A slot is absent when nothing
  /// ever constrained that draw; such draws replay as 0.
  std::vector<std::optional<long long>> prophecies;
  bool target_failed = false;  ///< replay ended at `fail`
  bool completed = false;      ///< replay ended at the end of main
  long long final_value = 0;   ///< meaningful when `completed`
};

/// Replays `p` (the translation of the recorded program) against `events`,
/// a recording made with `RunOptions::record_events`.  The recording must
/// end in Done or Fail.
OracleResult oracle_run(const TargetProgram& p,
                        const std::vector<SourceEvent>& events,
                        const OracleOptions& opts = {});

}  // namespace bfo
