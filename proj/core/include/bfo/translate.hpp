#pragma once

#include "bfo/checker.hpp"
#include "bfo/target.hpp"

namespace bfo {

struct TranslateOptions {
  /// Collapse the fresh placeholder pair introduced for a reference `let`
  /// into the conversion binding that immediately overwrites it. Disabling
  /// keeps the literal rule output.
  bool peephole = true;
};

/// Translates a checked program into the pointer-free target language using
/// the per-node evidence recorded by the checker. Same variable names are
/// kept; every synthesized node carries the source node id it came from.
TargetProgram translate(const TypedProgram& tp, const TranslateOptions& opts = {});

}  // namespace bfo
