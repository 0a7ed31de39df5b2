#pragma once

#include <string>

#include "bfo/target.hpp"

namespace bfo {

enum class EmitProfile {
  Ml,    ///< functional surface syntax with the nondet/assume preamble
  Sexp,  ///< versioned S-expression IR for external tooling
};

/// Deterministic text rendering of a target program. The ML profile prints
/// pairs as tuples, draws as `nondet ()` calls, and `assume` via the
/// recursive equality-blocking helper declared in the preamble; recognized
/// test-then-fail branches render as `assert`. The S-expression profile is a
/// lossless IR dump (draw roles included).
std::string emit_target(const TargetProgram& p, EmitProfile profile);

}  // namespace bfo
