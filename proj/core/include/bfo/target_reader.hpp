#pragma once

#include <stdexcept>
#include <string>

#include "bfo/target.hpp"

namespace bfo {

/// Error raised when textual target-program input cannot be parsed; carries
/// the 1-based source position, which is also formatted into what().
struct TargetReadError : std::runtime_error {
  int line = 0;
  int col = 0;
  TargetReadError(const std::string& msg, int line, int col);
};

/// Parses the ML-style rendering of a target program (the `ml` emitter
/// profile) back into a TargetProgram. Beyond the emitter's own output, the
/// reader accepts the common hand-written variants of the dialect: `nondet()`
/// with or without a space, `_` as a draw, the uncurried `assume(a = b);`
/// form, unparenthesized branch bodies, inline tuple arguments in calls, and
/// `let main a b = ...` whose parameters become leading draws. Draw roles are
/// not recoverable from this surface, so every draw reads back as a havoc,
/// and function reference-parameter lists read back empty; neither affects
/// evaluation or structural comparison. Term origins are set to the 1-based
/// input line, which branch witnesses report.
TargetProgram read_target_ml(const std::string& text);

/// Parses the s-expression rendering (the `sexp` emitter profile), which
/// round-trips exactly, including draw roles and prophecy links.
TargetProgram read_target_sexp(const std::string& text);

/// Reads either textual profile, picking the s-expression reader when the
/// text starts with its `(bfo-target N)` header and the ML reader otherwise.
TargetProgram read_target(const std::string& text);

}  // namespace bfo
