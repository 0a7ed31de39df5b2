#pragma once

#include "bfo/ast.hpp"

#include <string>

namespace bfo {

/// Renders an expression in the surface syntax accepted by parse().  The
/// output is fully desugared — every intermediate value appears as an explicit
/// binding — and reparsing it yields an alpha-equivalent program.
std::string pretty_expr(const SourceExpr& e, int indent = 0);

/// Renders a full program: function definitions followed by the main
/// expression.
std::string pretty_program(const Program& p);

/// Renders a function signature as it appears in a definition header.
std::string pretty_signature(const FunDef& def);

/// Renders one arithmetic expression on a single line.
std::string pretty_arith(const Arith& a);

}  // namespace bfo
