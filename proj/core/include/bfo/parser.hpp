#pragma once

#include "bfo/ast.hpp"
#include "bfo/expected.hpp"

#include <string>
#include <string_view>

namespace bfo {

struct ParseError {
  std::string message;
  int line = 0;
  int col = 0;
};

/// Parses source text into a fully desugared program: asserts become
/// ifz/fail, compound operands are hoisted into fresh lets, binders are made
/// unique, and every node carries an id and a source location.
/// The grammar and the exact desugaring table live in docs/GRAMMAR.md.
Expected<Program, ParseError> parse(std::string_view text);

/// Structural equality modulo consistent renaming of binders.
bool alpha_equivalent(const Program& a, const Program& b);

}  // namespace bfo
