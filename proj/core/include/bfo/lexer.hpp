#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bfo {

struct Token {
  enum class Type {
    Ident,
    Int,      // integer literal
    Number,   // decimal literal such as 0.5 (kept as text)
    KwFn, KwLet, KwIn, KwMkref, KwAlias, KwAssert, KwIf, KwThen, KwElse,
    KwIfz, KwNewlft, KwEndlft, KwFail, KwBorrow, KwAs, KwAt, KwRef, KwInt,
    KwLend,
    LParen, RParen, LBrace, RBrace,
    Lt, Gt, Le, Ge, EqEq, Ne,   // = lexes as EqEq (single = is equality here)
    Comma, Semi, Colon, Pipe, Underscore,
    Walrus,  // :=
    Plus, Minus, Star, Slash, AndAnd, Arrow,
    Eof,
  };

  Type type;
  std::string text;
  long long int_val = 0;
  int line = 1;
  int col = 1;
};

struct LexError {
  std::string message;
  int line;
  int col;
};

/// Tokenizes source text. `//` comments run to end of line.
/// Throws nothing; a bad character comes back via the error out-param.
bool lex(std::string_view text, std::vector<Token>& out, LexError& err);

}  // namespace bfo
