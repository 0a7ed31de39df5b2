#include "bfo/lexer.hpp"

#include <cctype>
#include <map>

namespace bfo {

namespace {

const std::map<std::string, Token::Type, std::less<>>& keywords() {
  static const std::map<std::string, Token::Type, std::less<>> kw = {
      {"fn", Token::Type::KwFn},         {"let", Token::Type::KwLet},
      {"in", Token::Type::KwIn},         {"mkref", Token::Type::KwMkref},
      {"alias", Token::Type::KwAlias},   {"assert", Token::Type::KwAssert},
      {"if", Token::Type::KwIf},         {"then", Token::Type::KwThen},
      {"else", Token::Type::KwElse},     {"ifz", Token::Type::KwIfz},
      {"newlft", Token::Type::KwNewlft}, {"endlft", Token::Type::KwEndlft},
      {"fail", Token::Type::KwFail},     {"borrow", Token::Type::KwBorrow},
      {"as", Token::Type::KwAs},         {"at", Token::Type::KwAt},
      {"ref", Token::Type::KwRef},       {"int", Token::Type::KwInt},
      {"lend", Token::Type::KwLend},
  };
  return kw;
}

}  // namespace

bool lex(std::string_view text, std::vector<Token>& out, LexError& err) {
  int line = 1, col = 1;
  std::size_t i = 0;
  auto push = [&](Token::Type t, std::string s, int l, int c) {
    Token tok;
    tok.type = t;
    tok.text = std::move(s);
    tok.line = l;
    tok.col = c;
    out.push_back(std::move(tok));
  };

  while (i < text.size()) {
    char ch = text[i];
    if (ch == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++col;
      ++i;
      continue;
    }
    if (ch == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }

    int tline = line, tcol = col;
    auto two = [&](char a, char b) {
      return ch == a && i + 1 < text.size() && text[i + 1] == b;
    };

    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      bool decimal = false;
      if (j + 1 < text.size() && text[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
        decimal = true;
        ++j;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      }
      std::string s(text.substr(i, j - i));
      if (decimal) {
        push(Token::Type::Number, s, tline, tcol);
      } else {
        push(Token::Type::Int, s, tline, tcol);
        out.back().int_val = std::stoll(s);
      }
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }

    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_' ||
              text[j] == '\'')) {
        ++j;
      }
      std::string s(text.substr(i, j - i));
      if (s == "_") {
        push(Token::Type::Underscore, s, tline, tcol);
      } else if (auto it = keywords().find(s); it != keywords().end()) {
        push(it->second, s, tline, tcol);
      } else {
        push(Token::Type::Ident, s, tline, tcol);
      }
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }

    if (two(':', '=')) {
      push(Token::Type::Walrus, ":=", tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    if (two('!', '=')) {
      push(Token::Type::Ne, "!=", tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    if (two('<', '=')) {
      push(Token::Type::Le, "<=", tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    if (two('>', '=')) {
      push(Token::Type::Ge, ">=", tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    if (two('&', '&')) {
      push(Token::Type::AndAnd, "&&", tline, tcol);
      i += 2;
      col += 2;
      continue;
    }
    if (two('-', '>')) {
      push(Token::Type::Arrow, "->", tline, tcol);
      i += 2;
      col += 2;
      continue;
    }

    Token::Type t;
    switch (ch) {
      case '(': t = Token::Type::LParen; break;
      case ')': t = Token::Type::RParen; break;
      case '{': t = Token::Type::LBrace; break;
      case '}': t = Token::Type::RBrace; break;
      case '<': t = Token::Type::Lt; break;
      case '>': t = Token::Type::Gt; break;
      case '=': t = Token::Type::EqEq; break;
      case ',': t = Token::Type::Comma; break;
      case ';': t = Token::Type::Semi; break;
      case ':': t = Token::Type::Colon; break;
      case '|': t = Token::Type::Pipe; break;
      case '+': t = Token::Type::Plus; break;
      case '-': t = Token::Type::Minus; break;
      case '*': t = Token::Type::Star; break;
      case '/': t = Token::Type::Slash; break;
      default:
        err = LexError{std::string("unexpected character '") + ch + "'", tline, tcol};
        return false;
    }
    push(t, std::string(1, ch), tline, tcol);
    ++i;
    ++col;
  }
  push(Token::Type::Eof, "", line, col);
  return true;
}

}  // namespace bfo
