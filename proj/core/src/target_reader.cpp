#include "bfo/target_reader.hpp"

#include <cctype>
#include <functional>
#include <memory>
#include <sstream>
#include <utility>
#include <vector>

namespace bfo {

TargetReadError::TargetReadError(const std::string& msg, int line, int col)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) +
                         ": " + msg),
      line(line),
      col(col) {}

namespace {

// ---------------------------------------------------------------------------
// ML profile
// ---------------------------------------------------------------------------

enum class TK {
  Ident,
  Int,
  LParen,
  RParen,
  Comma,
  Semi,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Plus,
  Minus,
  Star,
  AndAnd,
  Underscore,
  KwLet,
  KwRec,
  KwIn,
  KwIf,
  KwThen,
  KwElse,
  KwFst,
  KwSnd,
  KwAssume,
  KwAssert,
  KwNondet,
  KwFalse,
  End,
};

struct Tok {
  TK type = TK::End;
  std::string text;
  long long n = 0;
  int line = 1;
  int col = 1;
};

bool starts_with(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Blanks the runtime preamble (the `nondet` and `assume` helper
/// definitions) so parsing starts at the first real definition. Lines are
/// replaced by empty ones to keep line numbers stable.
std::string strip_preamble(const std::string& text) {
  std::istringstream in(text);
  std::string out, line;
  bool in_assume_def = false;
  while (std::getline(in, line)) {
    std::string t = trimmed(line);
    bool skip = false;
    if (starts_with(t, "let nondet") &&
        t.find("Random.int") != std::string::npos) {
      skip = true;
    } else if (starts_with(t, "let rec assume ")) {
      skip = true;
      in_assume_def = t.find("if ") == std::string::npos;
    } else if (in_assume_def && starts_with(t, "if ")) {
      skip = true;
      in_assume_def = false;
    }
    out += skip ? "" : line;
    out += "\n";
  }
  return out;
}

TK keyword_of(const std::string& s) {
  if (s == "let") return TK::KwLet;
  if (s == "rec") return TK::KwRec;
  if (s == "in") return TK::KwIn;
  if (s == "if") return TK::KwIf;
  if (s == "then") return TK::KwThen;
  if (s == "else") return TK::KwElse;
  if (s == "fst") return TK::KwFst;
  if (s == "snd") return TK::KwSnd;
  if (s == "assume") return TK::KwAssume;
  if (s == "assert") return TK::KwAssert;
  if (s == "nondet") return TK::KwNondet;
  if (s == "false") return TK::KwFalse;
  return TK::Ident;
}

std::vector<Tok> lex_ml(const std::string& text) {
  std::vector<Tok> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto bump = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      bump(1);
      continue;
    }
    if (c == '(' && i + 1 < text.size() && text[i + 1] == '*') {
      int depth = 1;
      bump(2);
      while (i < text.size() && depth > 0) {
        if (text[i] == '(' && i + 1 < text.size() && text[i + 1] == '*') {
          ++depth;
          bump(2);
        } else if (text[i] == '*' && i + 1 < text.size() &&
                   text[i + 1] == ')') {
          --depth;
          bump(2);
        } else {
          bump(1);
        }
      }
      continue;
    }
    Tok t;
    t.line = line;
    t.col = col;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[j])))
        ++j;
      t.type = TK::Int;
      t.text = text.substr(i, j - i);
      t.n = std::stoll(t.text);
      bump(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) ||
              text[j] == '_' || text[j] == '\''))
        ++j;
      t.text = text.substr(i, j - i);
      t.type = t.text == "_" ? TK::Underscore : keyword_of(t.text);
      bump(j - i);
      out.push_back(std::move(t));
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < text.size() && text[i + 1] == b;
    };
    if (two('<', '>')) {
      t.type = TK::Ne;
      bump(2);
    } else if (two('<', '=')) {
      t.type = TK::Le;
      bump(2);
    } else if (two('>', '=')) {
      t.type = TK::Ge;
      bump(2);
    } else if (two('&', '&')) {
      t.type = TK::AndAnd;
      bump(2);
    } else {
      switch (c) {
        case '(': t.type = TK::LParen; break;
        case ')': t.type = TK::RParen; break;
        case ',': t.type = TK::Comma; break;
        case ';': t.type = TK::Semi; break;
        case '=': t.type = TK::Eq; break;
        case '<': t.type = TK::Lt; break;
        case '>': t.type = TK::Gt; break;
        case '+': t.type = TK::Plus; break;
        case '-': t.type = TK::Minus; break;
        case '*': t.type = TK::Star; break;
        default:
          throw TargetReadError(
              std::string("unexpected character '") + c + "'", line, col);
      }
      bump(1);
    }
    out.push_back(std::move(t));
  }
  Tok end;
  end.type = TK::End;
  end.line = line;
  end.col = col;
  out.push_back(std::move(end));
  return out;
}

class MlParser {
 public:
  explicit MlParser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

  TargetProgram parse() {
    TargetProgram p;
    bool saw_main = false;
    while (!at(TK::End)) {
      expect(TK::KwLet, "expected 'let' at top level");
      accept(TK::KwRec);
      Tok name = expect(TK::Ident, "expected a definition name");
      std::vector<std::string> params;
      while (at(TK::Ident)) params.push_back(take().text);
      if (at(TK::LParen) && peek(1).type == TK::RParen) {
        take();
        take();
      }
      expect(TK::Eq, "expected '=' in definition");
      TargetTermPtr body = term();
      if (name.text == "main") {
        if (saw_main) err("duplicate 'main' definition", name);
        for (auto it = params.rbegin(); it != params.rend(); ++it)
          body = TargetTerm::make(
              name.line,
              TLetAtom{*it, Atom::make_nondet(NondetRole::Havoc),
                       std::move(body)});
        p.main_t = std::move(body);
        saw_main = true;
      } else {
        TargetFnDef f;
        f.name = name.text;
        f.params = std::move(params);
        f.ret_count = 1;
        f.body = std::move(body);
        p.fns.push_back(std::move(f));
      }
    }
    if (!saw_main) err("missing 'main' definition", cur());
    return p;
  }

 private:
  std::vector<Tok> toks_;
  size_t pos_ = 0;
  int fresh_ = 0;

  // ---- token plumbing ----

  const Tok& cur() const { return toks_[pos_]; }
  const Tok& peek(size_t n) const {
    size_t i = pos_ + n;
    return toks_[i < toks_.size() ? i : toks_.size() - 1];
  }
  bool at(TK t) const { return cur().type == t; }
  Tok take() { return toks_[pos_++]; }
  bool accept(TK t) {
    if (!at(t)) return false;
    ++pos_;
    return true;
  }
  Tok expect(TK t, const char* msg) {
    if (!at(t)) err(msg, cur());
    return take();
  }
  [[noreturn]] void err(const std::string& msg, const Tok& t) const {
    std::string what = msg;
    if (!t.text.empty()) what += " (found '" + t.text + "')";
    throw TargetReadError(what, t.line, t.col);
  }

  std::string fresh(const char* base) {
    return "~" + std::string(base) + std::to_string(fresh_++);
  }

  // ---- expressions ----

  struct PExpr {
    bool leaf = true;
    Atom atom;                      // when leaf
    Arith::Op op = Arith::Op::Add;  // when node
    std::unique_ptr<PExpr> l, r;
    int line = 0;
  };
  using PE = std::unique_ptr<PExpr>;

  enum class RelOp { None, Eq, Ne, Lt, Le, Gt, Ge };
  struct PRel {
    RelOp op = RelOp::None;
    PE l, r;
    int line = 0;
  };

  using Hoist = std::function<TargetTermPtr(TargetTermPtr)>;

  static TargetTermPtr wrap(std::vector<Hoist>& hs, TargetTermPtr t) {
    for (auto it = hs.rbegin(); it != hs.rend(); ++it) t = (*it)(std::move(t));
    hs.clear();
    return t;
  }

  static PE leaf_of(Atom a, int line) {
    auto e = std::make_unique<PExpr>();
    e->leaf = true;
    e->atom = std::move(a);
    e->line = line;
    return e;
  }

  static PE node_of(Arith::Op op, PE l, PE r, int line) {
    auto e = std::make_unique<PExpr>();
    e->leaf = false;
    e->op = op;
    e->l = std::move(l);
    e->r = std::move(r);
    e->line = line;
    return e;
  }

  static int prec_of(TK t) {
    switch (t) {
      case TK::Star: return 3;
      case TK::Plus:
      case TK::Minus: return 2;
      default: return 0;
    }
  }

  PE expr(int min_prec) {
    PE l = unary();
    return expr_rest(std::move(l), min_prec);
  }

  PE expr_rest(PE l, int min_prec) {
    for (;;) {
      int p = prec_of(cur().type);
      if (p == 0 || p < min_prec) break;
      Tok op = take();
      PE r = expr(p + 1);
      Arith::Op o = op.type == TK::Star  ? Arith::Op::Mul
                    : op.type == TK::Plus ? Arith::Op::Add
                                          : Arith::Op::Sub;
      l = node_of(o, std::move(l), std::move(r), op.line);
    }
    return l;
  }

  PE unary() {
    Tok t = cur();
    switch (t.type) {
      case TK::Int:
        take();
        return leaf_of(Atom::make_const(t.n), t.line);
      case TK::Minus: {
        take();
        Tok i = expect(TK::Int, "expected an integer after '-'");
        return leaf_of(Atom::make_const(-i.n), t.line);
      }
      case TK::Ident:
        take();
        return leaf_of(Atom::make_var(t.text), t.line);
      case TK::Underscore:
        take();
        return leaf_of(Atom::make_nondet(NondetRole::Havoc), t.line);
      case TK::KwNondet:
        take();
        if (accept(TK::LParen))
          expect(TK::RParen, "expected ')' after 'nondet ('");
        return leaf_of(Atom::make_nondet(NondetRole::Havoc), t.line);
      case TK::KwFst:
      case TK::KwSnd: {
        take();
        std::string v;
        if (accept(TK::LParen)) {
          v = expect(TK::Ident, "expected a name after fst/snd").text;
          expect(TK::RParen, "expected ')' after fst/snd argument");
        } else {
          v = expect(TK::Ident, "expected a name after fst/snd").text;
        }
        return leaf_of(
            t.type == TK::KwFst ? Atom::make_fst(v) : Atom::make_snd(v),
            t.line);
      }
      case TK::LParen: {
        take();
        if (accept(TK::RParen)) return leaf_of(Atom::make_const(0), t.line);
        PRel r = cond();
        expect(TK::RParen, "expected ')'");
        return rel_value(std::move(r));
      }
      default:
        err("expected an expression", t);
    }
  }

  /// Parses an expression with at most one relational operator at the top.
  PRel cond() {
    PRel r;
    r.l = expr(2);
    r.line = r.l->line;
    switch (cur().type) {
      case TK::Eq: r.op = RelOp::Eq; break;
      case TK::Ne: r.op = RelOp::Ne; break;
      case TK::Lt: r.op = RelOp::Lt; break;
      case TK::Le: r.op = RelOp::Le; break;
      case TK::Gt: r.op = RelOp::Gt; break;
      case TK::Ge: r.op = RelOp::Ge; break;
      default: return r;
    }
    r.line = take().line;
    r.r = expr(2);
    return r;
  }

  /// A relation in value position becomes a 0/1-valued comparison node;
  /// > and >= swap operands of < and <=.
  PE rel_value(PRel r) {
    switch (r.op) {
      case RelOp::None: return std::move(r.l);
      case RelOp::Eq:
        return node_of(Arith::Op::Eq, std::move(r.l), std::move(r.r), r.line);
      case RelOp::Lt:
        return node_of(Arith::Op::Lt, std::move(r.l), std::move(r.r), r.line);
      case RelOp::Le:
        return node_of(Arith::Op::Le, std::move(r.l), std::move(r.r), r.line);
      case RelOp::Gt:
        return node_of(Arith::Op::Lt, std::move(r.r), std::move(r.l), r.line);
      case RelOp::Ge:
        return node_of(Arith::Op::Le, std::move(r.r), std::move(r.l), r.line);
      case RelOp::Ne:
        throw TargetReadError("'<>' is only valid inside assert or if",
                              r.line, 1);
    }
    return nullptr;
  }

  /// Reduces a relational test to (zero-true expression, inverted?): `a = b`
  /// tests `a - b`, `<>` is the same test with branches swapped, and > / >=
  /// swap operands of < and <=.
  std::pair<PE, bool> zero_test(PRel r) {
    switch (r.op) {
      case RelOp::None: return {std::move(r.l), false};
      case RelOp::Eq:
        return {node_of(Arith::Op::Sub, std::move(r.l), std::move(r.r),
                        r.line),
                false};
      case RelOp::Ne:
        return {node_of(Arith::Op::Sub, std::move(r.l), std::move(r.r),
                        r.line),
                true};
      case RelOp::Lt:
        return {node_of(Arith::Op::Lt, std::move(r.l), std::move(r.r),
                        r.line),
                false};
      case RelOp::Le:
        return {node_of(Arith::Op::Le, std::move(r.l), std::move(r.r),
                        r.line),
                false};
      case RelOp::Gt:
        return {node_of(Arith::Op::Lt, std::move(r.r), std::move(r.l),
                        r.line),
                false};
      case RelOp::Ge:
        return {node_of(Arith::Op::Le, std::move(r.r), std::move(r.l),
                        r.line),
                false};
    }
    return {nullptr, false};
  }

  // ---- lowering to registers ----

  /// Returns a register name holding the expression's value, hoisting a
  /// binding when the expression is not already a bare variable.
  std::string name_of(const PExpr& e, std::vector<Hoist>& hs) {
    if (e.leaf && e.atom.kind == Atom::Kind::Var) return e.atom.var;
    std::string g = fresh("g");
    int ln = e.line;
    if (e.leaf) {
      Atom a = e.atom;
      hs.push_back([g, a, ln](TargetTermPtr t) {
        return TargetTerm::make(ln, TLetAtom{g, a, std::move(t)});
      });
    } else {
      auto v = std::make_shared<Arith>(lower(e, hs));
      hs.push_back([g, v, ln](TargetTermPtr t) {
        return TargetTerm::make(ln, TLetArith{g, std::move(*v), std::move(t)});
      });
    }
    return g;
  }

  Atom atom_of(const PExpr& e, std::vector<Hoist>& hs) {
    if (e.leaf) return e.atom;
    return Atom::make_var(name_of(e, hs));
  }

  /// Lowers to an arithmetic tree over variables and constants; projection
  /// and draw operands are hoisted into their own bindings first.
  Arith lower(const PExpr& e, std::vector<Hoist>& hs) {
    if (e.leaf) {
      switch (e.atom.kind) {
        case Atom::Kind::Const: return Arith::constant(e.atom.n);
        case Atom::Kind::Var: return Arith::variable(e.atom.var);
        default: return Arith::variable(name_of(e, hs));
      }
    }
    Arith a = lower(*e.l, hs);
    Arith b = lower(*e.r, hs);
    return Arith::binary(e.op, std::move(a), std::move(b));
  }

  // ---- terms ----

  static bool arg_start(TK t) {
    return t == TK::Ident || t == TK::Int || t == TK::LParen ||
           t == TK::Underscore || t == TK::KwNondet;
  }

  TargetTermPtr term() {
    switch (cur().type) {
      case TK::KwLet: return let_term();
      case TK::KwAssume: return assume_term();
      case TK::KwAssert: return assert_term();
      case TK::KwIf: return if_term();
      case TK::LParen: {
        TK n = peek(1).type;
        if (n == TK::KwLet || n == TK::KwIf || n == TK::KwAssume ||
            n == TK::KwAssert) {
          take();
          TargetTermPtr inner = term();
          expect(TK::RParen, "expected ')' closing the grouped body");
          return inner;
        }
        return tail_term();
      }
      default: return tail_term();
    }
  }

  struct Pat {
    std::vector<std::string> names;
    int ret_count = 1;
    bool simple = false;
  };

  Pat pattern() {
    Pat p;
    if (at(TK::Ident)) {
      p.names.push_back(take().text);
      p.simple = true;
      return p;
    }
    if (at(TK::Underscore)) {
      take();
      p.names.push_back(fresh("ign"));
      p.simple = true;
      return p;
    }
    expect(TK::LParen, "expected a binder");
    if (accept(TK::RParen)) {
      p.names.push_back(fresh("ign"));
      return p;
    }
    bool first = true;
    for (;;) {
      if (at(TK::LParen)) {
        take();
        if (accept(TK::RParen)) {
          p.names.push_back(fresh("ign"));
        } else {
          int inner = 0;
          for (;;) {
            if (at(TK::Ident)) {
              p.names.push_back(take().text);
            } else if (at(TK::Underscore)) {
              take();
              p.names.push_back(fresh("ign"));
            } else {
              err("expected a name in a binder tuple", cur());
            }
            ++inner;
            if (!accept(TK::Comma)) break;
          }
          expect(TK::RParen, "expected ')' closing the binder tuple");
          if (first) p.ret_count = inner;
        }
      } else if (at(TK::Ident)) {
        p.names.push_back(take().text);
      } else if (at(TK::Underscore)) {
        take();
        p.names.push_back(fresh("ign"));
      } else {
        err("expected a binder", cur());
      }
      first = false;
      if (!accept(TK::Comma)) break;
    }
    expect(TK::RParen, "expected ')' closing the binder");
    return p;
  }

  std::vector<std::string> call_args(std::vector<Hoist>& hs) {
    std::vector<std::string> args;
    bool lone_unit = false;
    while (arg_start(cur().type)) {
      if (at(TK::LParen) && peek(1).type == TK::RParen) {
        Tok lp = take();
        take();
        // `f ()` passes no arguments; a unit among others is a literal 0.
        if (args.empty() && !arg_start(cur().type)) {
          lone_unit = true;
          break;
        }
        args.push_back(name_of(*leaf_of(Atom::make_const(0), lp.line), hs));
        continue;
      }
      if (at(TK::Ident)) {
        args.push_back(take().text);
        continue;
      }
      if (at(TK::Int) || at(TK::Underscore) || at(TK::KwNondet)) {
        PE v = unary();
        args.push_back(name_of(*v, hs));
        continue;
      }
      // parenthesized argument: tuple or expression
      Tok lp = take();
      PRel first = cond();
      if (accept(TK::Comma)) {
        PE fe = rel_value(std::move(first));
        PRel second = cond();
        expect(TK::RParen, "expected ')' closing the tuple argument");
        PE se = rel_value(std::move(second));
        Atom fa = atom_of(*fe, hs);
        Atom sa = atom_of(*se, hs);
        std::string g = fresh("g");
        int ln = lp.line;
        hs.push_back([g, fa, sa, ln](TargetTermPtr t) {
          return TargetTerm::make(ln, TLetPair{g, fa, sa, std::move(t)});
        });
        args.push_back(g);
        continue;
      }
      expect(TK::RParen, "expected ')'");
      PE v = rel_value(std::move(first));
      args.push_back(name_of(*v, hs));
    }
    (void)lone_unit;
    return args;
  }

  TargetTermPtr let_term() {
    Tok kw = take();
    Pat pat = pattern();
    expect(TK::Eq, "expected '=' in let");
    std::vector<Hoist> hs;
    // call right-hand side
    if (at(TK::Ident) && arg_start(peek(1).type)) {
      std::string fn = take().text;
      std::vector<std::string> args = call_args(hs);
      expect(TK::KwIn, "expected 'in' after the call");
      TargetTermPtr body = term();
      return wrap(hs,
                  TargetTerm::make(kw.line,
                                   TLetCall{pat.names, pat.ret_count, fn,
                                            std::move(args), std::move(body)}));
    }
    // pair, parenthesized expression, or plain expression
    if (at(TK::LParen) && peek(1).type != TK::RParen) {
      take();
      PRel first = cond();
      if (accept(TK::Comma)) {
        if (!pat.simple) err("a pair binds a single name", kw);
        PE fe = rel_value(std::move(first));
        PRel second = cond();
        expect(TK::RParen, "expected ')' closing the pair");
        PE se = rel_value(std::move(second));
        expect(TK::KwIn, "expected 'in'");
        Atom fa = atom_of(*fe, hs);
        Atom sa = atom_of(*se, hs);
        TargetTermPtr body = term();
        return wrap(hs, TargetTerm::make(
                            kw.line,
                            TLetPair{pat.names[0], fa, sa, std::move(body)}));
      }
      expect(TK::RParen, "expected ')'");
      PE v = expr_rest(rel_value(std::move(first)), 2);
      return value_let(kw, pat, std::move(v), hs);
    }
    PRel r = cond();
    PE v = rel_value(std::move(r));
    return value_let(kw, pat, std::move(v), hs);
  }

  TargetTermPtr value_let(const Tok& kw, const Pat& pat, PE v,
                          std::vector<Hoist>& hs) {
    if (!pat.simple) err("this binder shape needs a call right-hand side", kw);
    expect(TK::KwIn, "expected 'in'");
    const std::string& x = pat.names[0];
    TargetTermPtr t;
    if (v->leaf && v->atom.kind == Atom::Kind::Const) {
      TargetTermPtr body = term();
      t = TargetTerm::make(
          kw.line, TLetArith{x, Arith::constant(v->atom.n), std::move(body)});
    } else if (v->leaf) {
      TargetTermPtr body = term();
      t = TargetTerm::make(kw.line, TLetAtom{x, v->atom, std::move(body)});
    } else {
      Arith value = lower(*v, hs);
      TargetTermPtr body = term();
      t = TargetTerm::make(kw.line,
                           TLetArith{x, std::move(value), std::move(body)});
    }
    return wrap(hs, std::move(t));
  }

  TargetTermPtr assume_term() {
    Tok kw = take();
    std::vector<Hoist> hs;
    expect(TK::LParen, "expected '(' after assume");
    PRel first = cond();
    expect(TK::RParen, "expected ')'");
    Atom a, b;
    if (at(TK::LParen)) {
      take();
      PRel second = cond();
      expect(TK::RParen, "expected ')'");
      if (first.op != RelOp::None || second.op != RelOp::None)
        err("assume arguments must be plain values", kw);
      a = atom_of(*first.l, hs);
      b = atom_of(*second.l, hs);
    } else {
      if (first.op != RelOp::Eq)
        err("assume needs the form (a) (b) or (a = b)", kw);
      a = atom_of(*first.l, hs);
      b = atom_of(*first.r, hs);
    }
    expect(TK::Semi, "expected ';' after assume");
    TargetTermPtr cont = term();
    return wrap(hs,
                TargetTerm::make(kw.line, TAssume{a, b, std::move(cont)}));
  }

  TargetTermPtr default_tail(int line) {
    std::string g = fresh("g");
    return TargetTerm::make(
        line, TLetArith{g, Arith::constant(0),
                        TargetTerm::make(line, TVar{{g}, 1})});
  }

  TargetTermPtr assert_term() {
    Tok kw = take();
    if (at(TK::KwFalse)) {
      take();
      accept(TK::Semi);
      return TargetTerm::make(kw.line, TFail{});
    }
    expect(TK::LParen, "expected '(' after assert");
    if (at(TK::KwFalse)) {
      take();
      expect(TK::RParen, "expected ')'");
      accept(TK::Semi);
      return TargetTerm::make(kw.line, TFail{});
    }
    std::vector<PRel> conjs;
    conjs.push_back(cond());
    while (accept(TK::AndAnd)) conjs.push_back(cond());
    expect(TK::RParen, "expected ')' closing assert");
    TargetTermPtr cont =
        accept(TK::Semi) ? term() : default_tail(kw.line);
    for (auto it = conjs.rbegin(); it != conjs.rend(); ++it) {
      std::vector<Hoist> hs;
      auto [test, inverted] = zero_test(std::move(*it));
      std::string c = fresh("g");
      Arith value = lower(*test, hs);
      TargetTermPtr fail_t = TargetTerm::make(kw.line, TFail{});
      TargetTermPtr then_t, else_t;
      if (inverted) {
        then_t = std::move(fail_t);
        else_t = std::move(cont);
      } else {
        then_t = std::move(cont);
        else_t = std::move(fail_t);
      }
      TargetTermPtr body = TargetTerm::make(
          kw.line, TIfZ{c, std::move(then_t), std::move(else_t)});
      cont = wrap(hs, TargetTerm::make(
                          kw.line,
                          TLetArith{c, std::move(value), std::move(body)}));
    }
    return cont;
  }

  TargetTermPtr branch_body() {
    if (at(TK::LParen) && peek(1).type == TK::RParen) {
      Tok lp = take();
      take();
      return default_tail(lp.line);
    }
    return term();
  }

  TargetTermPtr if_term() {
    Tok kw = take();
    std::vector<Hoist> hs;
    PRel r = cond();
    expect(TK::KwThen, "expected 'then'");
    TargetTermPtr then_t = branch_body();
    expect(TK::KwElse, "expected 'else'");
    TargetTermPtr else_t = branch_body();
    // `x = 0` over a bare name is a direct zero test on that register.
    if (r.op == RelOp::Eq && r.r && r.r->leaf &&
        r.r->atom.kind == Atom::Kind::Const && r.r->atom.n == 0 &&
        r.l->leaf && r.l->atom.kind == Atom::Kind::Var) {
      return TargetTerm::make(
          kw.line, TIfZ{r.l->atom.var, std::move(then_t), std::move(else_t)});
    }
    auto [test, inverted] = zero_test(std::move(r));
    if (inverted) std::swap(then_t, else_t);
    std::string c = fresh("g");
    Arith value = lower(*test, hs);
    TargetTermPtr body = TargetTerm::make(
        kw.line, TIfZ{c, std::move(then_t), std::move(else_t)});
    return wrap(hs, TargetTerm::make(
                        kw.line,
                        TLetArith{c, std::move(value), std::move(body)}));
  }

  TargetTermPtr tail_term() {
    Tok t = cur();
    std::vector<Hoist> hs;
    if (at(TK::Ident) && arg_start(peek(1).type)) {
      std::string fn = take().text;
      std::vector<std::string> args = call_args(hs);
      std::string g = fresh("g");
      TargetTermPtr body = TargetTerm::make(t.line, TVar{{g}, 1});
      return wrap(hs, TargetTerm::make(
                          t.line, TLetCall{{g}, 1, fn, std::move(args),
                                           std::move(body)}));
    }
    if (at(TK::LParen)) {
      take();
      if (accept(TK::RParen)) return default_tail(t.line);
      std::vector<std::string> names;
      int ret_count = 1;
      bool first = true;
      for (;;) {
        if (at(TK::LParen) && peek(1).type == TK::RParen) {
          Tok lp = take();
          take();
          names.push_back(
              name_of(*leaf_of(Atom::make_const(0), lp.line), hs));
        } else if (at(TK::LParen) && first) {
          take();
          int inner = 0;
          for (;;) {
            PRel e = cond();
            PE v = rel_value(std::move(e));
            names.push_back(name_of(*v, hs));
            ++inner;
            if (!accept(TK::Comma)) break;
          }
          expect(TK::RParen, "expected ')' closing the inner tuple");
          ret_count = inner;
        } else {
          PRel e = cond();
          PE v = rel_value(std::move(e));
          names.push_back(name_of(*v, hs));
        }
        first = false;
        if (!accept(TK::Comma)) break;
      }
      expect(TK::RParen, "expected ')' closing the tuple");
      return wrap(hs,
                  TargetTerm::make(t.line, TVar{std::move(names), ret_count}));
    }
    PRel e = cond();
    PE v = rel_value(std::move(e));
    if (v->leaf && v->atom.kind == Atom::Kind::Var)
      return TargetTerm::make(t.line, TVar{{v->atom.var}, 1});
    std::string g = name_of(*v, hs);
    return wrap(hs, TargetTerm::make(t.line, TVar{{g}, 1}));
  }
};

// ---------------------------------------------------------------------------
// S-expression profile
// ---------------------------------------------------------------------------

struct SxTok {
  enum class K { LParen, RParen, Atom, End } k = K::End;
  std::string text;
  int line = 1;
  int col = 1;
};

std::vector<SxTok> lex_sx(const std::string& text) {
  std::vector<SxTok> out;
  int line = 1, col = 1;
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++col;
      ++i;
      continue;
    }
    SxTok t;
    t.line = line;
    t.col = col;
    if (c == '(' || c == ')') {
      t.k = c == '(' ? SxTok::K::LParen : SxTok::K::RParen;
      ++col;
      ++i;
    } else {
      size_t j = i;
      while (j < text.size() && text[j] != '(' && text[j] != ')' &&
             text[j] != ' ' && text[j] != '\t' && text[j] != '\r' &&
             text[j] != '\n')
        ++j;
      t.k = SxTok::K::Atom;
      t.text = text.substr(i, j - i);
      col += static_cast<int>(j - i);
      i = j;
    }
    out.push_back(std::move(t));
  }
  SxTok end;
  end.k = SxTok::K::End;
  end.line = line;
  end.col = col;
  out.push_back(std::move(end));
  return out;
}

class SxParser {
 public:
  explicit SxParser(std::vector<SxTok> toks) : toks_(std::move(toks)) {}

  TargetProgram parse() {
    open();
    if (atom() != "bfo-target")
      throw TargetReadError("expected a (bfo-target N) header", 1, 1);
    atom();  // version
    close();
    TargetProgram p;
    bool saw_main = false;
    while (at_open()) {
      open();
      std::string head = atom();
      if (head == "fn") {
        TargetFnDef f;
        f.name = atom();
        open();
        require(atom() == "params", "expected (params ...)");
        while (at_atom()) f.params.push_back(atom());
        close();
        open();
        require(atom() == "refs", "expected (refs ...)");
        while (at_atom()) f.ref_params.push_back(atom());
        close();
        open();
        require(atom() == "rets", "expected (rets N)");
        f.ret_count = to_int(atom());
        close();
        f.body = term();
        close();
        p.fns.push_back(std::move(f));
      } else if (head == "main") {
        p.main_t = term();
        close();
        saw_main = true;
      } else {
        fail("unknown top-level form '" + head + "'");
      }
    }
    if (!saw_main) fail("missing (main ...) form");
    return p;
  }

 private:
  std::vector<SxTok> toks_;
  size_t pos_ = 0;

  const SxTok& cur() const { return toks_[pos_]; }
  bool at_open() const { return cur().k == SxTok::K::LParen; }
  bool at_atom() const { return cur().k == SxTok::K::Atom; }
  void open() { require(at_open(), "expected '('"), ++pos_; }
  void close() {
    require(cur().k == SxTok::K::RParen, "expected ')'");
    ++pos_;
  }
  std::string atom() {
    require(at_atom(), "expected an atom");
    return toks_[pos_++].text;
  }
  void require(bool ok, const char* msg) {
    if (!ok) fail(msg);
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw TargetReadError(msg, cur().line, cur().col);
  }

  long long to_ll(const std::string& s) {
    try {
      size_t used = 0;
      long long v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail("expected an integer, found '" + s + "'");
  }
  int to_int(const std::string& s) { return static_cast<int>(to_ll(s)); }

  static bool numeric(const std::string& s) {
    if (s.empty()) return false;
    size_t i = s[0] == '-' ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  }

  Atom sx_atom() {
    if (at_atom()) {
      std::string s = atom();
      if (numeric(s)) return Atom::make_const(to_ll(s));
      return Atom::make_var(s);
    }
    open();
    std::string head = atom();
    Atom a;
    if (head == "fst") {
      a = Atom::make_fst(atom());
    } else if (head == "snd") {
      a = Atom::make_snd(atom());
    } else if (head == "nondet") {
      std::string role = atom();
      NondetRole r = role == "havoc"      ? NondetRole::Havoc
                     : role == "read"     ? NondetRole::UntrustedRead
                     : role == "prophecy" ? NondetRole::Prophecy
                                          : NondetRole::Pad;
      std::string of;
      if (at_atom()) of = atom();
      a = Atom::make_nondet(r, of);
    } else {
      fail("unknown value form '" + head + "'");
    }
    close();
    return a;
  }

  Arith sx_arith() {
    if (at_atom()) {
      std::string s = atom();
      if (numeric(s)) return Arith::constant(to_ll(s));
      return Arith::variable(s);
    }
    open();
    std::string op = atom();
    Arith::Op o;
    if (op == "+") {
      o = Arith::Op::Add;
    } else if (op == "-") {
      o = Arith::Op::Sub;
    } else if (op == "*") {
      o = Arith::Op::Mul;
    } else if (op == "=") {
      o = Arith::Op::Eq;
    } else if (op == "<") {
      o = Arith::Op::Lt;
    } else if (op == "<=") {
      o = Arith::Op::Le;
    } else {
      fail("unknown arithmetic operator '" + op + "'");
    }
    Arith l = sx_arith();
    Arith r = sx_arith();
    close();
    return Arith::binary(o, std::move(l), std::move(r));
  }

  TargetTermPtr term() {
    int line = cur().line;
    open();
    std::string head = atom();
    if (head == "ret") {
      int rc = to_int(atom());
      std::vector<std::string> names;
      while (at_atom()) names.push_back(atom());
      close();
      return TargetTerm::make(line, TVar{std::move(names), rc});
    }
    if (head == "let") {
      std::string x = atom();
      // Projections and draws are value atoms; operator lists are arithmetic.
      if (at_atom()) {
        std::string s = atom();
        TargetTermPtr body = term();
        close();
        if (numeric(s))
          return TargetTerm::make(
              line, TLetArith{x, Arith::constant(to_ll(s)), std::move(body)});
        return TargetTerm::make(
            line, TLetAtom{x, Atom::make_var(s), std::move(body)});
      }
      size_t save = pos_;
      open();
      std::string form = atom();
      pos_ = save;
      if (form == "fst" || form == "snd" || form == "nondet") {
        Atom a = sx_atom();
        TargetTermPtr body = term();
        close();
        return TargetTerm::make(line, TLetAtom{x, a, std::move(body)});
      }
      Arith v = sx_arith();
      TargetTermPtr body = term();
      close();
      return TargetTerm::make(line,
                              TLetArith{x, std::move(v), std::move(body)});
    }
    if (head == "pair") {
      std::string x = atom();
      Atom f = sx_atom();
      Atom s = sx_atom();
      TargetTermPtr body = term();
      close();
      return TargetTerm::make(line, TLetPair{x, f, s, std::move(body)});
    }
    if (head == "call") {
      open();
      std::vector<std::string> binders;
      while (at_atom()) binders.push_back(atom());
      close();
      int rc = to_int(atom());
      std::string fn = atom();
      open();
      std::vector<std::string> args;
      while (at_atom()) args.push_back(atom());
      close();
      TargetTermPtr body = term();
      close();
      return TargetTerm::make(line, TLetCall{std::move(binders), rc, fn,
                                             std::move(args),
                                             std::move(body)});
    }
    if (head == "assume") {
      Atom a = sx_atom();
      Atom b = sx_atom();
      TargetTermPtr cont = term();
      close();
      return TargetTerm::make(line, TAssume{a, b, std::move(cont)});
    }
    if (head == "ifz") {
      std::string x = atom();
      TargetTermPtr t = term();
      TargetTermPtr e = term();
      close();
      return TargetTerm::make(line,
                              TIfZ{x, std::move(t), std::move(e)});
    }
    if (head == "fail") {
      close();
      return TargetTerm::make(line, TFail{});
    }
    fail("unknown term form '" + head + "'");
  }
};

}  // namespace

TargetProgram read_target_ml(const std::string& text) {
  return MlParser(lex_ml(strip_preamble(text))).parse();
}

TargetProgram read_target_sexp(const std::string& text) {
  return SxParser(lex_sx(text)).parse();
}

TargetProgram read_target(const std::string& text) {
  size_t i = text.find_first_not_of(" \t\r\n");
  if (i != std::string::npos && text.compare(i, 11, "(bfo-target") == 0)
    return read_target_sexp(text);
  return read_target_ml(text);
}

}  // namespace bfo
