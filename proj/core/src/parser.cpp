#include "bfo/parser.hpp"

#include "bfo/lexer.hpp"
#include "bfo/rational.hpp"

#include <map>
#include <sstream>

namespace bfo {

namespace {

using TT = Token::Type;

struct ParseFail {
  ParseError err;
};

/// A value computed before the statement that uses it: a deref, a havoc, a
/// mkref, or a compound arithmetic, bound to a fresh temporary.
struct Hoist {
  enum class Kind { Deref, Havoc, MkRef, Arith };
  Kind kind;
  std::string tmp;
  std::string y;                       // Deref source / MkRef initializer
  std::optional<std::string> at_lft;   // MkRef
  Arith value;                         // Arith
  SourceLoc loc;
};

struct Rel {
  enum class Op { Eq, Ne, Lt, Le, Gt, Ge, None };  // None: bare arithmetic
  Arith lhs;
  Op op = Op::None;
  Arith rhs;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program parse_program() {
    Program p;
    while (at(TT::KwFn)) {
      p.fns.push_back(parse_fndef());
    }
    p.main_e = parse_expr();
    expect(TT::Eof, "expected end of input after main expression");
    return p;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int tmp_counter_ = 0;

  [[noreturn]] void fail(const std::string& msg) {
    const Token& t = toks_[pos_ < toks_.size() ? pos_ : toks_.size() - 1];
    throw ParseFail{ParseError{msg, t.line, t.col}};
  }

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t k = 1) const {
    std::size_t i = pos_ + k;
    return toks_[i < toks_.size() ? i : toks_.size() - 1];
  }
  bool at(TT t) const { return cur().type == t; }
  bool accept(TT t) {
    if (at(t)) {
      ++pos_;
      return true;
    }
    return false;
  }
  Token expect(TT t, const std::string& msg) {
    if (!at(t)) fail(msg);
    return toks_[pos_++];
  }
  SourceLoc loc() const { return SourceLoc{cur().line, cur().col}; }

  std::string fresh_tmp() { return "_t" + std::to_string(tmp_counter_++); }

  // ---- types and rationals ----

  Rational parse_rational() {
    bool neg = accept(TT::Minus);
    Rational r;
    if (at(TT::Int)) {
      long long n = cur().int_val;
      ++pos_;
      if (accept(TT::Slash)) {
        Token den = expect(TT::Int, "expected denominator");
        if (den.int_val == 0) fail("zero denominator");
        r = Rational(n, den.int_val);
      } else {
        r = Rational(n);
      }
    } else if (at(TT::Number)) {
      auto parsed = Rational::parse(cur().text);
      if (!parsed) fail("bad rational literal");
      r = *parsed;
      ++pos_;
    } else {
      fail("expected rational literal");
    }
    return neg ? Rational(0) - r : r;
  }

  OwnType parse_type() {
    if (accept(TT::KwInt)) return OwnType::make_int();
    expect(TT::KwRef, "expected type");
    expect(TT::Lt, "expected '<' after ref");
    std::string lft = expect(TT::Ident, "expected lifetime").text;
    expect(TT::Comma, "expected ',' in ref type");
    Rational own = parse_rational();
    std::optional<Borrow> borrow;
    if (accept(TT::KwLend)) {
      std::string target = expect(TT::Ident, "expected lend target lifetime").text;
      expect(TT::Colon, "expected ':' after lend lifetime");
      Rational amount = parse_rational();
      borrow = Borrow{target, amount};
    }
    expect(TT::Gt, "expected '>' closing ref type");
    return OwnType::make_ref(lft, own, borrow);
  }

  // ---- arithmetic with hoisting ----

  Arith parse_atom(std::vector<Hoist>& hoists) {
    SourceLoc l = loc();
    if (at(TT::Int)) {
      long long n = cur().int_val;
      ++pos_;
      return Arith::constant(n);
    }
    if (at(TT::Minus) && peek().type == TT::Int) {
      ++pos_;
      long long n = cur().int_val;
      ++pos_;
      return Arith::constant(-n);
    }
    if (at(TT::Ident)) {
      std::string x = cur().text;
      ++pos_;
      return Arith::variable(x);
    }
    if (accept(TT::Underscore)) {
      std::string t = fresh_tmp();
      hoists.push_back(Hoist{Hoist::Kind::Havoc, t, "", std::nullopt, {}, l});
      return Arith::variable(t);
    }
    if (accept(TT::Star)) {
      std::string y = expect(TT::Ident, "expected variable after '*'").text;
      std::string t = fresh_tmp();
      hoists.push_back(Hoist{Hoist::Kind::Deref, t, y, std::nullopt, {}, l});
      return Arith::variable(t);
    }
    if (accept(TT::LParen)) {
      if (accept(TT::RParen)) return Arith::constant(0);  // unit
      Arith a = parse_arith(hoists);
      expect(TT::RParen, "expected ')'");
      return a;
    }
    fail("expected value");
  }

  Arith parse_factor(std::vector<Hoist>& hoists) {
    Arith a = parse_atom(hoists);
    while (at(TT::Star) && (peek().type == TT::Int || peek().type == TT::Ident ||
                            peek().type == TT::LParen ||
                            peek().type == TT::Underscore ||
                            peek().type == TT::Minus)) {
      // '*' here is multiplication: a deref would start the atom instead.
      ++pos_;
      Arith b = parse_atom(hoists);
      a = Arith::binary(Arith::Op::Mul, std::move(a), std::move(b));
    }
    return a;
  }

  Arith parse_arith(std::vector<Hoist>& hoists) {
    Arith a = parse_factor(hoists);
    while (at(TT::Plus) || at(TT::Minus)) {
      bool add = at(TT::Plus);
      ++pos_;
      Arith b = parse_factor(hoists);
      a = Arith::binary(add ? Arith::Op::Add : Arith::Op::Sub, std::move(a),
                        std::move(b));
    }
    return a;
  }

  Rel parse_rel(std::vector<Hoist>& hoists) {
    Rel r;
    r.lhs = parse_arith(hoists);
    switch (cur().type) {
      case TT::EqEq: r.op = Rel::Op::Eq; break;
      case TT::Ne: r.op = Rel::Op::Ne; break;
      case TT::Lt: r.op = Rel::Op::Lt; break;
      case TT::Le: r.op = Rel::Op::Le; break;
      case TT::Gt: r.op = Rel::Op::Gt; break;
      case TT::Ge: r.op = Rel::Op::Ge; break;
      default: return r;
    }
    ++pos_;
    r.rhs = parse_arith(hoists);
    return r;
  }

  ExprPtr wrap_hoists(std::vector<Hoist>& hoists, ExprPtr body) {
    for (auto it = hoists.rbegin(); it != hoists.rend(); ++it) {
      switch (it->kind) {
        case Hoist::Kind::Deref:
          body = SourceExpr::make(it->loc, SLetDeref{it->tmp, it->y, std::move(body)});
          break;
        case Hoist::Kind::Havoc:
          body = SourceExpr::make(it->loc, SLetHavoc{it->tmp, std::move(body)});
          break;
        case Hoist::Kind::MkRef:
          body = SourceExpr::make(
              it->loc, SLetMkRef{it->tmp, it->y, it->at_lft, std::move(body)});
          break;
        case Hoist::Kind::Arith:
          body = SourceExpr::make(
              it->loc, SLetArith{it->tmp, std::move(it->value), std::move(body)});
          break;
      }
    }
    hoists.clear();
    return body;
  }

  /// Reduces a relational test to (zero-true arithmetic, inverted?) per the
  /// desugaring table: `a = b` tests `a - b`; `a != b` is the same test with
  /// the branches swapped; > and >= swap operands of < and <=.
  static std::pair<Arith, bool> rel_to_zero_test(Rel r) {
    switch (r.op) {
      case Rel::Op::Eq:
        return {Arith::binary(Arith::Op::Sub, std::move(r.lhs), std::move(r.rhs)), false};
      case Rel::Op::Ne:
        return {Arith::binary(Arith::Op::Sub, std::move(r.lhs), std::move(r.rhs)), true};
      case Rel::Op::Lt:
        return {Arith::binary(Arith::Op::Lt, std::move(r.lhs), std::move(r.rhs)), false};
      case Rel::Op::Le:
        return {Arith::binary(Arith::Op::Le, std::move(r.lhs), std::move(r.rhs)), false};
      case Rel::Op::Gt:
        return {Arith::binary(Arith::Op::Lt, std::move(r.rhs), std::move(r.lhs)), false};
      case Rel::Op::Ge:
        return {Arith::binary(Arith::Op::Le, std::move(r.rhs), std::move(r.lhs)), false};
      case Rel::Op::None:
        return {std::move(r.lhs), false};
    }
    return {Arith::constant(0), false};
  }

  // ---- calls ----

  bool call_ahead() const {
    if (!at(TT::Ident)) return false;
    if (peek().type == TT::LParen) return true;
    if (peek().type != TT::Lt) return false;
    // IDENT '<' IDENT (',' IDENT)* '>' '(' — anything else is a comparison.
    std::size_t i = pos_ + 2;
    while (i < toks_.size()) {
      if (toks_[i].type != TT::Ident) return false;
      ++i;
      if (i >= toks_.size()) return false;
      if (toks_[i].type == TT::Comma) {
        ++i;
        continue;
      }
      if (toks_[i].type == TT::Gt) {
        return i + 1 < toks_.size() && toks_[i + 1].type == TT::LParen;
      }
      return false;
    }
    return false;
  }

  /// Parses `f<l1, l2>(a1, a2)`; arguments may be names, literals, `_`, or
  /// `mkref` forms — non-names are hoisted.
  SLetCall parse_call(std::vector<Hoist>& hoists) {
    SLetCall call;
    call.fn = expect(TT::Ident, "expected function name").text;
    if (accept(TT::Lt)) {
      for (;;) {
        call.lft_args.push_back(expect(TT::Ident, "expected lifetime argument").text);
        if (!accept(TT::Comma)) break;
      }
      expect(TT::Gt, "expected '>' after lifetime arguments");
    }
    expect(TT::LParen, "expected '(' to open call arguments");
    if (!at(TT::RParen)) {
      for (;;) {
        SourceLoc l = loc();
        if (at(TT::Ident)) {
          call.args.push_back(cur().text);
          ++pos_;
        } else if (at(TT::KwMkref)) {
          ++pos_;
          std::string init = parse_mkref_init(hoists);
          std::optional<std::string> at_lft;
          if (accept(TT::KwAt)) at_lft = expect(TT::Ident, "expected lifetime").text;
          std::string t = fresh_tmp();
          hoists.push_back(Hoist{Hoist::Kind::MkRef, t, init, at_lft, {}, l});
          call.args.push_back(t);
        } else {
          std::vector<Hoist> sub;
          Arith a = parse_arith(sub);
          for (auto& h : sub) hoists.push_back(std::move(h));
          if (a.op == Arith::Op::Var) {
            call.args.push_back(a.var);
          } else {
            std::string t = fresh_tmp();
            hoists.push_back(Hoist{Hoist::Kind::Arith, t, "", std::nullopt,
                                   std::move(a), l});
            call.args.push_back(t);
          }
        }
        if (!accept(TT::Comma)) break;
      }
    }
    expect(TT::RParen, "expected ')' closing call arguments");
    return call;
  }

  /// The initializer of mkref: a name, a literal, or `_` (hoisted as needed).
  std::string parse_mkref_init(std::vector<Hoist>& hoists) {
    SourceLoc l = loc();
    if (at(TT::Ident)) {
      std::string x = cur().text;
      ++pos_;
      return x;
    }
    if (at(TT::Int) || (at(TT::Minus) && peek().type == TT::Int)) {
      long long sign = accept(TT::Minus) ? -1 : 1;
      long long n = expect(TT::Int, "expected integer").int_val * sign;
      std::string t = fresh_tmp();
      hoists.push_back(
          Hoist{Hoist::Kind::Arith, t, "", std::nullopt, Arith::constant(n), l});
      return t;
    }
    if (accept(TT::Underscore)) {
      std::string t = fresh_tmp();
      hoists.push_back(Hoist{Hoist::Kind::Havoc, t, "", std::nullopt, {}, l});
      return t;
    }
    fail("expected mkref initializer (name, literal, or _)");
  }

  // ---- expressions ----

  ExprPtr defaulted_tail(SourceLoc l) {
    std::string t = fresh_tmp();
    return SourceExpr::make(
        l, SLetArith{t, Arith::constant(0),
                     SourceExpr::make(l, SVar{{t}})});
  }

  /// assert(rel && rel && ...); cont
  ExprPtr parse_assert() {
    SourceLoc l = loc();
    expect(TT::KwAssert, "expected assert");
    expect(TT::LParen, "expected '(' after assert");
    struct Conjunct {
      std::vector<Hoist> hoists;
      Rel rel;
      SourceLoc loc;
    };
    std::vector<Conjunct> conjs;
    for (;;) {
      Conjunct c;
      c.loc = loc();
      c.rel = parse_rel(c.hoists);
      conjs.push_back(std::move(c));
      if (!accept(TT::AndAnd)) break;
    }
    expect(TT::RParen, "expected ')' closing assert");
    ExprPtr cont = accept(TT::Semi) ? parse_expr() : defaulted_tail(l);
    for (auto it = conjs.rbegin(); it != conjs.rend(); ++it) {
      auto [test, inverted] = rel_to_zero_test(std::move(it->rel));
      std::string c = fresh_tmp();
      ExprPtr fail_e = SourceExpr::make(it->loc, SFail{});
      ExprPtr then_e = inverted ? std::move(fail_e) : std::move(cont);
      ExprPtr else_e =
          inverted ? std::move(cont) : SourceExpr::make(it->loc, SFail{});
      ExprPtr body = SourceExpr::make(
          it->loc,
          SLetArith{c, std::move(test),
                    SourceExpr::make(it->loc,
                                     SIfZ{c, std::move(then_e), std::move(else_e)})});
      cont = wrap_hoists(it->hoists, std::move(body));
    }
    return cont;
  }

  /// Tuple tail `(a, b, c)` or parenthesized name; nullopt when the paren
  /// opens a compound expression instead.
  std::optional<std::vector<std::string>> tuple_tail_ahead() const {
    if (!at(TT::LParen)) return std::nullopt;
    std::vector<std::string> names;
    std::size_t i = pos_ + 1;
    for (;;) {
      if (i >= toks_.size() || toks_[i].type != TT::Ident) return std::nullopt;
      names.push_back(toks_[i].text);
      ++i;
      if (i >= toks_.size()) return std::nullopt;
      if (toks_[i].type == TT::Comma) {
        ++i;
        continue;
      }
      if (toks_[i].type == TT::RParen) break;
      return std::nullopt;
    }
    // A following token that could continue an expression means this was a
    // parenthesized value, not a tail; names-only tails end the branch.
    return names;
  }

  ExprPtr parse_expr() {
    SourceLoc l = loc();

    if (at(TT::KwFail)) {
      ++pos_;
      return SourceExpr::make(l, SFail{});
    }

    if (at(TT::KwLet)) return parse_let();

    if (at(TT::KwNewlft)) {
      ++pos_;
      std::string a = expect(TT::Ident, "expected lifetime name").text;
      expect(TT::KwIn, "expected 'in' after newlft");
      return SourceExpr::make(l, SNewLft{a, parse_expr()});
    }
    if (at(TT::KwEndlft)) {
      ++pos_;
      std::string a = expect(TT::Ident, "expected lifetime name").text;
      expect(TT::Semi, "expected ';' after endlft");
      return SourceExpr::make(l, SEndLft{a, parse_expr()});
    }
    if (at(TT::KwAlias)) {
      ++pos_;
      expect(TT::LParen, "expected '(' after alias");
      std::string x = expect(TT::Ident, "expected variable").text;
      expect(TT::EqEq, "expected '=' in alias");
      std::string y = expect(TT::Ident, "expected variable").text;
      expect(TT::RParen, "expected ')' closing alias");
      std::optional<std::pair<OwnType, OwnType>> annot;
      if (accept(TT::KwAs)) {
        OwnType tx = parse_type();
        expect(TT::Comma, "expected ',' between alias annotation types");
        OwnType ty = parse_type();
        annot = std::make_pair(tx, ty);
      }
      expect(TT::Semi, "expected ';' after alias");
      return SourceExpr::make(l, SAliasAssume{x, y, annot, parse_expr()});
    }
    if (at(TT::KwAssert)) return parse_assert();

    if (at(TT::KwIf)) {
      ++pos_;
      std::vector<Hoist> hoists;
      Rel r = parse_rel(hoists);
      expect(TT::KwThen, "expected 'then'");
      ExprPtr then_e = parse_expr();
      expect(TT::KwElse, "expected 'else'");
      ExprPtr else_e = parse_expr();
      auto [test, inverted] = rel_to_zero_test(std::move(r));
      if (inverted) std::swap(then_e, else_e);
      ExprPtr body;
      if (test.op == Arith::Op::Var) {
        body = SourceExpr::make(
            l, SIfZ{test.var, std::move(then_e), std::move(else_e)});
      } else {
        std::string c = fresh_tmp();
        body = SourceExpr::make(
            l, SLetArith{c, std::move(test),
                         SourceExpr::make(
                             l, SIfZ{c, std::move(then_e), std::move(else_e)})});
      }
      return wrap_hoists(hoists, std::move(body));
    }
    if (at(TT::KwIfz)) {
      ++pos_;
      std::string x = expect(TT::Ident, "expected variable after ifz").text;
      expect(TT::KwThen, "expected 'then'");
      ExprPtr then_e = parse_expr();
      expect(TT::KwElse, "expected 'else'");
      ExprPtr else_e = parse_expr();
      return SourceExpr::make(l, SIfZ{x, std::move(then_e), std::move(else_e)});
    }

    // Assignment statement: x := e; k
    if (at(TT::Ident) && peek().type == TT::Walrus) {
      std::string x = cur().text;
      pos_ += 2;
      std::vector<Hoist> hoists;
      Arith a = parse_arith(hoists);
      std::string y;
      if (a.op == Arith::Op::Var) {
        y = a.var;
      } else {
        y = fresh_tmp();
        hoists.push_back(
            Hoist{Hoist::Kind::Arith, y, "", std::nullopt, std::move(a), l});
      }
      expect(TT::Semi, "expected ';' after assignment");
      ExprPtr body = SourceExpr::make(l, SAssign{x, y, parse_expr()});
      return wrap_hoists(hoists, std::move(body));
    }

    // Call statement or call tail.
    if (call_ahead()) {
      std::vector<Hoist> hoists;
      SLetCall call = parse_call(hoists);
      std::string t = fresh_tmp();
      call.binders = {t};
      ExprPtr body;
      if (accept(TT::Semi)) {
        call.body = parse_expr();
      } else {
        call.body = SourceExpr::make(l, SVar{{t}});
      }
      body = SourceExpr::make(l, std::move(call));
      return wrap_hoists(hoists, std::move(body));
    }

    // Tuple tail.
    if (auto names = tuple_tail_ahead()) {
      // Consume: '(' names... ')'
      pos_ += 1 + names->size() * 2;  // idents and separators plus ')'
      if (names->size() == 1) {
        return SourceExpr::make(l, SVar{{(*names)[0]}});
      }
      return SourceExpr::make(l, SVar{*names});
    }

    // Parenthesized compound expression.
    if (at(TT::LParen) && peek().type != TT::RParen) {
      ++pos_;
      ExprPtr inner = parse_expr();
      expect(TT::RParen, "expected ')'");
      return inner;
    }

    // Value tail: a name, literal, unit, deref, havoc, or arithmetic.
    std::vector<Hoist> hoists;
    Arith a = parse_arith(hoists);
    if (a.op == Arith::Op::Var && hoists.empty()) {
      return SourceExpr::make(l, SVar{{a.var}});
    }
    std::string t;
    if (a.op == Arith::Op::Var) {
      t = a.var;
    } else {
      t = fresh_tmp();
      hoists.push_back(
          Hoist{Hoist::Kind::Arith, t, "", std::nullopt, std::move(a), l});
    }
    ExprPtr body = SourceExpr::make(l, SVar{{t}});
    return wrap_hoists(hoists, std::move(body));
  }

  ExprPtr parse_let() {
    SourceLoc l = loc();
    expect(TT::KwLet, "expected let");

    if (accept(TT::LParen)) {
      std::vector<std::string> binders;
      for (;;) {
        binders.push_back(expect(TT::Ident, "expected binder").text);
        if (!accept(TT::Comma)) break;
      }
      expect(TT::RParen, "expected ')' closing binder tuple");
      expect(TT::EqEq, "expected '=' in let");
      std::vector<Hoist> hoists;
      SLetCall call = parse_call(hoists);
      call.binders = std::move(binders);
      expect(TT::KwIn, "expected 'in' after call");
      call.body = parse_expr();
      ExprPtr body = SourceExpr::make(l, std::move(call));
      return wrap_hoists(hoists, std::move(body));
    }

    std::string x = expect(TT::Ident, "expected binder").text;
    expect(TT::EqEq, "expected '=' in let");

    if (accept(TT::Underscore)) {
      expect(TT::KwIn, "expected 'in'");
      return SourceExpr::make(l, SLetHavoc{x, parse_expr()});
    }
    if (accept(TT::KwMkref)) {
      std::vector<Hoist> hoists;
      std::string init = parse_mkref_init(hoists);
      std::optional<std::string> at_lft;
      if (accept(TT::KwAt)) at_lft = expect(TT::Ident, "expected lifetime").text;
      expect(TT::KwIn, "expected 'in'");
      ExprPtr body =
          SourceExpr::make(l, SLetMkRef{x, init, at_lft, parse_expr()});
      return wrap_hoists(hoists, std::move(body));
    }
    if (at(TT::Star) && peek().type == TT::Ident &&
        peek(2).type == TT::KwIn) {
      ++pos_;
      std::string y = cur().text;
      ++pos_;
      expect(TT::KwIn, "expected 'in'");
      return SourceExpr::make(l, SLetDeref{x, y, parse_expr()});
    }
    // A deref inside larger arithmetic falls through to the general
    // right-hand side, which hoists each read into its own binding.
    if (call_ahead()) {
      std::vector<Hoist> hoists;
      SLetCall call = parse_call(hoists);
      call.binders = {x};
      expect(TT::KwIn, "expected 'in' after call");
      call.body = parse_expr();
      ExprPtr body = SourceExpr::make(l, std::move(call));
      return wrap_hoists(hoists, std::move(body));
    }
    if (at(TT::Ident)) {
      // Alias split, annotated alias split, or the start of arithmetic.
      if (peek().type == TT::KwIn || peek().type == TT::KwAs ||
          peek().type == TT::KwBorrow) {
        std::string y = cur().text;
        ++pos_;
        SplitAnnot annot;
        if (accept(TT::KwAs)) {
          annot.kind = SplitAnnot::Kind::As;
          annot.type = parse_type();
        } else if (accept(TT::KwBorrow)) {
          annot.kind = SplitAnnot::Kind::Borrow;
          annot.borrow_lft = expect(TT::Ident, "expected lifetime").text;
        }
        expect(TT::KwIn, "expected 'in'");
        return SourceExpr::make(l, SLetAlias{x, y, annot, parse_expr()});
      }
    }

    // General arithmetic (possibly relational) right-hand side.
    std::vector<Hoist> hoists;
    Rel r = parse_rel(hoists);
    Arith value;
    switch (r.op) {
      case Rel::Op::None: value = std::move(r.lhs); break;
      case Rel::Op::Eq:
        value = Arith::binary(Arith::Op::Eq, std::move(r.lhs), std::move(r.rhs));
        break;
      case Rel::Op::Lt:
        value = Arith::binary(Arith::Op::Lt, std::move(r.lhs), std::move(r.rhs));
        break;
      case Rel::Op::Le:
        value = Arith::binary(Arith::Op::Le, std::move(r.lhs), std::move(r.rhs));
        break;
      case Rel::Op::Gt:
        value = Arith::binary(Arith::Op::Lt, std::move(r.rhs), std::move(r.lhs));
        break;
      case Rel::Op::Ge:
        value = Arith::binary(Arith::Op::Le, std::move(r.rhs), std::move(r.lhs));
        break;
      case Rel::Op::Ne:
        fail("'!=' is not a value operator; use it inside assert/if");
    }
    expect(TT::KwIn, "expected 'in'");
    ExprPtr body =
        SourceExpr::make(l, SLetArith{x, std::move(value), parse_expr()});
    return wrap_hoists(hoists, std::move(body));
  }

 public:
  FunDef parse_fndef() {
    FunDef def;
    def.loc = loc();
    expect(TT::KwFn, "expected fn");
    def.name = expect(TT::Ident, "expected function name").text;
    if (accept(TT::Lt)) {
      for (;;) {
        std::string a = expect(TT::Ident, "expected lifetime parameter").text;
        def.sig.lft_params.push_back(a);
        def.sig.order.add(a);
        if (!accept(TT::Comma)) break;
      }
      if (accept(TT::Pipe)) {
        for (;;) {
          std::string a = expect(TT::Ident, "expected lifetime").text;
          expect(TT::Lt, "expected '<' in lifetime order");
          std::string b = expect(TT::Ident, "expected lifetime").text;
          if (!def.sig.order.add_order(a, b)) fail("cyclic lifetime order");
          if (!accept(TT::Comma)) break;
        }
      }
      expect(TT::Gt, "expected '>' closing lifetime parameters");
    }
    expect(TT::LParen, "expected '(' opening parameters");
    if (!at(TT::RParen)) {
      for (;;) {
        def.param_names.push_back(expect(TT::Ident, "expected parameter name").text);
        expect(TT::Colon, "expected ':' after parameter name");
        def.sig.params.push_back(parse_type());
        if (!accept(TT::Comma)) break;
      }
    }
    expect(TT::RParen, "expected ')' closing parameters");
    expect(TT::Arrow, "expected '->'");
    expect(TT::LParen, "expected '(' opening result types");
    if (!at(TT::Pipe)) {
      for (;;) {
        def.sig.posts.push_back(parse_type());
        if (!accept(TT::Comma)) break;
      }
    }
    expect(TT::Pipe, "expected '|' between post types and return types");
    if (!at(TT::RParen)) {
      for (;;) {
        def.sig.rets.push_back(parse_type());
        if (!accept(TT::Comma)) break;
      }
    }
    expect(TT::RParen, "expected ')' closing result types");
    expect(TT::LBrace, "expected '{' opening function body");
    def.body = parse_expr();
    expect(TT::RBrace, "expected '}' closing function body");
    return def;
  }
};

}  // namespace

namespace {

/// Scoped name correspondence for alpha-equivalence checking.
struct NameMap {
  std::vector<std::pair<std::string, std::string>> pairs;

  void push(const std::string& a, const std::string& b) {
    pairs.emplace_back(a, b);
  }
  void pop(std::size_t n) { pairs.resize(n); }

  bool matches(const std::string& a, const std::string& b) const {
    for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
      if (it->first == a) return it->second == b;
      if (it->second == b) return false;
    }
    return a == b;  // free names must agree literally
  }
};

bool arith_equiv(const Arith& a, const Arith& b, const NameMap& vars) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Arith::Op::Const: return a.n == b.n;
    case Arith::Op::Var: return vars.matches(a.var, b.var);
    default:
      return arith_equiv(*a.lhs, *b.lhs, vars) &&
             arith_equiv(*a.rhs, *b.rhs, vars);
  }
}

bool type_equiv(const OwnType& a, const OwnType& b, const NameMap& lfts) {
  if (a.kind != b.kind) return false;
  if (a.is_int()) return true;
  if (!lfts.matches(a.lft, b.lft) || a.own != b.own) return false;
  if (a.borrow.has_value() != b.borrow.has_value()) return false;
  if (!a.borrow) return true;
  return lfts.matches(a.borrow->lft, b.borrow->lft) &&
         a.borrow->amount == b.borrow->amount;
}

bool expr_equiv(const SourceExpr& a, const SourceExpr& b, NameMap& vars,
                NameMap& lfts);

bool annot_equiv(const SplitAnnot& a, const SplitAnnot& b, const NameMap& lfts) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case SplitAnnot::Kind::Default: return true;
    case SplitAnnot::Kind::Borrow: return lfts.matches(a.borrow_lft, b.borrow_lft);
    case SplitAnnot::Kind::As: return type_equiv(*a.type, *b.type, lfts);
  }
  return false;
}

bool expr_equiv(const SourceExpr& a, const SourceExpr& b, NameMap& vars,
                NameMap& lfts) {
  if (a.node.index() != b.node.index()) return false;
  std::size_t vmark = vars.pairs.size();
  std::size_t lmark = lfts.pairs.size();
  bool ok = std::visit(
      [&](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const T& nb = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, SVar>) {
          if (na.names.size() != nb.names.size()) return false;
          for (std::size_t i = 0; i < na.names.size(); ++i) {
            if (!vars.matches(na.names[i], nb.names[i])) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, SLetArith>) {
          if (!arith_equiv(na.value, nb.value, vars)) return false;
          vars.push(na.x, nb.x);
          return expr_equiv(*na.body, *nb.body, vars, lfts);
        } else if constexpr (std::is_same_v<T, SLetHavoc>) {
          vars.push(na.x, nb.x);
          return expr_equiv(*na.body, *nb.body, vars, lfts);
        } else if constexpr (std::is_same_v<T, SLetAlias>) {
          if (!vars.matches(na.y, nb.y)) return false;
          if (!annot_equiv(na.annot, nb.annot, lfts)) return false;
          vars.push(na.x, nb.x);
          return expr_equiv(*na.body, *nb.body, vars, lfts);
        } else if constexpr (std::is_same_v<T, SLetMkRef>) {
          if (!vars.matches(na.y, nb.y)) return false;
          if (na.at_lft.has_value() != nb.at_lft.has_value()) return false;
          if (na.at_lft && !lfts.matches(*na.at_lft, *nb.at_lft)) return false;
          vars.push(na.x, nb.x);
          return expr_equiv(*na.body, *nb.body, vars, lfts);
        } else if constexpr (std::is_same_v<T, SLetDeref>) {
          if (!vars.matches(na.y, nb.y)) return false;
          vars.push(na.x, nb.x);
          return expr_equiv(*na.body, *nb.body, vars, lfts);
        } else if constexpr (std::is_same_v<T, SAssign>) {
          if (!vars.matches(na.x, nb.x) || !vars.matches(na.y, nb.y)) {
            return false;
          }
          return expr_equiv(*na.cont, *nb.cont, vars, lfts);
        } else if constexpr (std::is_same_v<T, SIfZ>) {
          if (!vars.matches(na.x, nb.x)) return false;
          if (!expr_equiv(*na.then_e, *nb.then_e, vars, lfts)) return false;
          vars.pop(vmark);
          lfts.pop(lmark);
          return expr_equiv(*na.else_e, *nb.else_e, vars, lfts);
        } else if constexpr (std::is_same_v<T, SLetCall>) {
          if (na.fn != nb.fn) return false;
          if (na.lft_args.size() != nb.lft_args.size()) return false;
          for (std::size_t i = 0; i < na.lft_args.size(); ++i) {
            if (!lfts.matches(na.lft_args[i], nb.lft_args[i])) return false;
          }
          if (na.args.size() != nb.args.size()) return false;
          for (std::size_t i = 0; i < na.args.size(); ++i) {
            if (!vars.matches(na.args[i], nb.args[i])) return false;
          }
          if (na.binders.size() != nb.binders.size()) return false;
          for (std::size_t i = 0; i < na.binders.size(); ++i) {
            vars.push(na.binders[i], nb.binders[i]);
          }
          return expr_equiv(*na.body, *nb.body, vars, lfts);
        } else if constexpr (std::is_same_v<T, SAliasAssume>) {
          if (!vars.matches(na.x, nb.x) || !vars.matches(na.y, nb.y)) {
            return false;
          }
          if (na.annot.has_value() != nb.annot.has_value()) return false;
          if (na.annot && (!type_equiv(na.annot->first, nb.annot->first, lfts) ||
                           !type_equiv(na.annot->second, nb.annot->second, lfts))) {
            return false;
          }
          return expr_equiv(*na.cont, *nb.cont, vars, lfts);
        } else if constexpr (std::is_same_v<T, SNewLft>) {
          lfts.push(na.lft, nb.lft);
          return expr_equiv(*na.body, *nb.body, vars, lfts);
        } else if constexpr (std::is_same_v<T, SEndLft>) {
          if (!lfts.matches(na.lft, nb.lft)) return false;
          return expr_equiv(*na.cont, *nb.cont, vars, lfts);
        } else if constexpr (std::is_same_v<T, SFail>) {
          return true;
        } else {
          return false;
        }
      },
      a.node);
  vars.pop(vmark);
  lfts.pop(lmark);
  return ok;
}

}  // namespace

bool alpha_equivalent(const Program& p1, const Program& p2) {
  if (p1.fns.size() != p2.fns.size()) return false;
  for (std::size_t i = 0; i < p1.fns.size(); ++i) {
    const FunDef& f = p1.fns[i];
    const FunDef& g = p2.fns[i];
    if (f.name != g.name) return false;
    if (f.param_names.size() != g.param_names.size()) return false;
    if (f.sig.lft_params.size() != g.sig.lft_params.size()) return false;
    NameMap vars, lfts;
    for (std::size_t j = 0; j < f.sig.lft_params.size(); ++j) {
      lfts.push(f.sig.lft_params[j], g.sig.lft_params[j]);
    }
    // The declared partial orders must agree under the correspondence.
    for (const auto& a1 : f.sig.lft_params) {
      for (const auto& b1 : f.sig.lft_params) {
        std::string a2, b2;
        for (std::size_t j = 0; j < f.sig.lft_params.size(); ++j) {
          if (f.sig.lft_params[j] == a1) a2 = g.sig.lft_params[j];
          if (f.sig.lft_params[j] == b1) b2 = g.sig.lft_params[j];
        }
        if (f.sig.order.less(a1, b1) != g.sig.order.less(a2, b2)) return false;
      }
    }
    if (f.sig.params.size() != g.sig.params.size() ||
        f.sig.posts.size() != g.sig.posts.size() ||
        f.sig.rets.size() != g.sig.rets.size()) {
      return false;
    }
    for (std::size_t j = 0; j < f.sig.params.size(); ++j) {
      if (!type_equiv(f.sig.params[j], g.sig.params[j], lfts)) return false;
    }
    for (std::size_t j = 0; j < f.sig.posts.size(); ++j) {
      if (!type_equiv(f.sig.posts[j], g.sig.posts[j], lfts)) return false;
    }
    for (std::size_t j = 0; j < f.sig.rets.size(); ++j) {
      if (!type_equiv(f.sig.rets[j], g.sig.rets[j], lfts)) return false;
    }
    for (std::size_t j = 0; j < f.param_names.size(); ++j) {
      vars.push(f.param_names[j], g.param_names[j]);
    }
    if (!expr_equiv(*f.body, *g.body, vars, lfts)) return false;
  }
  NameMap vars, lfts;
  return expr_equiv(*p1.main_e, *p2.main_e, vars, lfts);
}

Expected<Program, ParseError> parse(std::string_view text) {
  std::vector<Token> toks;
  LexError lerr;
  if (!lex(text, toks, lerr)) {
    return ParseError{lerr.message, lerr.line, lerr.col};
  }
  try {
    Parser p(std::move(toks));
    Program prog = p.parse_program();
    alpha_rename(prog);
    assign_ids(prog);
    return prog;
  } catch (ParseFail& f) {
    return f.err;
  }
}

}  // namespace bfo
