#pragma once

#include "bfo/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bfo {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

/// Pure arithmetic over integer variables and constants. Comparisons return
/// 0 for true so they compose with ifz, which branches on zero.
struct Arith {
  enum class Op { Const, Var, Add, Sub, Mul, Eq, Lt, Le };

  Op op = Op::Const;
  long long n = 0;                // Const
  std::string var;                // Var
  std::unique_ptr<Arith> lhs, rhs;  // binary ops

  static Arith constant(long long v) {
    Arith a;
    a.op = Op::Const;
    a.n = v;
    return a;
  }
  static Arith variable(std::string x) {
    Arith a;
    a.op = Op::Var;
    a.var = std::move(x);
    return a;
  }
  static Arith binary(Op op, Arith l, Arith r) {
    Arith a;
    a.op = op;
    a.lhs = std::make_unique<Arith>(std::move(l));
    a.rhs = std::make_unique<Arith>(std::move(r));
    return a;
  }

  Arith clone() const;
  void free_vars(std::vector<std::string>& out) const;
};

struct SourceExpr;
using ExprPtr = std::unique_ptr<SourceExpr>;

/// Tail of a function body or of main: returns the named variables (one for
/// ordinary returns, several for tuple returns).
struct SVar {
  std::vector<std::string> names;
};

struct SLetArith {
  std::string x;
  Arith value;
  ExprPtr body;
};

/// let x = _ in body: x is drawn from the havoc input stream.
struct SLetHavoc {
  std::string x;
  ExprPtr body;
};

/// How `let x = y in` splits y's type between the two names.
struct SplitAnnot {
  enum class Kind { Default, Borrow, As };
  Kind kind = Kind::Default;
  std::string borrow_lft;        // Borrow
  std::optional<OwnType> type;   // As
};

/// let x = y in body (y a reference or int variable); the annotation chooses
/// the ownership split.
struct SLetAlias {
  std::string x;
  std::string y;
  SplitAnnot annot;
  ExprPtr body;
};

struct SLetMkRef {
  std::string x;
  std::string y;  // the initializer variable (constants are hoisted by the parser)
  std::optional<std::string> at_lft;
  ExprPtr body;
};

struct SLetDeref {
  std::string x;
  std::string y;
  ExprPtr body;
};

struct SAssign {
  std::string x;
  std::string y;  // value variable (arithmetic is hoisted by the parser)
  ExprPtr cont;
};

struct SIfZ {
  std::string x;
  ExprPtr then_e;
  ExprPtr else_e;
};

/// let (b1, ..., bk) = f<l1, ...>(a1, ..., an) in body.
/// The binders receive the return values; reference arguments keep their
/// names and take their declared post-call types.
struct SLetCall {
  std::vector<std::string> binders;
  std::string fn;
  std::vector<std::string> lft_args;
  std::vector<std::string> args;
  ExprPtr body;
};

/// alias(x = y); cont — ghost: asserts x and y hold the same address and
/// redistributes ownership. The annotation pins the redistribution.
struct SAliasAssume {
  std::string x;
  std::string y;
  std::optional<std::pair<OwnType, OwnType>> annot;  // new types for x, y
  ExprPtr cont;
};

struct SNewLft {
  std::string lft;
  ExprPtr body;
};

struct SEndLft {
  std::string lft;
  ExprPtr cont;
};

struct SFail {};

struct SourceExpr {
  int id = -1;  // unique per program, assigned after parsing
  SourceLoc loc;
  std::variant<SVar, SLetArith, SLetHavoc, SLetAlias, SLetMkRef, SLetDeref,
               SAssign, SIfZ, SLetCall, SAliasAssume, SNewLft, SEndLft, SFail>
      node;

  template <class T>
  static ExprPtr make(SourceLoc loc, T n) {
    auto e = std::make_unique<SourceExpr>();
    e->loc = loc;
    e->node = std::move(n);
    return e;
  }
};

struct FunDef {
  std::string name;
  std::vector<std::string> param_names;
  FnType sig;
  ExprPtr body;
  SourceLoc loc;
};

struct Program {
  std::vector<FunDef> fns;
  ExprPtr main_e;

  const FunDef* find_fn(const std::string& name) const;

  /// Total number of expression nodes; node ids are in [0, node_count).
  int node_count = 0;
};

/// Deep copy preserving node ids and locations.
Program clone_program(const Program& p);

/// Renames binders so no two binders in the program share a name. Original
/// names are kept where already unique (environment dumps stay readable).
void alpha_rename(Program& p);

/// Assigns sequential ids to every expression node.
void assign_ids(Program& p);

/// Walks every expression node top-down.
void for_each_expr(const SourceExpr& e, const std::function<void(const SourceExpr&)>& f);

}  // namespace bfo
