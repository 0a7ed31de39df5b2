#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "bfo/ast.hpp"

namespace bfo {

/// The pointer-free target language: heap cells become pairs of integers
/// (current value, prophecy of the final value), reads become projections,
/// havoc and prophecies become nondeterministic draws, and lifetime ends
/// become `assume` constraints that tie a prophecy to the value it ended on.
///
/// Terms form a straight-line spine of let bindings ending in a variable
/// tuple, a branch, or `fail`, mirroring the source language's shape.

struct TargetTerm;
using TargetTermPtr = std::unique_ptr<TargetTerm>;

/// Why a nondeterministic draw exists; drives oracle replay.
enum class NondetRole {
  Havoc,       ///< source havoc (`let x = _`)
  UntrustedRead, ///< read through a zero-ownership reference
  Prophecy,    ///< final-value slot of a reference binding
  Pad,         ///< placeholder slot that is immediately overwritten
};

/// A small pure operand: a variable, a projection of a variable, a fresh
/// nondeterministic draw, or an integer literal.
struct Atom {
  enum class Kind { Var, Fst, Snd, Nondet, Const };
  Kind kind = Kind::Const;
  std::string var;     ///< for Var / Fst / Snd
  long long n = 0;     ///< for Const
  NondetRole role = NondetRole::Pad;  ///< for Nondet
  /// For Prophecy draws: the reference binding this slot belongs to.
  std::string prophecy_of;

  static Atom make_var(std::string v);
  static Atom make_fst(std::string v);
  static Atom make_snd(std::string v);
  static Atom make_nondet(NondetRole role, std::string prophecy_of = "");
  static Atom make_const(long long n);

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Tail: return a tuple of register values. Functions return their result
/// slots followed by their reference-typed parameters; `ret_count` says how
/// many leading names are result slots (they render as an inner tuple when
/// there are also trailing parameters).
struct TVar {
  std::vector<std::string> names;
  int ret_count = 1;
};

/// `let x = e in body` for an arithmetic expression over integers.
struct TLetArith {
  std::string x;
  Arith value;
  TargetTermPtr body;
};

/// `let x = a in body` where `a` is an atom (copy, projection, draw, const).
struct TLetAtom {
  std::string x;
  Atom value;
  TargetTermPtr body;
};

/// `let x = (a, b) in body`.
struct TLetPair {
  std::string x;
  Atom fst;
  Atom snd;
  TargetTermPtr body;
};

/// `let (b1, ..., bk) = f(a1, ..., an) in body`; the callee's tuple is
/// destructured positionally. `ret_count` mirrors the callee's result arity.
struct TLetCall {
  std::vector<std::string> binders;
  int ret_count = 1;
  std::string fn;
  std::vector<std::string> args;
  TargetTermPtr body;
};

/// `assume (a = b); cont` — keeps only states where the operands agree.
struct TAssume {
  Atom a;
  Atom b;
  TargetTermPtr cont;
};

/// `ifz x then t else u`: zero takes the first branch.
struct TIfZ {
  std::string x;
  TargetTermPtr then_t;
  TargetTermPtr else_t;
};

/// Unconditional failure.
struct TFail {};

/// One target term node. `origin` is the id of the source node it was
/// generated from (-1 for synthesized glue), used to align replays.
struct TargetTerm {
  int origin = -1;
  std::variant<TVar, TLetArith, TLetAtom, TLetPair, TLetCall, TAssume, TIfZ,
               TFail>
      node;

  template <class T>
  static TargetTermPtr make(int origin, T&& n) {
    auto e = std::make_unique<TargetTerm>();
    e->origin = origin;
    e->node = std::forward<T>(n);
    return e;
  }
};

/// A translated function: all source parameters in declaration order; the
/// body's tails return `ret_count` result slots followed by the
/// reference-typed parameters (`ref_params`, in declaration order).
struct TargetFnDef {
  std::string name;
  std::vector<std::string> params;
  std::vector<std::string> ref_params;
  int ret_count = 1;
  TargetTermPtr body;
};

/// A whole translated program.
struct TargetProgram {
  std::vector<TargetFnDef> fns;
  TargetTermPtr main_t;

  const TargetFnDef* find_fn(const std::string& name) const;
};

/// Deep copy.
TargetTermPtr clone_target(const TargetTerm& t);

}  // namespace bfo
