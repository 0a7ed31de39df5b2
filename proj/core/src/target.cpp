#include "bfo/target.hpp"

namespace bfo {

Atom Atom::make_var(std::string v) {
  Atom a;
  a.kind = Kind::Var;
  a.var = std::move(v);
  return a;
}

Atom Atom::make_fst(std::string v) {
  Atom a;
  a.kind = Kind::Fst;
  a.var = std::move(v);
  return a;
}

Atom Atom::make_snd(std::string v) {
  Atom a;
  a.kind = Kind::Snd;
  a.var = std::move(v);
  return a;
}

Atom Atom::make_nondet(NondetRole role, std::string prophecy_of) {
  Atom a;
  a.kind = Kind::Nondet;
  a.role = role;
  a.prophecy_of = std::move(prophecy_of);
  return a;
}

Atom Atom::make_const(long long n) {
  Atom a;
  a.kind = Kind::Const;
  a.n = n;
  return a;
}

const TargetFnDef* TargetProgram::find_fn(const std::string& name) const {
  for (const auto& f : fns)
    if (f.name == name) return &f;
  return nullptr;
}

TargetTermPtr clone_target(const TargetTerm& t) {
  using R = TargetTermPtr;
  return std::visit(
      [&](const auto& n) -> R {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TVar>) {
          return TargetTerm::make(t.origin, TVar{n});
        } else if constexpr (std::is_same_v<T, TLetArith>) {
          return TargetTerm::make(
              t.origin, TLetArith{n.x, n.value.clone(), clone_target(*n.body)});
        } else if constexpr (std::is_same_v<T, TLetAtom>) {
          return TargetTerm::make(t.origin,
                                  TLetAtom{n.x, n.value, clone_target(*n.body)});
        } else if constexpr (std::is_same_v<T, TLetPair>) {
          return TargetTerm::make(
              t.origin, TLetPair{n.x, n.fst, n.snd, clone_target(*n.body)});
        } else if constexpr (std::is_same_v<T, TLetCall>) {
          return TargetTerm::make(t.origin,
                                  TLetCall{n.binders, n.ret_count, n.fn, n.args,
                                           clone_target(*n.body)});
        } else if constexpr (std::is_same_v<T, TAssume>) {
          return TargetTerm::make(t.origin,
                                  TAssume{n.a, n.b, clone_target(*n.cont)});
        } else if constexpr (std::is_same_v<T, TIfZ>) {
          return TargetTerm::make(t.origin,
                                  TIfZ{n.x, clone_target(*n.then_t),
                                       clone_target(*n.else_t)});
        } else {
          return TargetTerm::make(t.origin, TFail{});
        }
      },
      t.node);
}

}  // namespace bfo
