#include "bfo/emit.hpp"

#include <sstream>

#include "bfo/pretty.hpp"

namespace bfo {

namespace {

// ---------------------------------------------------------------------------
// ML profile
// ---------------------------------------------------------------------------

const char* kMlPreamble =
    "let nondet () = Random.int(0)\n"
    "let rec assume x n =\n"
    "  if x = n then () else assume x n\n";

std::string ml_atom(const Atom& a) {
  switch (a.kind) {
    case Atom::Kind::Var: return a.var;
    case Atom::Kind::Fst: return "fst " + a.var;
    case Atom::Kind::Snd: return "snd " + a.var;
    case Atom::Kind::Nondet: return "nondet ()";
    case Atom::Kind::Const:
      return a.n < 0 ? "(" + std::to_string(a.n) + ")" : std::to_string(a.n);
  }
  return "?";
}

/// "(a, b)" / "((r1, r2), p1, p2)" depending on how many leading names are
/// result slots; a single name needs no parentheses.
std::string ml_tuple(const std::vector<std::string>& names, int ret_count) {
  if (names.size() == 1) return names[0];
  std::string out = "(";
  bool group = ret_count > 1 && ret_count < static_cast<int>(names.size());
  size_t i = 0;
  if (group) {
    out += "(";
    for (; i < static_cast<size_t>(ret_count); ++i) {
      if (i) out += ", ";
      out += names[i];
    }
    out += ")";
  }
  for (; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out + ")";
}

/// True when `x` appears in the arithmetic expression.
bool arith_uses(const Arith& a, const std::string& x) {
  switch (a.op) {
    case Arith::Op::Const: return false;
    case Arith::Op::Var: return a.var == x;
    default: return arith_uses(*a.lhs, x) || arith_uses(*a.rhs, x);
  }
}

bool atom_uses(const Atom& a, const std::string& x) {
  return (a.kind == Atom::Kind::Var || a.kind == Atom::Kind::Fst ||
          a.kind == Atom::Kind::Snd) &&
         a.var == x;
}

/// True when `x` is referenced anywhere in `t`.
bool term_uses(const TargetTerm& t, const std::string& x) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TVar>) {
          for (const auto& m : n.names)
            if (m == x) return true;
          return false;
        } else if constexpr (std::is_same_v<T, TLetArith>) {
          return arith_uses(n.value, x) || term_uses(*n.body, x);
        } else if constexpr (std::is_same_v<T, TLetAtom>) {
          return atom_uses(n.value, x) || term_uses(*n.body, x);
        } else if constexpr (std::is_same_v<T, TLetPair>) {
          return atom_uses(n.fst, x) || atom_uses(n.snd, x) ||
                 term_uses(*n.body, x);
        } else if constexpr (std::is_same_v<T, TLetCall>) {
          for (const auto& a : n.args)
            if (a == x) return true;
          return term_uses(*n.body, x);
        } else if constexpr (std::is_same_v<T, TAssume>) {
          return atom_uses(n.a, x) || atom_uses(n.b, x) || term_uses(*n.cont, x);
        } else if constexpr (std::is_same_v<T, TIfZ>) {
          return n.x == x || term_uses(*n.then_t, x) || term_uses(*n.else_t, x);
        } else {
          return false;
        }
      },
      t.node);
}

/// Renders a zero-test of `test` as a relation: the test evaluates to zero
/// exactly when the relation holds, so `positive` picks the holds/fails side.
std::string ml_rel(const Arith& test, bool positive) {
  auto bin = [&](const char* yes, const char* no) {
    return pretty_arith(*test.lhs) + " " + (positive ? yes : no) + " " +
           pretty_arith(*test.rhs);
  };
  switch (test.op) {
    case Arith::Op::Eq: return bin("=", "<>");
    case Arith::Op::Sub: return bin("=", "<>");
    case Arith::Op::Lt: return bin("<", ">=");
    case Arith::Op::Le: return bin("<=", ">");
    default:
      return pretty_arith(test) + (positive ? " = 0" : " <> 0");
  }
}

class MlEmitter {
 public:
  std::string render(const TargetProgram& p) {
    os_ << kMlPreamble;
    for (const auto& f : p.fns) {
      os_ << "\n";
      bool rec = calls_any(*f.body);
      os_ << (rec ? "let rec " : "let ") << f.name;
      for (const auto& q : f.params) os_ << " " << q;
      os_ << " =\n";
      term(*f.body, 1);
    }
    os_ << "\nlet main =\n";
    term(*p.main_t, 1);
    return os_.str();
  }

 private:
  std::ostringstream os_;

  static bool calls_any(const TargetTerm& t) {
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, TLetCall>) {
            return true;
          } else if constexpr (std::is_same_v<T, TLetArith> ||
                               std::is_same_v<T, TLetAtom> ||
                               std::is_same_v<T, TLetPair>) {
            return calls_any(*n.body);
          } else if constexpr (std::is_same_v<T, TAssume>) {
            return calls_any(*n.cont);
          } else if constexpr (std::is_same_v<T, TIfZ>) {
            return calls_any(*n.then_t) || calls_any(*n.else_t);
          } else {
            return false;
          }
        },
        t.node);
  }

  void indent(int d) {
    for (int i = 0; i < d; ++i) os_ << "  ";
  }

  void term(const TargetTerm& t, int d) {
    // `let c = test in ifz c ...` with c used only as the scrutinee renders
    // as assert/if over the relation itself.
    if (const auto* la = std::get_if<TLetArith>(&t.node)) {
      if (const auto* br = std::get_if<TIfZ>(&la->body->node);
          br && br->x == la->x && !term_uses(*br->then_t, la->x) &&
          !term_uses(*br->else_t, la->x)) {
        if (std::holds_alternative<TFail>(br->else_t->node)) {
          indent(d);
          os_ << "assert (" << ml_rel(la->value, true) << ");\n";
          term(*br->then_t, d);
          return;
        }
        if (std::holds_alternative<TFail>(br->then_t->node)) {
          indent(d);
          os_ << "assert (" << ml_rel(la->value, false) << ");\n";
          term(*br->else_t, d);
          return;
        }
        branch(ml_rel(la->value, true), *br->then_t, *br->else_t, d);
        return;
      }
    }
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, TVar>) {
            indent(d);
            os_ << ml_tuple(n.names, n.ret_count) << "\n";
          } else if constexpr (std::is_same_v<T, TLetArith>) {
            indent(d);
            os_ << "let " << n.x << " = " << pretty_arith(n.value) << " in\n";
            term(*n.body, d);
          } else if constexpr (std::is_same_v<T, TLetAtom>) {
            indent(d);
            os_ << "let " << n.x << " = " << ml_atom(n.value) << " in\n";
            term(*n.body, d);
          } else if constexpr (std::is_same_v<T, TLetPair>) {
            indent(d);
            os_ << "let " << n.x << " = (" << ml_atom(n.fst) << ", "
                << ml_atom(n.snd) << ") in\n";
            term(*n.body, d);
          } else if constexpr (std::is_same_v<T, TLetCall>) {
            indent(d);
            os_ << "let " << ml_tuple(n.binders, n.ret_count) << " = " << n.fn;
            if (n.args.empty())
              os_ << " ()";
            else
              for (const auto& a : n.args) os_ << " " << a;
            os_ << " in\n";
            term(*n.body, d);
          } else if constexpr (std::is_same_v<T, TAssume>) {
            indent(d);
            os_ << "assume (" << ml_atom(n.a) << ") (" << ml_atom(n.b)
                << ");\n";
            term(*n.cont, d);
          } else if constexpr (std::is_same_v<T, TIfZ>) {
            branch(n.x + " = 0", *n.then_t, *n.else_t, d);
          } else {
            indent(d);
            os_ << "assert false\n";
          }
        },
        t.node);
  }

  void branch(const std::string& cond, const TargetTerm& then_t,
              const TargetTerm& else_t, int d) {
    indent(d);
    os_ << "if " << cond << " then (\n";
    term(then_t, d + 1);
    indent(d);
    os_ << ") else (\n";
    term(else_t, d + 1);
    indent(d);
    os_ << ")\n";
  }
};

// ---------------------------------------------------------------------------
// S-expression profile
// ---------------------------------------------------------------------------

std::string sx_arith(const Arith& a) {
  switch (a.op) {
    case Arith::Op::Const: return std::to_string(a.n);
    case Arith::Op::Var: return a.var;
    default: {
      const char* op = a.op == Arith::Op::Add  ? "+"
                       : a.op == Arith::Op::Sub ? "-"
                       : a.op == Arith::Op::Mul ? "*"
                       : a.op == Arith::Op::Eq  ? "="
                       : a.op == Arith::Op::Lt  ? "<"
                                                : "<=";
      return std::string("(") + op + " " + sx_arith(*a.lhs) + " " +
             sx_arith(*a.rhs) + ")";
    }
  }
}

std::string sx_atom(const Atom& a) {
  switch (a.kind) {
    case Atom::Kind::Var: return a.var;
    case Atom::Kind::Fst: return "(fst " + a.var + ")";
    case Atom::Kind::Snd: return "(snd " + a.var + ")";
    case Atom::Kind::Const: return std::to_string(a.n);
    case Atom::Kind::Nondet: {
      const char* role = a.role == NondetRole::Havoc          ? "havoc"
                         : a.role == NondetRole::UntrustedRead ? "read"
                         : a.role == NondetRole::Prophecy      ? "prophecy"
                                                               : "pad";
      std::string out = "(nondet " + std::string(role);
      if (!a.prophecy_of.empty()) out += " " + a.prophecy_of;
      return out + ")";
    }
  }
  return "?";
}

class SexpEmitter {
 public:
  std::string render(const TargetProgram& p) {
    os_ << "(bfo-target 1)\n";
    for (const auto& f : p.fns) {
      os_ << "(fn " << f.name << " (params";
      for (const auto& q : f.params) os_ << " " << q;
      os_ << ") (refs";
      for (const auto& q : f.ref_params) os_ << " " << q;
      os_ << ") (rets " << f.ret_count << ")\n";
      term(*f.body, 1);
      os_ << ")\n";
    }
    os_ << "(main\n";
    term(*p.main_t, 1);
    os_ << ")\n";
    return os_.str();
  }

 private:
  std::ostringstream os_;

  void indent(int d) {
    for (int i = 0; i < d; ++i) os_ << "  ";
  }

  void term(const TargetTerm& t, int d) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          indent(d);
          if constexpr (std::is_same_v<T, TVar>) {
            os_ << "(ret " << n.ret_count;
            for (const auto& m : n.names) os_ << " " << m;
            os_ << ")\n";
          } else if constexpr (std::is_same_v<T, TLetArith>) {
            os_ << "(let " << n.x << " " << sx_arith(n.value) << "\n";
            term(*n.body, d);
            indent(d);
            os_ << ")\n";
          } else if constexpr (std::is_same_v<T, TLetAtom>) {
            os_ << "(let " << n.x << " " << sx_atom(n.value) << "\n";
            term(*n.body, d);
            indent(d);
            os_ << ")\n";
          } else if constexpr (std::is_same_v<T, TLetPair>) {
            os_ << "(pair " << n.x << " " << sx_atom(n.fst) << " "
                << sx_atom(n.snd) << "\n";
            term(*n.body, d);
            indent(d);
            os_ << ")\n";
          } else if constexpr (std::is_same_v<T, TLetCall>) {
            os_ << "(call (";
            for (size_t i = 0; i < n.binders.size(); ++i)
              os_ << (i ? " " : "") << n.binders[i];
            os_ << ") " << n.ret_count << " " << n.fn << " (";
            for (size_t i = 0; i < n.args.size(); ++i)
              os_ << (i ? " " : "") << n.args[i];
            os_ << ")\n";
            term(*n.body, d);
            indent(d);
            os_ << ")\n";
          } else if constexpr (std::is_same_v<T, TAssume>) {
            os_ << "(assume " << sx_atom(n.a) << " " << sx_atom(n.b) << "\n";
            term(*n.cont, d);
            indent(d);
            os_ << ")\n";
          } else if constexpr (std::is_same_v<T, TIfZ>) {
            os_ << "(ifz " << n.x << "\n";
            term(*n.then_t, d + 1);
            term(*n.else_t, d + 1);
            indent(d);
            os_ << ")\n";
          } else {
            os_ << "(fail)\n";
          }
        },
        t.node);
  }
};

}  // namespace

std::string emit_target(const TargetProgram& p, EmitProfile profile) {
  if (profile == EmitProfile::Ml) return MlEmitter().render(p);
  return SexpEmitter().render(p);
}

}  // namespace bfo
