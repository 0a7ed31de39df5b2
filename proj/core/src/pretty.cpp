#include "bfo/pretty.hpp"

#include <sstream>

namespace bfo {

namespace {

// Precedence levels: 0 comparison, 1 additive, 2 multiplicative, 3 atom.
int prec(Arith::Op op) {
  switch (op) {
    case Arith::Op::Eq:
    case Arith::Op::Lt:
    case Arith::Op::Le:
      return 0;
    case Arith::Op::Add:
    case Arith::Op::Sub:
      return 1;
    case Arith::Op::Mul:
      return 2;
    default:
      return 3;
  }
}

const char* op_text(Arith::Op op) {
  switch (op) {
    case Arith::Op::Add: return " + ";
    case Arith::Op::Sub: return " - ";
    case Arith::Op::Mul: return " * ";
    case Arith::Op::Eq: return " = ";
    case Arith::Op::Lt: return " < ";
    case Arith::Op::Le: return " <= ";
    default: return "?";
  }
}

void print_arith(std::ostream& os, const Arith& a, int min_prec) {
  switch (a.op) {
    case Arith::Op::Const:
      os << a.n;
      return;
    case Arith::Op::Var:
      os << a.var;
      return;
    default: {
      int p = prec(a.op);
      bool parens = p < min_prec;
      if (parens) os << "(";
      // Left-associative: the left child may sit at the same level, the right
      // child must bind strictly tighter.
      print_arith(os, *a.lhs, p);
      os << op_text(a.op);
      print_arith(os, *a.rhs, p + 1);
      if (parens) os << ")";
      return;
    }
  }
}

void indent_to(std::ostream& os, int n) {
  for (int i = 0; i < n; ++i) os << ' ';
}

void print_expr(std::ostream& os, const SourceExpr& e, int ind);

void print_branch(std::ostream& os, const SourceExpr& e, int ind) {
  os << "(\n";
  indent_to(os, ind + 2);
  print_expr(os, e, ind + 2);
  os << "\n";
  indent_to(os, ind);
  os << ")";
}

void print_expr(std::ostream& os, const SourceExpr& e, int ind) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SVar>) {
          if (n.names.size() == 1) {
            os << n.names[0];
          } else {
            os << "(";
            for (std::size_t i = 0; i < n.names.size(); ++i) {
              if (i) os << ", ";
              os << n.names[i];
            }
            os << ")";
          }
        } else if constexpr (std::is_same_v<T, SLetArith>) {
          os << "let " << n.x << " = ";
          print_arith(os, n.value, 0);
          os << " in\n";
          indent_to(os, ind);
          print_expr(os, *n.body, ind);
        } else if constexpr (std::is_same_v<T, SLetHavoc>) {
          os << "let " << n.x << " = _ in\n";
          indent_to(os, ind);
          print_expr(os, *n.body, ind);
        } else if constexpr (std::is_same_v<T, SLetAlias>) {
          os << "let " << n.x << " = " << n.y;
          switch (n.annot.kind) {
            case SplitAnnot::Kind::Default:
              break;
            case SplitAnnot::Kind::Borrow:
              os << " borrow " << n.annot.borrow_lft;
              break;
            case SplitAnnot::Kind::As:
              os << " as " << n.annot.type->str();
              break;
          }
          os << " in\n";
          indent_to(os, ind);
          print_expr(os, *n.body, ind);
        } else if constexpr (std::is_same_v<T, SLetMkRef>) {
          os << "let " << n.x << " = mkref " << n.y;
          if (n.at_lft) os << " at " << *n.at_lft;
          os << " in\n";
          indent_to(os, ind);
          print_expr(os, *n.body, ind);
        } else if constexpr (std::is_same_v<T, SLetDeref>) {
          os << "let " << n.x << " = *" << n.y << " in\n";
          indent_to(os, ind);
          print_expr(os, *n.body, ind);
        } else if constexpr (std::is_same_v<T, SAssign>) {
          os << n.x << " := " << n.y << ";\n";
          indent_to(os, ind);
          print_expr(os, *n.cont, ind);
        } else if constexpr (std::is_same_v<T, SIfZ>) {
          os << "ifz " << n.x << " then ";
          print_branch(os, *n.then_e, ind);
          os << " else ";
          print_branch(os, *n.else_e, ind);
        } else if constexpr (std::is_same_v<T, SLetCall>) {
          os << "let ";
          if (n.binders.size() == 1) {
            os << n.binders[0];
          } else {
            os << "(";
            for (std::size_t i = 0; i < n.binders.size(); ++i) {
              if (i) os << ", ";
              os << n.binders[i];
            }
            os << ")";
          }
          os << " = " << n.fn;
          if (!n.lft_args.empty()) {
            os << "<";
            for (std::size_t i = 0; i < n.lft_args.size(); ++i) {
              if (i) os << ", ";
              os << n.lft_args[i];
            }
            os << ">";
          }
          os << "(";
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) os << ", ";
            os << n.args[i];
          }
          os << ") in\n";
          indent_to(os, ind);
          print_expr(os, *n.body, ind);
        } else if constexpr (std::is_same_v<T, SAliasAssume>) {
          os << "alias(" << n.x << " = " << n.y << ")";
          if (n.annot) {
            os << " as " << n.annot->first.str() << ", " << n.annot->second.str();
          }
          os << ";\n";
          indent_to(os, ind);
          print_expr(os, *n.cont, ind);
        } else if constexpr (std::is_same_v<T, SNewLft>) {
          os << "newlft " << n.lft << " in\n";
          indent_to(os, ind);
          print_expr(os, *n.body, ind);
        } else if constexpr (std::is_same_v<T, SEndLft>) {
          os << "endlft " << n.lft << ";\n";
          indent_to(os, ind);
          print_expr(os, *n.cont, ind);
        } else if constexpr (std::is_same_v<T, SFail>) {
          os << "fail";
        }
      },
      e.node);
}

}  // namespace

std::string pretty_expr(const SourceExpr& e, int indent) {
  std::ostringstream os;
  print_expr(os, e, indent);
  return os.str();
}

std::string pretty_arith(const Arith& a) {
  std::ostringstream os;
  print_arith(os, a, 0);
  return os.str();
}

std::string pretty_signature(const FunDef& def) {
  std::ostringstream os;
  os << "fn " << def.name;
  if (!def.sig.lft_params.empty()) {
    os << "<";
    for (std::size_t i = 0; i < def.sig.lft_params.size(); ++i) {
      if (i) os << ", ";
      os << def.sig.lft_params[i];
    }
    const auto& pairs = def.sig.order.pairs();
    if (!pairs.empty()) {
      os << " | ";
      bool first = true;
      for (const auto& [a, b] : pairs) {
        if (!first) os << ", ";
        os << a << " < " << b;
        first = false;
      }
    }
    os << ">";
  }
  os << "(";
  for (std::size_t i = 0; i < def.param_names.size(); ++i) {
    if (i) os << ", ";
    os << def.param_names[i] << ": " << def.sig.params[i].str();
  }
  os << ") -> (";
  for (std::size_t i = 0; i < def.sig.posts.size(); ++i) {
    if (i) os << ", ";
    os << def.sig.posts[i].str();
  }
  os << " | ";
  for (std::size_t i = 0; i < def.sig.rets.size(); ++i) {
    if (i) os << ", ";
    os << def.sig.rets[i].str();
  }
  os << ")";
  return os.str();
}

std::string pretty_program(const Program& p) {
  std::ostringstream os;
  for (const auto& f : p.fns) {
    os << pretty_signature(f) << " {\n  ";
    print_expr(os, *f.body, 2);
    os << "\n}\n\n";
  }
  print_expr(os, *p.main_e, 0);
  os << "\n";
  return os.str();
}

}  // namespace bfo
