#include "bfo/ast.hpp"

#include <map>
#include <set>

namespace bfo {

Arith Arith::clone() const {
  Arith a;
  a.op = op;
  a.n = n;
  a.var = var;
  if (lhs) a.lhs = std::make_unique<Arith>(lhs->clone());
  if (rhs) a.rhs = std::make_unique<Arith>(rhs->clone());
  return a;
}

void Arith::free_vars(std::vector<std::string>& out) const {
  switch (op) {
    case Op::Const:
      return;
    case Op::Var:
      out.push_back(var);
      return;
    default:
      lhs->free_vars(out);
      rhs->free_vars(out);
  }
}

const FunDef* Program::find_fn(const std::string& name) const {
  for (const auto& f : fns) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

namespace {

/// Walks binders, renaming any name that has already been bound elsewhere in
/// the same function (each function body and main form their own namespace,
/// so surface names survive into environment dumps). References are renamed
/// via a scoped substitution.
class AlphaRenamer {
 public:
  void run(Program& p) {
    for (auto& f : p.fns) {
      scope_.clear();
      used_.clear();
      for (auto& x : f.param_names) {
        x = fresh_binder(x);
      }
      walk(*f.body);
    }
    scope_.clear();
    used_.clear();
    walk(*p.main_e);
  }

 private:
  std::set<std::string> used_;
  std::map<std::string, std::vector<std::string>> scope_;

  std::string fresh_binder(const std::string& name) {
    std::string chosen = name;
    int i = 2;
    while (used_.count(chosen)) {
      chosen = name + "_" + std::to_string(i++);
    }
    used_.insert(chosen);
    scope_[name].push_back(chosen);
    return chosen;
  }

  void pop_binder(const std::string& original) { scope_[original].pop_back(); }

  std::string resolve(const std::string& name) const {
    auto it = scope_.find(name);
    if (it == scope_.end() || it->second.empty()) return name;
    return it->second.back();
  }

  void rename_arith(Arith& a) {
    if (a.op == Arith::Op::Var) {
      a.var = resolve(a.var);
    } else if (a.lhs) {
      rename_arith(*a.lhs);
      rename_arith(*a.rhs);
    }
  }

  void walk(SourceExpr& e) {
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, SVar>) {
            for (auto& x : n.names) x = resolve(x);
          } else if constexpr (std::is_same_v<T, SLetArith>) {
            rename_arith(n.value);
            std::string orig = n.x;
            n.x = fresh_binder(orig);
            walk(*n.body);
            pop_binder(orig);
          } else if constexpr (std::is_same_v<T, SLetHavoc>) {
            std::string orig = n.x;
            n.x = fresh_binder(orig);
            walk(*n.body);
            pop_binder(orig);
          } else if constexpr (std::is_same_v<T, SLetAlias>) {
            n.y = resolve(n.y);
            std::string orig = n.x;
            n.x = fresh_binder(orig);
            walk(*n.body);
            pop_binder(orig);
          } else if constexpr (std::is_same_v<T, SLetMkRef>) {
            n.y = resolve(n.y);
            std::string orig = n.x;
            n.x = fresh_binder(orig);
            walk(*n.body);
            pop_binder(orig);
          } else if constexpr (std::is_same_v<T, SLetDeref>) {
            n.y = resolve(n.y);
            std::string orig = n.x;
            n.x = fresh_binder(orig);
            walk(*n.body);
            pop_binder(orig);
          } else if constexpr (std::is_same_v<T, SAssign>) {
            n.x = resolve(n.x);
            n.y = resolve(n.y);
            walk(*n.cont);
          } else if constexpr (std::is_same_v<T, SIfZ>) {
            n.x = resolve(n.x);
            walk(*n.then_e);
            walk(*n.else_e);
          } else if constexpr (std::is_same_v<T, SLetCall>) {
            for (auto& a : n.args) a = resolve(a);
            std::vector<std::string> origs = n.binders;
            for (auto& b : n.binders) b = fresh_binder(b);
            walk(*n.body);
            for (auto it = origs.rbegin(); it != origs.rend(); ++it) pop_binder(*it);
          } else if constexpr (std::is_same_v<T, SAliasAssume>) {
            n.x = resolve(n.x);
            n.y = resolve(n.y);
            walk(*n.cont);
          } else if constexpr (std::is_same_v<T, SNewLft>) {
            walk(*n.body);
          } else if constexpr (std::is_same_v<T, SEndLft>) {
            walk(*n.cont);
          } else if constexpr (std::is_same_v<T, SFail>) {
            // leaf
          }
        },
        e.node);
  }
};

void assign_ids_in(SourceExpr& e, int& next) {
  e.id = next++;
  std::visit(
      [&](auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SLetArith> || std::is_same_v<T, SLetHavoc> ||
                      std::is_same_v<T, SLetAlias> || std::is_same_v<T, SLetMkRef> ||
                      std::is_same_v<T, SLetDeref> || std::is_same_v<T, SLetCall> ||
                      std::is_same_v<T, SNewLft>) {
          assign_ids_in(*n.body, next);
        } else if constexpr (std::is_same_v<T, SAssign> ||
                             std::is_same_v<T, SAliasAssume> ||
                             std::is_same_v<T, SEndLft>) {
          assign_ids_in(*n.cont, next);
        } else if constexpr (std::is_same_v<T, SIfZ>) {
          assign_ids_in(*n.then_e, next);
          assign_ids_in(*n.else_e, next);
        }
      },
      e.node);
}

ExprPtr clone_expr(const SourceExpr& e) {
  auto out = std::make_unique<SourceExpr>();
  out->id = e.id;
  out->loc = e.loc;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SVar>) {
          out->node = SVar{n.names};
        } else if constexpr (std::is_same_v<T, SLetArith>) {
          out->node = SLetArith{n.x, n.value.clone(), clone_expr(*n.body)};
        } else if constexpr (std::is_same_v<T, SLetHavoc>) {
          out->node = SLetHavoc{n.x, clone_expr(*n.body)};
        } else if constexpr (std::is_same_v<T, SLetAlias>) {
          out->node = SLetAlias{n.x, n.y, n.annot, clone_expr(*n.body)};
        } else if constexpr (std::is_same_v<T, SLetMkRef>) {
          out->node = SLetMkRef{n.x, n.y, n.at_lft, clone_expr(*n.body)};
        } else if constexpr (std::is_same_v<T, SLetDeref>) {
          out->node = SLetDeref{n.x, n.y, clone_expr(*n.body)};
        } else if constexpr (std::is_same_v<T, SAssign>) {
          out->node = SAssign{n.x, n.y, clone_expr(*n.cont)};
        } else if constexpr (std::is_same_v<T, SIfZ>) {
          out->node = SIfZ{n.x, clone_expr(*n.then_e), clone_expr(*n.else_e)};
        } else if constexpr (std::is_same_v<T, SLetCall>) {
          out->node = SLetCall{n.binders, n.fn, n.lft_args, n.args,
                               clone_expr(*n.body)};
        } else if constexpr (std::is_same_v<T, SAliasAssume>) {
          out->node = SAliasAssume{n.x, n.y, n.annot, clone_expr(*n.cont)};
        } else if constexpr (std::is_same_v<T, SNewLft>) {
          out->node = SNewLft{n.lft, clone_expr(*n.body)};
        } else if constexpr (std::is_same_v<T, SEndLft>) {
          out->node = SEndLft{n.lft, clone_expr(*n.cont)};
        } else if constexpr (std::is_same_v<T, SFail>) {
          out->node = SFail{};
        }
      },
      e.node);
  return out;
}

}  // namespace

Program clone_program(const Program& p) {
  Program out;
  for (const auto& f : p.fns) {
    out.fns.push_back(FunDef{f.name, f.param_names, f.sig, clone_expr(*f.body), f.loc});
  }
  out.main_e = clone_expr(*p.main_e);
  out.node_count = p.node_count;
  return out;
}

void alpha_rename(Program& p) {
  AlphaRenamer r;
  r.run(p);
}

void assign_ids(Program& p) {
  int next = 0;
  for (auto& f : p.fns) assign_ids_in(*f.body, next);
  assign_ids_in(*p.main_e, next);
  p.node_count = next;
}

void for_each_expr(const SourceExpr& e,
                   const std::function<void(const SourceExpr&)>& f) {
  f(e);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SLetArith> || std::is_same_v<T, SLetHavoc> ||
                      std::is_same_v<T, SLetAlias> || std::is_same_v<T, SLetMkRef> ||
                      std::is_same_v<T, SLetDeref> || std::is_same_v<T, SLetCall> ||
                      std::is_same_v<T, SNewLft>) {
          for_each_expr(*n.body, f);
        } else if constexpr (std::is_same_v<T, SAssign> ||
                             std::is_same_v<T, SAliasAssume> ||
                             std::is_same_v<T, SEndLft>) {
          for_each_expr(*n.cont, f);
        } else if constexpr (std::is_same_v<T, SIfZ>) {
          for_each_expr(*n.then_e, f);
          for_each_expr(*n.else_e, f);
        }
      },
      e.node);
}

}  // namespace bfo
