#include "bfo/checker.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <sstream>

namespace bfo {

const char* TypeError::code_str() const {
  switch (code) {
    case Code::OwnershipInsufficient: return "ownership-insufficient";
    case Code::SplitUnderivable: return "split-underivable";
    case Code::LifetimeNotMinimal: return "lifetime-not-minimal";
    case Code::LifetimeOrderViolation: return "lifetime-order-violation";
    case Code::UnknownFunction: return "unknown-function";
    case Code::ArityMismatch: return "arity-mismatch";
    case Code::CallOrderNotEntailed: return "call-order-not-entailed";
    case Code::ScopeEscape: return "scope-escape";
    case Code::BranchEnvMismatch: return "branch-env-mismatch";
    case Code::PostEnvMismatch: return "post-env-mismatch";
    case Code::UnknownVariable: return "unknown-variable";
    case Code::KindMismatch: return "kind-mismatch";
    case Code::DuplicateName: return "duplicate-name";
  }
  return "unknown";
}

std::string TypeError::render() const {
  std::ostringstream os;
  os << loc.line << ":" << loc.col << ": error[" << code_str() << "]: "
     << message;
  return os.str();
}

namespace {

struct CheckFail {
  TypeError err;
};

[[noreturn]] void fail(TypeError::Code code, SourceLoc loc, std::string msg) {
  throw CheckFail{TypeError{code, std::move(msg), loc}};
}

std::string q(const std::string& name) { return "'" + name + "'"; }

class Checker {
 public:
  Checker(Program p, const CheckOptions& opts)
      : opts_(opts), result_{std::move(p), {}, {}, {}, {}, {}} {
    result_.nodes.resize(static_cast<std::size_t>(result_.program.node_count));
  }

  Expected<TypedProgram, TypeError> run() {
    try {
      collect_signatures();
      for (const auto& f : result_.program.fns) check_fundef(f);
      check_main();
    } catch (CheckFail& cf) {
      return cf.err;
    }
    return std::move(result_);
  }

 private:
  /// What every tail of the current body must deliver.
  struct Contract {
    bool is_main = true;
    const FunDef* def = nullptr;
    std::vector<OwnType> rets;
    LifetimeEnv initial_l;
  };

  CheckOptions opts_;
  TypedProgram result_;
  Contract contract_;

  // --- signature handling -------------------------------------------------

  void collect_signatures() {
    for (const auto& f : result_.program.fns) {
      if (result_.fn_types.count(f.name)) {
        fail(TypeError::Code::DuplicateName, f.loc,
             "function " + q(f.name) + " is defined twice");
      }
      validate_signature(f);
      result_.fn_types.emplace(f.name, f.sig);
      TypedFn tf;
      tf.name = f.name;
      for (std::size_t i = 0; i < f.sig.params.size(); ++i) {
        if (f.sig.params[i].is_ref()) tf.ref_params.push_back(f.param_names[i]);
      }
      result_.fns.emplace(f.name, std::move(tf));
    }
  }

  /// Builds the lifetime environment a signature declares: its lifetime
  /// parameters plus the required order.
  static LifetimeEnv signature_lifetimes(const FnType& sig) {
    LifetimeEnv l;
    for (const auto& a : sig.lft_params) l.add(a);
    for (const auto& [a, b] : sig.order.pairs()) l.add_order(a, b);
    return l;
  }

  void validate_signature(const FunDef& f) {
    const FnType& sig = f.sig;
    std::set<std::string> lps(sig.lft_params.begin(), sig.lft_params.end());
    if (lps.size() != sig.lft_params.size()) {
      fail(TypeError::Code::DuplicateName, f.loc,
           "duplicate lifetime parameter in " + q(f.name));
    }
    for (const auto& a : sig.order.vars()) {
      if (!lps.count(a)) {
        fail(TypeError::Code::ScopeEscape, f.loc,
             "signature of " + q(f.name) + " orders lifetime " + q(a) +
                 ", which is not a lifetime parameter");
      }
    }
    std::set<std::string> pnames(f.param_names.begin(), f.param_names.end());
    if (pnames.size() != f.param_names.size()) {
      fail(TypeError::Code::DuplicateName, f.loc,
           "duplicate parameter name in " + q(f.name));
    }
    if (sig.params.size() != f.param_names.size() ||
        sig.posts.size() != sig.params.size()) {
      fail(TypeError::Code::ArityMismatch, f.loc,
           "signature of " + q(f.name) +
               " must declare one post-call type per parameter");
    }
    LifetimeEnv l = signature_lifetimes(sig);
    auto check_sig_type = [&](const OwnType& t, const char* role) {
      if (t.is_int()) return;
      if (!lps.count(t.lft)) {
        fail(TypeError::Code::ScopeEscape, f.loc,
             std::string(role) + " type of " + q(f.name) +
                 " mentions lifetime " + q(t.lft) +
                 ", which is not a lifetime parameter");
      }
      if (t.borrow && !lps.count(t.borrow->lft)) {
        fail(TypeError::Code::ScopeEscape, f.loc,
             std::string(role) + " type of " + q(f.name) +
                 " lends to lifetime " + q(t.borrow->lft) +
                 ", which is not a lifetime parameter");
      }
      if (!well_formed(l, t)) {
        fail(TypeError::Code::LifetimeOrderViolation, f.loc,
             std::string(role) + " type " + t.str() + " of " + q(f.name) +
                 " is not well-formed under the declared order " + l.str());
      }
    };
    for (const auto& t : sig.params) check_sig_type(t, "parameter");
    for (const auto& t : sig.posts) check_sig_type(t, "post-call");
    for (const auto& t : sig.rets) check_sig_type(t, "return");
  }

  // --- shared helpers -----------------------------------------------------

  NodeInfo& record(const SourceExpr& e, const LifetimeEnv& l, const TypeEnv& g) {
    NodeInfo& info = result_.nodes[static_cast<std::size_t>(e.id)];
    info.loc = e.loc;
    info.lft_in = l;
    info.env_in = g;
    return info;
  }

  void log_line(int line, const TypeEnv& g) {
    result_.env_log.emplace_back(line, g);
  }

  const OwnType& lookup(const TypeEnv& g, const std::string& x, SourceLoc loc) {
    const OwnType* t = g.find(x);
    if (!t) {
      fail(TypeError::Code::UnknownVariable, loc, "unknown variable " + q(x));
    }
    return *t;
  }

  const OwnType& lookup_int(const TypeEnv& g, const std::string& x,
                            SourceLoc loc, const char* use) {
    const OwnType& t = lookup(g, x, loc);
    if (!t.is_int()) {
      fail(TypeError::Code::KindMismatch, loc,
           q(x) + " is a reference but " + use +
               " needs an integer (dereference it first)");
    }
    return t;
  }

  const OwnType& lookup_ref(const TypeEnv& g, const std::string& x,
                            SourceLoc loc, const char* use) {
    const OwnType& t = lookup(g, x, loc);
    if (!t.is_ref()) {
      fail(TypeError::Code::KindMismatch, loc,
           q(x) + " is an integer but " + use + " needs a reference");
    }
    return t;
  }

  void check_arith_operands(const Arith& a, const TypeEnv& g, SourceLoc loc) {
    std::vector<std::string> vars;
    a.free_vars(vars);
    for (const auto& v : vars) lookup_int(g, v, loc, "arithmetic");
  }

  void bind(TypeEnv& g, const std::string& x, OwnType t, SourceLoc loc) {
    if (g.contains(x)) {
      fail(TypeError::Code::DuplicateName, loc,
           q(x) + " is already bound in this scope");
    }
    g.set(x, std::move(t));
  }

  /// Checks well-formedness of a computed type. Lifetime-order violations are
  /// fatal by default and downgraded to warnings under lax checking; dead
  /// lifetimes are always fatal.
  void require_wf(const LifetimeEnv& l, const OwnType& t, SourceLoc loc,
                  const std::string& who) {
    if (well_formed(l, t)) return;
    if (t.is_ref() && !l.contains(t.lft)) {
      fail(TypeError::Code::LifetimeOrderViolation, loc,
           q(who) + ": lifetime " + q(t.lft) + " is not live");
    }
    if (t.borrow && !l.contains(t.borrow->lft)) {
      fail(TypeError::Code::LifetimeOrderViolation, loc,
           q(who) + ": lifetime " + q(t.borrow->lft) + " is not live");
    }
    if (t.borrow) {
      std::string msg = q(who) + ": a reference at lifetime " + q(t.lft) +
                        " cannot lend to " + q(t.borrow->lft) + " because " +
                        q(t.borrow->lft) + " does not end first";
      if (opts_.lax) {
        std::ostringstream os;
        os << loc.line << ":" << loc.col << ": warning: " << msg;
        result_.warnings.push_back(os.str());
        return;
      }
      fail(TypeError::Code::LifetimeOrderViolation, loc, msg);
    }
    fail(TypeError::Code::LifetimeOrderViolation, loc,
         q(who) + ": type " + t.str() + " is not well-formed");
  }

  void note(SourceLoc loc, const std::string& msg) {
    std::ostringstream os;
    os << loc.line << ":" << loc.col << ": note: " << msg;
    result_.warnings.push_back(os.str());
  }

  /// The lifetime mkref defaults to: the most recently created minimal one.
  std::string innermost_lifetime(const LifetimeEnv& l, SourceLoc loc) {
    const auto& vars = l.vars();
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
      if (l.is_minimal(*it)) return *it;
    }
    fail(TypeError::Code::LifetimeOrderViolation, loc,
         "no live lifetime to place the new reference at (use newlft, or "
         "mkref ... at <lft>)");
  }

  // --- function bodies ----------------------------------------------------

  void check_fundef(const FunDef& f) {
    LifetimeEnv l = signature_lifetimes(f.sig);
    TypeEnv g;
    for (std::size_t i = 0; i < f.param_names.size(); ++i) {
      g.set(f.param_names[i], f.sig.params[i]);
    }
    contract_ = Contract{false, &f, f.sig.rets, l};
    check_expr(*f.body, l, g, 0);
  }

  void check_main() {
    contract_ = Contract{true, nullptr, {OwnType::make_int()}, LifetimeEnv{}};
    check_expr(*result_.program.main_e, LifetimeEnv{}, TypeEnv{}, 0);
  }

  // --- expression checking ------------------------------------------------

  void check_expr(const SourceExpr& e, LifetimeEnv l, TypeEnv g, int depth) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, SVar>) {
            check_tail(e, n, l, g, depth);
          } else if constexpr (std::is_same_v<T, SLetArith>) {
            record(e, l, g);
            check_arith_operands(n.value, g, e.loc);
            bind(g, n.x, OwnType::make_int(), e.loc);
            log_line(e.loc.line, g);
            check_expr(*n.body, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SLetHavoc>) {
            record(e, l, g);
            bind(g, n.x, OwnType::make_int(), e.loc);
            log_line(e.loc.line, g);
            check_expr(*n.body, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SLetAlias>) {
            check_let_alias(e, n, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SLetMkRef>) {
            record(e, l, g);
            lookup_int(g, n.y, e.loc, "mkref");
            std::string lft =
                n.at_lft ? *n.at_lft : innermost_lifetime(l, e.loc);
            if (!l.contains(lft)) {
              fail(TypeError::Code::LifetimeOrderViolation, e.loc,
                   "lifetime " + q(lft) + " is not live");
            }
            bind(g, n.x, OwnType::make_ref(lft, Rational(1)), e.loc);
            log_line(e.loc.line, g);
            check_expr(*n.body, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SLetDeref>) {
            NodeInfo& info = record(e, l, g);
            const OwnType& ty = lookup_ref(g, n.y, e.loc, "dereference");
            info.deref_own_positive = ty.own > Rational(0);
            bind(g, n.x, OwnType::make_int(), e.loc);
            log_line(e.loc.line, g);
            check_expr(*n.body, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SAssign>) {
            record(e, l, g);
            const OwnType& tx = lookup_ref(g, n.x, e.loc, "assignment");
            if (tx.own != Rational(1)) {
              fail(TypeError::Code::OwnershipInsufficient, e.loc,
                   "assignment through " + q(n.x) +
                       " requires full ownership; " + q(n.x) + " has " +
                       tx.own.str());
            }
            lookup_int(g, n.y, e.loc, "assignment");
            log_line(e.loc.line, g);
            check_expr(*n.cont, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SIfZ>) {
            record(e, l, g);
            lookup_int(g, n.x, e.loc, "the branch condition");
            check_expr(*n.then_e, l, g, depth + 1);
            check_expr(*n.else_e, std::move(l), std::move(g), depth + 1);
          } else if constexpr (std::is_same_v<T, SLetCall>) {
            check_let_call(e, n, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SAliasAssume>) {
            check_alias_assume(e, n, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SNewLft>) {
            record(e, l, g);
            if (l.contains(n.lft)) {
              fail(TypeError::Code::DuplicateName, e.loc,
                   "lifetime " + q(n.lft) + " is already live");
            }
            l.push_below_all(n.lft);
            log_line(e.loc.line, g);
            check_expr(*n.body, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SEndLft>) {
            check_endlft(e, n, std::move(l), std::move(g), depth);
          } else if constexpr (std::is_same_v<T, SFail>) {
            record(e, l, g);
            // fail admits any outcome: the path imposes no contract.
          }
        },
        e.node);
  }

  void check_let_alias(const SourceExpr& e, const SLetAlias& n, LifetimeEnv l,
                       TypeEnv g, int depth) {
    NodeInfo& info = record(e, l, g);
    const OwnType ty = lookup(g, n.y, e.loc);

    if (ty.is_int()) {
      if (n.annot.kind == SplitAnnot::Kind::Borrow ||
          (n.annot.kind == SplitAnnot::Kind::As && !n.annot.type->is_int())) {
        fail(TypeError::Code::SplitUnderivable, e.loc,
             "cannot split integer " + q(n.y) + " into a reference");
      }
      bind(g, n.x, OwnType::make_int(), e.loc);
      log_line(e.loc.line, g);
      check_expr(*n.body, std::move(l), std::move(g), depth);
      return;
    }

    OwnType x_type, y_rest;
    switch (n.annot.kind) {
      case SplitAnnot::Kind::Default:
        // Full transfer: the binder takes everything, the source keeps an
        // ownerless alias at the same lifetime.
        x_type = ty;
        y_rest = OwnType::make_ref(ty.lft, Rational(0));
        break;
      case SplitAnnot::Kind::Borrow: {
        if (!l.contains(n.annot.borrow_lft)) {
          fail(TypeError::Code::LifetimeOrderViolation, e.loc,
               "lifetime " + q(n.annot.borrow_lft) + " is not live");
        }
        x_type = OwnType::make_ref(n.annot.borrow_lft, ty.own);
        auto rest = split_type(ty, x_type);
        if (!rest.ok()) {
          fail(TypeError::Code::SplitUnderivable, e.loc,
               "cannot borrow " + q(n.y) + " at lifetime " +
                   q(n.annot.borrow_lft) + ": " + rest.error().reason);
        }
        y_rest = rest.value();
        break;
      }
      case SplitAnnot::Kind::As: {
        x_type = *n.annot.type;
        if (x_type.is_ref() && !l.contains(x_type.lft)) {
          fail(TypeError::Code::LifetimeOrderViolation, e.loc,
               "lifetime " + q(x_type.lft) + " is not live");
        }
        if (x_type.borrow && !l.contains(x_type.borrow->lft)) {
          fail(TypeError::Code::LifetimeOrderViolation, e.loc,
               "lifetime " + q(x_type.borrow->lft) + " is not live");
        }
        auto rest = split_type(ty, x_type);
        if (!rest.ok()) {
          fail(TypeError::Code::SplitUnderivable, e.loc,
               "cannot take " + x_type.str() + " out of " + q(n.y) + ": " +
                   ty.str() + ": " + rest.error().reason);
        }
        y_rest = rest.value();
        break;
      }
    }

    require_wf(l, x_type, e.loc, n.x);
    require_wf(l, y_rest, e.loc, n.y);
    info.split = SplitChoice{ty, x_type, y_rest};
    g.set(n.y, y_rest);
    bind(g, n.x, x_type, e.loc);
    log_line(e.loc.line, g);
    check_expr(*n.body, std::move(l), std::move(g), depth);
  }

  void check_alias_assume(const SourceExpr& e, const SAliasAssume& n,
                          LifetimeEnv l, TypeEnv g, int depth) {
    NodeInfo& info = record(e, l, g);
    const OwnType tx = lookup_ref(g, n.x, e.loc, "alias");
    const OwnType ty = lookup_ref(g, n.y, e.loc, "alias");

    auto sum = add_types(tx, ty);
    if (!sum.ok()) {
      fail(TypeError::Code::SplitUnderivable, e.loc,
           "cannot recombine " + q(n.x) + ": " + tx.str() + " and " + q(n.y) +
               ": " + ty.str() + ": " + sum.error().reason);
    }
    if (sum->ambiguous) {
      note(e.loc, "alias(" + n.x + " = " + n.y +
                      ") also matches the borrow-return rule; resolved as "
                      "sharing");
    }
    bool cross = tx.lft != ty.lft;
    if (cross) {
      note(e.loc, "alias(" + n.x + " = " + n.y +
                      ") merges across lifetimes " + q(tx.lft) + " and " +
                      q(ty.lft));
    }

    OwnType rx, ry;
    if (n.annot) {
      rx = n.annot->first;
      ry = n.annot->second;
      auto rsum = add_types(rx, ry);
      if (!rsum.ok()) {
        fail(TypeError::Code::SplitUnderivable, e.loc,
             "annotated redistribution does not add up: " + rx.str() + " + " +
                 ry.str() + ": " + rsum.error().reason);
      }
      if (rsum->type != sum->type) {
        fail(TypeError::Code::SplitUnderivable, e.loc,
             "annotated redistribution changes the combined type: " +
                 rsum->type.str() + " != " + sum->type.str());
      }
    } else if (!cross) {
      const OwnType& whole = sum->type;
      std::optional<Borrow> half_borrow;
      if (whole.borrow) {
        half_borrow = Borrow{whole.borrow->lft, whole.borrow->amount / Rational(2)};
      }
      rx = OwnType::make_ref(whole.lft, whole.own / Rational(2), half_borrow);
      ry = rx;
    } else {
      fail(TypeError::Code::SplitUnderivable, e.loc,
           "alias(" + n.x + " = " + n.y +
               ") across lifetimes needs an explicit redistribution "
               "annotation (as <type>, <type>)");
    }

    require_wf(l, rx, e.loc, n.x);
    require_wf(l, ry, e.loc, n.y);
    info.alias = AliasChoice{tx, ty, rx, ry, cross};
    g.set(n.x, rx);
    g.set(n.y, ry);
    log_line(e.loc.line, g);
    check_expr(*n.cont, std::move(l), std::move(g), depth);
  }

  void check_endlft(const SourceExpr& e, const SEndLft& n, LifetimeEnv l,
                    TypeEnv g, int depth) {
    NodeInfo& info = record(e, l, g);
    if (contract_.def) {
      const auto& lps = contract_.def->sig.lft_params;
      if (std::find(lps.begin(), lps.end(), n.lft) != lps.end()) {
        fail(TypeError::Code::ScopeEscape, e.loc,
             "cannot end lifetime parameter " + q(n.lft) + " inside " +
                 q(contract_.def->name));
      }
    }
    std::vector<std::pair<std::string, OwnType>> drops;
    for (const auto& [name, t] : g.entries()) {
      if (t.is_ref() && t.lft == n.lft) drops.emplace_back(name, t);
    }
    auto ended = end_lifetime(l, g, n.lft);
    if (!ended.ok()) {
      if (ended.error().kind == LftError::Kind::Unknown) {
        fail(TypeError::Code::LifetimeOrderViolation, e.loc,
             "lifetime " + q(n.lft) + " is not live");
      }
      std::string below;
      for (const auto& a : l.vars()) {
        if (l.less(a, n.lft)) {
          below = a;
          break;
        }
      }
      fail(TypeError::Code::LifetimeNotMinimal, e.loc,
           "cannot end " + q(n.lft) + ": lifetime " + q(below) +
               " is still live below it");
    }
    info.endlft_drops = std::move(drops);
    l = ended->first;
    g = ended->second;
    log_line(e.loc.line, g);
    check_expr(*n.cont, std::move(l), std::move(g), depth);
  }

  void check_let_call(const SourceExpr& e, const SLetCall& n, LifetimeEnv l,
                      TypeEnv g, int depth) {
    NodeInfo& info = record(e, l, g);
    auto sig_it = result_.fn_types.find(n.fn);
    if (sig_it == result_.fn_types.end()) {
      fail(TypeError::Code::UnknownFunction, e.loc,
           "unknown function " + q(n.fn));
    }
    const FnType& sig = sig_it->second;

    if (n.lft_args.size() != sig.lft_params.size()) {
      fail(TypeError::Code::ArityMismatch, e.loc,
           q(n.fn) + " takes " + std::to_string(sig.lft_params.size()) +
               " lifetime arguments, got " + std::to_string(n.lft_args.size()));
    }
    if (n.args.size() != sig.params.size()) {
      fail(TypeError::Code::ArityMismatch, e.loc,
           q(n.fn) + " takes " + std::to_string(sig.params.size()) +
               " arguments, got " + std::to_string(n.args.size()));
    }
    if (n.binders.size() != sig.rets.size()) {
      fail(TypeError::Code::ArityMismatch, e.loc,
           q(n.fn) + " returns " + std::to_string(sig.rets.size()) +
               " values, bound here to " + std::to_string(n.binders.size()));
    }

    std::map<std::string, std::string> sm;
    for (std::size_t i = 0; i < n.lft_args.size(); ++i) {
      if (!l.contains(n.lft_args[i])) {
        fail(TypeError::Code::LifetimeOrderViolation, e.loc,
             "lifetime " + q(n.lft_args[i]) + " is not live");
      }
      sm[sig.lft_params[i]] = n.lft_args[i];
    }
    for (const auto& [a, b] : sig.order.pairs()) {
      if (!l.less(sm.at(a), sm.at(b))) {
        fail(TypeError::Code::CallOrderNotEntailed, e.loc,
             "call to " + q(n.fn) + " requires " + q(sm.at(a)) +
                 " to end before " + q(sm.at(b)) +
                 ", which the live order does not entail");
      }
    }

    auto subst = [&](const OwnType& t) {
      if (t.is_int()) return t;
      std::optional<Borrow> b;
      if (t.borrow) b = Borrow{sm.at(t.borrow->lft), t.borrow->amount};
      return OwnType::make_ref(sm.at(t.lft), t.own, b);
    };

    CallEvidence ev;
    for (const auto& t : sig.params) ev.params.push_back(subst(t));
    for (const auto& t : sig.posts) ev.posts.push_back(subst(t));
    for (const auto& t : sig.rets) ev.rets.push_back(subst(t));
    for (std::size_t i = 0; i < sig.params.size(); ++i) {
      if (sig.params[i].is_ref()) ev.ref_args.push_back(static_cast<int>(i));
    }

    std::set<std::string> seen_ref_args;
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      const OwnType& got = lookup(g, n.args[i], e.loc);
      const OwnType& want = ev.params[i];
      if (want.is_ref() && !seen_ref_args.insert(n.args[i]).second) {
        fail(TypeError::Code::DuplicateName, e.loc,
             "reference " + q(n.args[i]) + " is passed to " + q(n.fn) +
                 " twice");
      }
      if (got != want) {
        if (got.is_ref() && want.is_ref() && got.lft == want.lft) {
          fail(TypeError::Code::OwnershipInsufficient, e.loc,
               "argument " + q(n.args[i]) + " of " + q(n.fn) + " must be " +
                   want.str() + ", got " + got.str());
        }
        fail(TypeError::Code::KindMismatch, e.loc,
             "argument " + q(n.args[i]) + " of " + q(n.fn) + " must be " +
                 want.str() + ", got " + got.str());
      }
    }

    for (std::size_t i = 0; i < n.args.size(); ++i) {
      require_wf(l, ev.posts[i], e.loc, n.args[i]);
      if (ev.params[i].is_ref()) g.set(n.args[i], ev.posts[i]);
    }
    for (std::size_t i = 0; i < n.binders.size(); ++i) {
      require_wf(l, ev.rets[i], e.loc, n.binders[i]);
      bind(g, n.binders[i], ev.rets[i], e.loc);
    }

    info.call = std::move(ev);
    log_line(e.loc.line, g);
    check_expr(*n.body, std::move(l), std::move(g), depth);
  }

  // --- tails --------------------------------------------------------------

  void check_tail(const SourceExpr& e, const SVar& n, const LifetimeEnv& l,
                  const TypeEnv& g, int depth) {
    NodeInfo& info = record(e, l, g);
    const std::vector<OwnType>& rets = contract_.rets;
    const FunDef* def = contract_.def;

    if (n.names.size() != rets.size()) {
      fail(TypeError::Code::ArityMismatch, e.loc,
           (def ? q(def->name) : std::string("main")) + " returns " +
               std::to_string(rets.size()) + " value(s), this exit provides " +
               std::to_string(n.names.size()));
    }

    TailEvidence ev;
    std::set<std::string> returned_refs;
    std::set<std::string> returned;

    auto param_index = [&](const std::string& x) -> int {
      if (!def) return -1;
      for (std::size_t i = 0; i < def->param_names.size(); ++i) {
        if (def->param_names[i] == x) return static_cast<int>(i);
      }
      return -1;
    };

    for (std::size_t i = 0; i < n.names.size(); ++i) {
      const std::string& name = n.names[i];
      const OwnType& t = lookup(g, name, e.loc);
      const OwnType& want = rets[i];
      ReturnSlot slot;
      slot.name = name;
      slot.ret_type = want;
      slot.source_before = t;
      if (want.is_int()) {
        if (!t.is_int()) {
          fail(TypeError::Code::KindMismatch, e.loc,
               "return value " + std::to_string(i + 1) + " (" + q(name) +
                   ") must be an integer, got " + t.str());
        }
        slot.kind = ReturnKind::IntValue;
      } else {
        if (!t.is_ref()) {
          fail(TypeError::Code::KindMismatch, e.loc,
               "return value " + std::to_string(i + 1) + " (" + q(name) +
                   ") must be " + want.str() + ", got int");
        }
        if (!returned_refs.insert(name).second) {
          fail(TypeError::Code::DuplicateName, e.loc,
               "reference " + q(name) + " is returned twice");
        }
        int pi = param_index(name);
        if (pi >= 0) {
          const OwnType& post = def->sig.posts[static_cast<std::size_t>(pi)];
          auto sum = add_types(want, post);
          if (!sum.ok() || sum->type != t) {
            fail(TypeError::Code::PostEnvMismatch, e.loc,
                 "returning " + q(name) + " as " + want.str() +
                     " while keeping its post-call type " + post.str() +
                     " needs incoming type " +
                     (sum.ok() ? sum->type.str() : std::string("(undefined)")) +
                     "; " + q(name) + " has " + t.str());
          }
          slot.kind = ReturnKind::SplitReturn;
          slot.source_after = post;
        } else {
          if (t != want) {
            fail(TypeError::Code::PostEnvMismatch, e.loc,
                 "return value " + std::to_string(i + 1) + " (" + q(name) +
                     ") must be " + want.str() + ", got " + t.str());
          }
          slot.kind = ReturnKind::DirectMove;
        }
      }
      returned.insert(name);
      ev.slots.push_back(std::move(slot));
    }

    // Kept parameters weaken silently to their declared post-call types; the
    // discarded difference is frozen as a residue for the dynamic audit.
    if (def) {
      for (std::size_t i = 0; i < def->param_names.size(); ++i) {
        const std::string& p = def->param_names[i];
        if (returned.count(p)) continue;  // handled as SplitReturn above
        const OwnType& t = lookup(g, p, e.loc);
        const OwnType& post = def->sig.posts[i];
        if (t == post) continue;
        auto delta = split_type(t, post);
        if (!delta.ok()) {
          fail(TypeError::Code::PostEnvMismatch, e.loc,
               "parameter " + q(p) + " must end with type " + post.str() +
                   "; it has " + t.str() + " (" + delta.error().reason + ")");
        }
        ev.partial_residues.emplace_back(p, delta.value());
      }
    }

    // Everything else is discarded: integers freely, references with a
    // prophecy-settling assume and a frozen residue.
    std::set<std::string> params_set;
    if (def) {
      params_set.insert(def->param_names.begin(), def->param_names.end());
    }
    for (const auto& [name, t] : g.entries()) {
      if (returned.count(name) || params_set.count(name)) continue;
      if (t.is_ref()) ev.dropped_refs.emplace_back(name, t);
    }

    // Lifetimes must be restored exactly: locals ended, parameters intact.
    if (!(l == contract_.initial_l)) {
      std::string extra;
      for (const auto& a : l.vars()) {
        if (!contract_.initial_l.contains(a)) {
          extra = a;
          break;
        }
      }
      if (def) {
        fail(TypeError::Code::ScopeEscape, e.loc,
             "local lifetime " + q(extra) + " is still live at an exit of " +
                 q(def->name));
      }
      if (depth > 0) {
        fail(TypeError::Code::BranchEnvMismatch, e.loc,
             "this exit of main leaves lifetime " + q(extra) +
                 " live; every branch must end the same lifetimes");
      }
      fail(TypeError::Code::ScopeEscape, e.loc,
           "lifetime " + q(extra) + " is still live at the end of main");
    }

    info.tail = std::move(ev);
  }
};

}  // namespace

std::vector<std::pair<int, TypeEnv>> TypedProgram::env_by_line() const {
  std::map<int, TypeEnv> last;
  for (const auto& [line, env] : env_log) last[line] = env;
  return {last.begin(), last.end()};
}

std::string TypedProgram::dump_env() const {
  std::ostringstream os;
  for (const auto& [line, env] : env_by_line()) {
    TypeEnv shown;
    for (const auto& [name, t] : env.entries()) {
      if (!name.empty() && name[0] == '_') continue;  // compiler temporaries
      shown.set(name, t);
    }
    os << line << ": " << (shown.empty() ? "(empty)" : shown.str()) << "\n";
  }
  return os.str();
}

Expected<TypedProgram, TypeError> check_program(Program p,
                                                const CheckOptions& opts) {
  Checker c(std::move(p), opts);
  return c.run();
}

}  // namespace bfo
