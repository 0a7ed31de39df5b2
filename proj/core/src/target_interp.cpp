#include "bfo/target_interp.hpp"

#include <algorithm>
#include <utility>

namespace bfo {

TValue TValue::of(long long v) {
  TValue out;
  out.n = v;
  return out;
}

TValue TValue::make_pair(TValue a, TValue b) {
  TValue out;
  out.pair = std::make_shared<const std::pair<TValue, TValue>>(std::move(a),
                                                               std::move(b));
  return out;
}

int TValue::cmp(const TValue& a, const TValue& b) {
  if (!a.pair && !b.pair) return a.n < b.n ? -1 : (a.n > b.n ? 1 : 0);
  if (!a.pair) return -1;
  if (!b.pair) return 1;
  if (a.pair == b.pair) return 0;
  int c = cmp(a.pair->first, b.pair->first);
  if (c != 0) return c;
  return cmp(a.pair->second, b.pair->second);
}

std::string TValue::to_string() const {
  if (!pair) return std::to_string(n);
  return "(" + fst().to_string() + ", " + snd().to_string() + ")";
}

namespace {

int cmp_register(const TRegister& a, const TRegister& b) {
  auto i = a.begin();
  auto j = b.begin();
  for (; i != a.end() && j != b.end(); ++i, ++j) {
    if (i->first != j->first) return i->first < j->first ? -1 : 1;
    int c = TValue::cmp(i->second, j->second);
    if (c != 0) return c;
  }
  if (i != a.end()) return 1;
  if (j != b.end()) return -1;
  return 0;
}

const TValue& lookup(const TRegister& s, const std::string& x) {
  auto it = s.find(x);
  if (it == s.end()) throw TargetError("unbound register '" + x + "'");
  return it->second;
}

long long as_int(const TValue& v, const std::string& what) {
  if (v.is_pair()) throw TargetError(what + " is a pair, expected an integer");
  return v.n;
}

long long eval_arith(const TRegister& s, const Arith& a) {
  switch (a.op) {
    case Arith::Op::Const: return a.n;
    case Arith::Op::Var: return as_int(lookup(s, a.var), "'" + a.var + "'");
    case Arith::Op::Add: return eval_arith(s, *a.lhs) + eval_arith(s, *a.rhs);
    case Arith::Op::Sub: return eval_arith(s, *a.lhs) - eval_arith(s, *a.rhs);
    case Arith::Op::Mul: return eval_arith(s, *a.lhs) * eval_arith(s, *a.rhs);
    case Arith::Op::Eq:
      return eval_arith(s, *a.lhs) == eval_arith(s, *a.rhs) ? 0 : 1;
    case Arith::Op::Lt:
      return eval_arith(s, *a.lhs) < eval_arith(s, *a.rhs) ? 0 : 1;
    case Arith::Op::Le:
      return eval_arith(s, *a.lhs) <= eval_arith(s, *a.rhs) ? 0 : 1;
  }
  throw TargetError("unknown arithmetic operator");
}

TValue eval_atom(const TRegister& s, const Atom& a) {
  switch (a.kind) {
    case Atom::Kind::Var: return lookup(s, a.var);
    case Atom::Kind::Fst: {
      const TValue& v = lookup(s, a.var);
      if (!v.is_pair())
        throw TargetError("fst applied to integer '" + a.var + "'");
      return v.fst();
    }
    case Atom::Kind::Snd: {
      const TValue& v = lookup(s, a.var);
      if (!v.is_pair())
        throw TargetError("snd applied to integer '" + a.var + "'");
      return v.snd();
    }
    case Atom::Kind::Const: return TValue::of(a.n);
    case Atom::Kind::Nondet:
      throw TargetError("draw used outside a binding position");
  }
  throw TargetError("unknown atom kind");
}

using Renaming = std::map<std::string, std::string>;

std::string renamed(const Renaming& env, const std::string& x) {
  auto it = env.find(x);
  return it == env.end() ? x : it->second;
}

Arith arith_renamed(const Renaming& env, const Arith& a) {
  switch (a.op) {
    case Arith::Op::Const: return Arith::constant(a.n);
    case Arith::Op::Var: return Arith::variable(renamed(env, a.var));
    default:
      return Arith::binary(a.op, arith_renamed(env, *a.lhs),
                           arith_renamed(env, *a.rhs));
  }
}

/// Clones a function body while renaming every bound variable to a fresh
/// name, so that recursive calls never collide with live registers, and
/// substituting parameters by the caller's argument registers.
class Refresher {
 public:
  explicit Refresher(long long& counter) : counter_(counter) {}

  TargetTermPtr run(const TargetTerm& t, Renaming env) {
    return walk(t, std::move(env));
  }

 private:
  long long& counter_;

  std::string fresh(const std::string& base) {
    return base + "~" + std::to_string(++counter_);
  }

  static Atom atom_renamed(const Renaming& env, const Atom& a) {
    Atom out = a;
    if (a.kind == Atom::Kind::Var || a.kind == Atom::Kind::Fst ||
        a.kind == Atom::Kind::Snd) {
      out.var = renamed(env, a.var);
    }
    return out;
  }

  /// A draw's `prophecy_of` names the register bound by the enclosing let,
  /// which is only renamed after the value atoms are cloned; patch it here.
  static void patch_prophecy(Atom& a, const Renaming& outer,
                             const std::string& old_binder,
                             const std::string& new_binder) {
    if (a.kind != Atom::Kind::Nondet || a.prophecy_of.empty()) return;
    a.prophecy_of = a.prophecy_of == old_binder
                        ? new_binder
                        : renamed(outer, a.prophecy_of);
  }

  TargetTermPtr walk(const TargetTerm& t, Renaming env) {
    const int origin = t.origin;
    if (const auto* v = std::get_if<TVar>(&t.node)) {
      TVar out;
      out.ret_count = v->ret_count;
      for (const auto& nm : v->names) out.names.push_back(renamed(env, nm));
      return TargetTerm::make(origin, std::move(out));
    }
    if (const auto* l = std::get_if<TLetArith>(&t.node)) {
      TLetArith out;
      out.value = arith_renamed(env, l->value);
      out.x = fresh(l->x);
      Renaming inner = env;
      inner[l->x] = out.x;
      out.body = walk(*l->body, std::move(inner));
      return TargetTerm::make(origin, std::move(out));
    }
    if (const auto* l = std::get_if<TLetAtom>(&t.node)) {
      TLetAtom out;
      out.value = atom_renamed(env, l->value);
      out.x = fresh(l->x);
      patch_prophecy(out.value, env, l->x, out.x);
      Renaming inner = env;
      inner[l->x] = out.x;
      out.body = walk(*l->body, std::move(inner));
      return TargetTerm::make(origin, std::move(out));
    }
    if (const auto* l = std::get_if<TLetPair>(&t.node)) {
      TLetPair out;
      out.fst = atom_renamed(env, l->fst);
      out.snd = atom_renamed(env, l->snd);
      out.x = fresh(l->x);
      patch_prophecy(out.fst, env, l->x, out.x);
      patch_prophecy(out.snd, env, l->x, out.x);
      Renaming inner = env;
      inner[l->x] = out.x;
      out.body = walk(*l->body, std::move(inner));
      return TargetTerm::make(origin, std::move(out));
    }
    if (const auto* c = std::get_if<TLetCall>(&t.node)) {
      TLetCall out;
      out.fn = c->fn;
      out.ret_count = c->ret_count;
      for (const auto& a : c->args) out.args.push_back(renamed(env, a));
      Renaming inner = env;
      for (const auto& b : c->binders) {
        out.binders.push_back(fresh(b));
        inner[b] = out.binders.back();
      }
      out.body = walk(*c->body, std::move(inner));
      return TargetTerm::make(origin, std::move(out));
    }
    if (const auto* a = std::get_if<TAssume>(&t.node)) {
      TAssume out;
      out.a = atom_renamed(env, a->a);
      out.b = atom_renamed(env, a->b);
      out.cont = walk(*a->cont, std::move(env));
      return TargetTerm::make(origin, std::move(out));
    }
    if (const auto* i = std::get_if<TIfZ>(&t.node)) {
      TIfZ out;
      out.x = renamed(env, i->x);
      out.then_t = walk(*i->then_t, env);
      out.else_t = walk(*i->else_t, std::move(env));
      return TargetTerm::make(origin, std::move(out));
    }
    return TargetTerm::make(origin, TFail{});
  }
};

/// A suspended caller: where to resume and which registers to bind from the
/// callee's returned tuple.
struct Frame {
  const TargetTerm* resume = nullptr;
  std::vector<std::string> binders;
};

/// One path under exploration.
struct Config {
  const TargetTerm* cur = nullptr;
  std::vector<TRegister> states;
  std::vector<Frame> frames;
  /// Refreshed callee bodies this path executes; shared between forks.
  std::vector<std::shared_ptr<const TargetTerm>> owned;
  std::vector<BranchChoice> choices;
};

constexpr std::size_t kDedupThreshold = 64;

class Explorer {
 public:
  Explorer(const TargetProgram& p, const ExploreOptions& o) : p_(p), o_(o) {}

  ExploreResult run() {
    if (o_.domain_lo > o_.domain_hi) throw TargetError("empty draw domain");
    Config init;
    init.cur = p_.main_t.get();
    init.states.emplace_back();
    work_.push_back(std::move(init));
    while (!work_.empty()) {
      if (out_of_budget()) break;
      Config c = std::move(work_.back());
      work_.pop_back();
      run_path(std::move(c));
    }
    std::sort(res_.final_values.begin(), res_.final_values.end());
    res_.final_values.erase(
        std::unique(res_.final_values.begin(), res_.final_values.end()),
        res_.final_values.end());
    return std::move(res_);
  }

 private:
  const TargetProgram& p_;
  const ExploreOptions& o_;
  ExploreResult res_;
  std::vector<Config> work_;
  long long refresh_counter_ = 0;

  bool out_of_budget() {
    if (res_.steps >= o_.max_steps) {
      res_.complete = false;
      return true;
    }
    if (res_.fail_reachable && o_.stop_on_fail) {
      res_.complete = false;
      return true;
    }
    return false;
  }

  static void dedup(std::vector<TRegister>& states) {
    std::sort(states.begin(), states.end(),
              [](const TRegister& a, const TRegister& b) {
                return cmp_register(a, b) < 0;
              });
    states.erase(std::unique(states.begin(), states.end(),
                             [](const TRegister& a, const TRegister& b) {
                               return cmp_register(a, b) == 0;
                             }),
                 states.end());
  }

  /// Caps the candidate set, recording that the search became partial.
  void enforce_state_cap(std::vector<TRegister>& states) {
    if (states.size() > o_.max_states) {
      states.resize(o_.max_states);
      res_.complete = false;
    }
  }

  void run_path(Config c) {
    for (;;) {
      if (out_of_budget()) return;
      ++res_.steps;
      const TargetTerm& t = *c.cur;

      if (const auto* v = std::get_if<TVar>(&t.node)) {
        if (c.frames.empty()) {
          ++res_.paths_done;
          if (!v->names.empty()) {
            for (const TRegister& s : c.states) {
              const TValue& val = lookup(s, v->names.front());
              if (!val.is_pair()) res_.final_values.push_back(val.n);
            }
          }
          return;
        }
        Frame f = std::move(c.frames.back());
        c.frames.pop_back();
        if (f.binders.size() != v->names.size())
          throw TargetError("call expected " +
                            std::to_string(f.binders.size()) +
                            " returned values, got " +
                            std::to_string(v->names.size()));
        for (TRegister& s : c.states) {
          std::vector<TValue> vals;
          vals.reserve(v->names.size());
          for (const auto& nm : v->names) vals.push_back(lookup(s, nm));
          for (std::size_t i = 0; i < f.binders.size(); ++i)
            s[f.binders[i]] = std::move(vals[i]);
        }
        c.cur = f.resume;
        continue;
      }

      if (const auto* l = std::get_if<TLetArith>(&t.node)) {
        bool overwrite = !c.states.empty() && c.states.front().count(l->x) > 0;
        for (TRegister& s : c.states)
          s[l->x] = TValue::of(eval_arith(s, l->value));
        if (overwrite && c.states.size() >= kDedupThreshold) dedup(c.states);
        c.cur = l->body.get();
        continue;
      }

      if (const auto* l = std::get_if<TLetAtom>(&t.node)) {
        bool overwrite = !c.states.empty() && c.states.front().count(l->x) > 0;
        if (l->value.kind == Atom::Kind::Nondet) {
          std::vector<TRegister> next;
          next.reserve(c.states.size() *
                       static_cast<std::size_t>(o_.domain_hi - o_.domain_lo + 1));
          for (const TRegister& s : c.states) {
            for (long long n = o_.domain_lo; n <= o_.domain_hi; ++n) {
              next.push_back(s);
              next.back()[l->x] = TValue::of(n);
            }
          }
          c.states = std::move(next);
          enforce_state_cap(c.states);
        } else {
          for (TRegister& s : c.states) s[l->x] = eval_atom(s, l->value);
        }
        if (overwrite && c.states.size() >= kDedupThreshold) dedup(c.states);
        c.cur = l->body.get();
        continue;
      }

      if (const auto* l = std::get_if<TLetPair>(&t.node)) {
        bool overwrite = !c.states.empty() && c.states.front().count(l->x) > 0;
        bool nfst = l->fst.kind == Atom::Kind::Nondet;
        bool nsnd = l->snd.kind == Atom::Kind::Nondet;
        if (nfst || nsnd) {
          std::vector<TRegister> next;
          for (const TRegister& s : c.states) {
            TValue f0, s0;
            if (!nfst) f0 = eval_atom(s, l->fst);
            if (!nsnd) s0 = eval_atom(s, l->snd);
            for (long long a = o_.domain_lo;
                 a <= (nfst ? o_.domain_hi : o_.domain_lo); ++a) {
              for (long long b = o_.domain_lo;
                   b <= (nsnd ? o_.domain_hi : o_.domain_lo); ++b) {
                next.push_back(s);
                next.back()[l->x] = TValue::make_pair(
                    nfst ? TValue::of(a) : f0, nsnd ? TValue::of(b) : s0);
              }
            }
          }
          c.states = std::move(next);
          enforce_state_cap(c.states);
        } else {
          for (TRegister& s : c.states) {
            TValue f0 = eval_atom(s, l->fst);
            TValue s0 = eval_atom(s, l->snd);
            s[l->x] = TValue::make_pair(std::move(f0), std::move(s0));
          }
        }
        if (overwrite && c.states.size() >= kDedupThreshold) dedup(c.states);
        c.cur = l->body.get();
        continue;
      }

      if (const auto* call = std::get_if<TLetCall>(&t.node)) {
        const TargetFnDef* fn = p_.find_fn(call->fn);
        if (!fn) throw TargetError("call to unknown function '" + call->fn + "'");
        if (fn->params.size() != call->args.size())
          throw TargetError("function '" + call->fn + "' takes " +
                            std::to_string(fn->params.size()) +
                            " arguments, got " +
                            std::to_string(call->args.size()));
        if (static_cast<int>(c.frames.size()) + 1 > o_.max_depth) {
          ++res_.paths_clipped;
          res_.complete = false;
          return;
        }
        Renaming env;
        for (std::size_t i = 0; i < fn->params.size(); ++i)
          env[fn->params[i]] = call->args[i];
        Refresher refresher(refresh_counter_);
        TargetTermPtr body = refresher.run(*fn->body, std::move(env));
        c.owned.emplace_back(std::move(body));
        c.frames.push_back(Frame{call->body.get(), call->binders});
        c.cur = c.owned.back().get();
        res_.max_depth_seen = std::max(res_.max_depth_seen,
                                       static_cast<int>(c.frames.size()));
        continue;
      }

      if (const auto* a = std::get_if<TAssume>(&t.node)) {
        std::vector<TRegister> kept;
        kept.reserve(c.states.size());
        for (TRegister& s : c.states) {
          if (TValue::cmp(eval_atom(s, a->a), eval_atom(s, a->b)) == 0)
            kept.push_back(std::move(s));
        }
        c.states = std::move(kept);
        if (c.states.empty()) {
          ++res_.paths_infeasible;
          return;
        }
        c.cur = a->cont.get();
        continue;
      }

      if (const auto* i = std::get_if<TIfZ>(&t.node)) {
        std::vector<TRegister> zeros, nonzeros;
        for (TRegister& s : c.states) {
          long long n = as_int(lookup(s, i->x), "'" + i->x + "'");
          (n == 0 ? zeros : nonzeros).push_back(std::move(s));
        }
        if (zeros.empty() && nonzeros.empty()) {
          ++res_.paths_infeasible;
          return;
        }
        if (nonzeros.empty()) {
          c.choices.push_back(BranchChoice{t.origin, true});
          c.states = std::move(zeros);
          c.cur = i->then_t.get();
          continue;
        }
        if (zeros.empty()) {
          c.choices.push_back(BranchChoice{t.origin, false});
          c.states = std::move(nonzeros);
          c.cur = i->else_t.get();
          continue;
        }
        Config other;
        other.cur = i->else_t.get();
        other.states = std::move(nonzeros);
        other.frames = c.frames;
        other.owned = c.owned;
        other.choices = c.choices;
        other.choices.push_back(BranchChoice{t.origin, false});
        work_.push_back(std::move(other));
        c.choices.push_back(BranchChoice{t.origin, true});
        c.states = std::move(zeros);
        c.cur = i->then_t.get();
        continue;
      }

      // fail
      ++res_.paths_failed;
      if (!res_.fail_reachable) {
        res_.fail_reachable = true;
        res_.witness = c.choices;
      }
      return;
    }
  }
};

}  // namespace

ExploreResult explore(const TargetProgram& p, const ExploreOptions& opts) {
  return Explorer(p, opts).run();
}

}  // namespace bfo
