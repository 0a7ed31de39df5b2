#include "bfo/interp.hpp"

#include "bfo/pretty.hpp"
#include "bfo/type_algebra.hpp"

#include <map>
#include <set>
#include <sstream>

namespace bfo {

HavocStream HavocStream::from_list(std::vector<long long> values) {
  HavocStream h;
  h.list_ = std::move(values);
  return h;
}

HavocStream HavocStream::seeded(std::uint64_t seed, long long lo, long long hi) {
  HavocStream h;
  h.use_rng_ = true;
  h.rng_.seed(seed);
  h.lo_ = lo;
  h.hi_ = hi;
  return h;
}

long long HavocStream::next() {
  long long v = 0;
  if (pos_ < list_.size()) {
    v = list_[pos_++];
  } else if (use_rng_) {
    std::uniform_int_distribution<long long> dist(lo_, hi_);
    v = dist(rng_);
  }
  drawn_.push_back(v);
  return v;
}

const char* status_str(RunStatus s) {
  switch (s) {
    case RunStatus::Done: return "done";
    case RunStatus::Fail: return "fail";
    case RunStatus::AliasFail: return "alias-fail";
    case RunStatus::FuelExhausted: return "fuel-exhausted";
    case RunStatus::Stuck: return "stuck";
    case RunStatus::AuditViolated: return "audit-violation";
  }
  return "unknown";
}

namespace {

struct StuckError {
  std::string reason;
};

[[noreturn]] void stuck(std::string reason) { throw StuckError{std::move(reason)}; }

/// One-line rendering of the node about to execute, for --trace.
std::string redex_str(const SourceExpr& e) {
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SVar>) {
          if (n.names.size() == 1) return n.names[0];
          std::string s = "(";
          for (std::size_t i = 0; i < n.names.size(); ++i) {
            if (i) s += ", ";
            s += n.names[i];
          }
          return s + ")";
        } else if constexpr (std::is_same_v<T, SLetArith>) {
          return "let " + n.x + " = " + pretty_arith(n.value);
        } else if constexpr (std::is_same_v<T, SLetHavoc>) {
          return "let " + n.x + " = _";
        } else if constexpr (std::is_same_v<T, SLetAlias>) {
          return "let " + n.x + " = " + n.y;
        } else if constexpr (std::is_same_v<T, SLetMkRef>) {
          return "let " + n.x + " = mkref " + n.y;
        } else if constexpr (std::is_same_v<T, SLetDeref>) {
          return "let " + n.x + " = *" + n.y;
        } else if constexpr (std::is_same_v<T, SAssign>) {
          return n.x + " := " + n.y;
        } else if constexpr (std::is_same_v<T, SIfZ>) {
          return "ifz " + n.x;
        } else if constexpr (std::is_same_v<T, SLetCall>) {
          std::string s = "let ";
          if (n.binders.size() == 1) {
            s += n.binders[0];
          } else {
            s += "(";
            for (std::size_t i = 0; i < n.binders.size(); ++i) {
              if (i) s += ", ";
              s += n.binders[i];
            }
            s += ")";
          }
          s += " = " + n.fn + "(";
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) s += ", ";
            s += n.args[i];
          }
          return s + ")";
        } else if constexpr (std::is_same_v<T, SAliasAssume>) {
          return "alias(" + n.x + " = " + n.y + ")";
        } else if constexpr (std::is_same_v<T, SNewLft>) {
          return "newlft " + n.lft;
        } else if constexpr (std::is_same_v<T, SEndLft>) {
          return "endlft " + n.lft;
        } else {
          return "fail";
        }
      },
      e.node);
}

class Interp {
 public:
  Interp(const TypedProgram& tp, HavocStream& havoc, const RunOptions& opts)
      : tp_(tp), havoc_(havoc), opts_(opts) {}

  RunResult run() {
    stack_.push_back(Frame{nullptr, {}, {}, tp_.program.main_e.get()});
    try {
      while (res_.steps < opts_.fuel) {
        bool more = step();
        ++res_.steps;
        if (!more) return res_;
        if (opts_.audit && !stack_.empty()) {
          if (auto v = audit_check()) {
            res_.violation = std::move(v);
            res_.status = RunStatus::AuditViolated;
            return res_;
          }
        }
      }
      res_.status = RunStatus::FuelExhausted;
    } catch (StuckError& s) {
      res_.status = RunStatus::Stuck;
      res_.stuck_reason = s.reason;
    }
    return res_;
  }

 private:
  struct Frame {
    const FunDef* fn;  // null for main
    std::map<std::string, Value> regs;
    // Static lifetime names in scope -> runtime lifetime identities. Two runs
    // of the same newlft (or two activations of a function) are distinct
    // lifetimes at runtime, so audit accounting must not key on static names.
    std::map<std::string, std::string> lfts;
    const SourceExpr* e;
  };

  const TypedProgram& tp_;
  HavocStream& havoc_;
  RunOptions opts_;
  std::map<long long, long long> heap_;
  long long next_addr_ = 0;
  long long next_lft_ = 0;
  std::vector<Frame> stack_;
  // Ownership abandoned by finished activations (drops and post-call
  // weakenings), pinned to addresses; lives until its lifetime ends.
  std::vector<std::pair<long long, OwnType>> residues_;
  RunResult res_;

  const NodeInfo& info_of(const SourceExpr& e) const {
    return tp_.nodes[static_cast<std::size_t>(e.id)];
  }

  void trace(const char* rule, const SourceExpr& e) {
    if (!opts_.trace) return;
    res_.trace.push_back(std::string(rule) + "  " + redex_str(e));
  }

  void event(SourceEvent ev) {
    if (opts_.record_events) res_.events.push_back(std::move(ev));
  }

  Value reg(const Frame& f, const std::string& x) const {
    auto it = f.regs.find(x);
    if (it == f.regs.end()) stuck("unbound variable '" + x + "'");
    return it->second;
  }

  long long as_int(const Value& v, const std::string& what) const {
    if (!v.is_int()) stuck(what + " is an address, expected an integer");
    return v.v;
  }

  long long as_addr(const Value& v, const std::string& what) const {
    if (!v.is_addr()) stuck(what + " is an integer, expected an address");
    return v.v;
  }

  std::string fresh_lft(const std::string& name) {
    return name + "#" + std::to_string(next_lft_++);
  }

  const std::string& resolve_lft(const Frame& f, const std::string& name) const {
    auto it = f.lfts.find(name);
    if (it == f.lfts.end()) stuck("lifetime '" + name + "' has no runtime identity");
    return it->second;
  }

  /// Rewrites a checker type over the frame's static lifetime names into one
  /// over runtime lifetime identities.
  OwnType subst_type(const Frame& f, const OwnType& t) const {
    if (!t.is_ref()) return t;
    std::optional<Borrow> b;
    if (t.borrow) b = Borrow{resolve_lft(f, t.borrow->lft), t.borrow->amount};
    return OwnType::make_ref(resolve_lft(f, t.lft), t.own, std::move(b));
  }

  long long eval(const Arith& a, const Frame& f) const {
    switch (a.op) {
      case Arith::Op::Const: return a.n;
      case Arith::Op::Var: return as_int(reg(f, a.var), "'" + a.var + "'");
      case Arith::Op::Add: return eval(*a.lhs, f) + eval(*a.rhs, f);
      case Arith::Op::Sub: return eval(*a.lhs, f) - eval(*a.rhs, f);
      case Arith::Op::Mul: return eval(*a.lhs, f) * eval(*a.rhs, f);
      // Comparisons return 0 for true, composing with ifz.
      case Arith::Op::Eq: return eval(*a.lhs, f) == eval(*a.rhs, f) ? 0 : 1;
      case Arith::Op::Lt: return eval(*a.lhs, f) < eval(*a.rhs, f) ? 0 : 1;
      case Arith::Op::Le: return eval(*a.lhs, f) <= eval(*a.rhs, f) ? 0 : 1;
    }
    stuck("malformed arithmetic");
  }

  /// Emits Drop events and pins abandoned ownership for one function exit.
  void settle_tail(Frame& f, const SourceExpr& e, const TailEvidence& ev) {
    for (const auto& [name, t] : ev.dropped_refs) {
      long long a = as_addr(reg(f, name), "'" + name + "'");
      event({SourceEvent::Kind::Drop, e.id, name, a, heap_.at(a)});
      residues_.emplace_back(a, subst_type(f, t));
    }
    for (const auto& [name, t] : ev.partial_residues) {
      long long a = as_addr(reg(f, name), "'" + name + "'");
      residues_.emplace_back(a, subst_type(f, t));
    }
  }

  /// Ending a runtime lifetime drops residues living at it and returns their
  /// outstanding loans, mirroring what the checker does to the environment.
  void retire_residues(const std::string& rid) {
    std::vector<std::pair<long long, OwnType>> kept;
    kept.reserve(residues_.size());
    for (auto& [addr, t] : residues_) {
      if (t.lft == rid) continue;
      if (t.borrow && t.borrow->lft == rid) {
        t = OwnType::make_ref(t.lft, t.own + t.borrow->amount);
      }
      kept.emplace_back(addr, std::move(t));
    }
    residues_ = std::move(kept);
  }

  /// Executes one step; returns false on a terminal status.
  bool step() {
    Frame& f = stack_.back();
    const SourceExpr& e = *f.e;
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, SVar>) {
            trace("Rs-Var", e);
            const TailEvidence& ev = *info_of(e).tail;
            settle_tail(f, e, ev);
            if (stack_.size() == 1) {
              res_.value = as_int(reg(f, n.names[0]), "result");
              res_.status = RunStatus::Done;
              event({SourceEvent::Kind::Done, e.id, "", -1, res_.value});
              return false;
            }
            std::vector<Value> returned;
            returned.reserve(n.names.size());
            for (const auto& name : n.names) returned.push_back(reg(f, name));
            event({SourceEvent::Kind::Ret, e.id, "", -1, 0});
            stack_.pop_back();
            Frame& caller = stack_.back();
            const auto& call = std::get<SLetCall>(caller.e->node);
            for (std::size_t i = 0; i < call.binders.size(); ++i) {
              caller.regs[call.binders[i]] = returned[i];
            }
            caller.e = call.body.get();
            return true;
          } else if constexpr (std::is_same_v<T, SLetArith>) {
            trace("Rs-Let", e);
            f.regs[n.x] = Value::integer(eval(n.value, f));
            f.e = n.body.get();
            return true;
          } else if constexpr (std::is_same_v<T, SLetHavoc>) {
            trace("Rs-Havoc", e);
            long long v = havoc_.next();
            event({SourceEvent::Kind::Havoc, e.id, "", -1, v});
            f.regs[n.x] = Value::integer(v);
            f.e = n.body.get();
            return true;
          } else if constexpr (std::is_same_v<T, SLetAlias>) {
            trace("Rs-Let", e);
            f.regs[n.x] = reg(f, n.y);
            f.e = n.body.get();
            return true;
          } else if constexpr (std::is_same_v<T, SLetMkRef>) {
            trace("Rs-MkRef", e);
            long long v = as_int(reg(f, n.y), "'" + n.y + "'");
            long long a = next_addr_++;
            heap_[a] = v;
            event({SourceEvent::Kind::MkRef, e.id, "", a, v});
            f.regs[n.x] = Value::address(a);
            f.e = n.body.get();
            return true;
          } else if constexpr (std::is_same_v<T, SLetDeref>) {
            trace("Rs-Deref", e);
            long long a = as_addr(reg(f, n.y), "'" + n.y + "'");
            long long v = heap_.at(a);
            event({SourceEvent::Kind::Deref, e.id, "", a, v});
            f.regs[n.x] = Value::integer(v);
            f.e = n.body.get();
            return true;
          } else if constexpr (std::is_same_v<T, SAssign>) {
            trace("Rs-Assign", e);
            long long a = as_addr(reg(f, n.x), "'" + n.x + "'");
            long long v = as_int(reg(f, n.y), "'" + n.y + "'");
            heap_[a] = v;
            event({SourceEvent::Kind::Assign, e.id, "", a, v});
            f.e = n.cont.get();
            return true;
          } else if constexpr (std::is_same_v<T, SIfZ>) {
            long long v = as_int(reg(f, n.x), "'" + n.x + "'");
            event({SourceEvent::Kind::IfZ, e.id, "", -1, v});
            if (v == 0) {
              trace("Rs-IfZTrue", e);
              f.e = n.then_e.get();
            } else {
              trace("Rs-IfZFalse", e);
              f.e = n.else_e.get();
            }
            return true;
          } else if constexpr (std::is_same_v<T, SLetCall>) {
            trace("Rs-Call", e);
            const FunDef* def = tp_.program.find_fn(n.fn);
            if (!def) stuck("unknown function '" + n.fn + "'");
            Frame callee{def, {}, {}, def->body.get()};
            for (std::size_t i = 0; i < n.args.size(); ++i) {
              callee.regs[def->param_names[i]] = reg(f, n.args[i]);
            }
            for (std::size_t i = 0; i < n.lft_args.size(); ++i) {
              callee.lfts[def->sig.lft_params[i]] = resolve_lft(f, n.lft_args[i]);
            }
            event({SourceEvent::Kind::Call, e.id, "", -1, 0});
            stack_.push_back(std::move(callee));
            return true;
          } else if constexpr (std::is_same_v<T, SAliasAssume>) {
            long long ax = as_addr(reg(f, n.x), "'" + n.x + "'");
            long long ay = as_addr(reg(f, n.y), "'" + n.y + "'");
            if (ax != ay) {
              trace("Rs-AliasFail", e);
              res_.status = RunStatus::AliasFail;
              return false;
            }
            trace("Rs-Alias", e);
            event({SourceEvent::Kind::Alias, e.id, "", ax, 0});
            f.e = n.cont.get();
            return true;
          } else if constexpr (std::is_same_v<T, SNewLft>) {
            trace("Rs-Newlft", e);
            f.lfts[n.lft] = fresh_lft(n.lft);
            f.e = n.body.get();
            return true;
          } else if constexpr (std::is_same_v<T, SEndLft>) {
            trace("Rs-Endlft", e);
            if (const auto& drops = info_of(e).endlft_drops) {
              for (const auto& [name, t] : *drops) {
                long long a = as_addr(reg(f, name), "'" + name + "'");
                event({SourceEvent::Kind::Drop, e.id, name, a, heap_.at(a)});
              }
            }
            retire_residues(resolve_lft(f, n.lft));
            f.lfts.erase(n.lft);
            f.e = n.cont.get();
            return true;
          } else {
            trace("Rs-Fail", e);
            event({SourceEvent::Kind::Fail, e.id, "", -1, 0});
            res_.status = RunStatus::Fail;
            return false;
          }
        },
        e.node);
  }

  /// Fraction and borrow consistency over every live address, combining every
  /// frame's checker snapshot (minus reference arguments parked in a callee)
  /// with the pinned residues, all over runtime lifetime identities.
  std::optional<AuditViolation> audit_check() {
    TypeEnv combined;
    std::map<std::string, long long> regs;
    for (std::size_t i = 0; i < stack_.size(); ++i) {
      const Frame& f = stack_[i];
      const NodeInfo& info = info_of(*f.e);
      bool parked = i + 1 < stack_.size();
      std::set<std::string> passed;
      if (parked) {
        const auto& call = std::get<SLetCall>(f.e->node);
        passed.insert(call.args.begin(), call.args.end());
      }
      std::string prefix = "f" + std::to_string(i) + ":";
      for (const auto& [name, t] : info.env_in.entries()) {
        if (!t.is_ref()) continue;
        if (parked && passed.count(name)) continue;
        auto it = f.regs.find(name);
        if (it == f.regs.end() || !it->second.is_addr()) continue;
        combined.set(prefix + name, subst_type(f, t));
        regs[prefix + name] = it->second.v;
      }
    }
    for (std::size_t k = 0; k < residues_.size(); ++k) {
      std::string key = "residue#" + std::to_string(k);
      combined.set(key, residues_[k].second);
      regs[key] = residues_[k].first;
    }

    for (const auto& [addr, cell] : heap_) {
      (void)cell;
      OwnershipMetrics m = ownership_metrics(combined, regs, addr);
      std::optional<std::string> borrow_bad = borrow_consistency_violation(m);
      if (m.own_total <= Rational(1) && !borrow_bad) continue;
      std::ostringstream os;
      if (m.own_total > Rational(1)) {
        os << "address " << addr << ": ownership sum " << m.own_total.str()
           << " exceeds 1";
      } else {
        os << "address " << addr << ": borrow accounting for lifetime '"
           << *borrow_bad << "' is inconsistent";
      }
      os << " (";
      bool first = true;
      for (const auto& [name, t] : combined.entries()) {
        if (regs.at(name) != addr) continue;
        if (!first) os << ", ";
        first = false;
        os << name << ": " << t.str();
      }
      os << ")";
      AuditViolation v;
      v.step = res_.steps;
      v.addr = addr;
      v.own_total = m.own_total;
      v.message = os.str();
      return v;
    }
    return std::nullopt;
  }
};

}  // namespace

RunResult run_source(const TypedProgram& p, HavocStream& havoc,
                     const RunOptions& opts) {
  Interp i(p, havoc, opts);
  return i.run();
}

}  // namespace bfo
