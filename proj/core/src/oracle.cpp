#include "bfo/oracle.hpp"

#include <memory>
#include <utility>

namespace bfo {
namespace {

/// A replay value: an integer, a pair, or a still-unresolved prophecy draw.
struct OValue {
  enum class Kind { Int, Pair, Token };
  Kind kind = Kind::Int;
  long long n = 0;
  int token = -1;
  std::shared_ptr<const std::pair<OValue, OValue>> pair;

  static OValue of(long long v) {
    OValue o;
    o.n = v;
    return o;
  }
  static OValue tok(int t) {
    OValue o;
    o.kind = Kind::Token;
    o.token = t;
    return o;
  }
  static OValue mk_pair(OValue a, OValue b) {
    OValue o;
    o.kind = Kind::Pair;
    o.pair = std::make_shared<const std::pair<OValue, OValue>>(std::move(a),
                                                               std::move(b));
    return o;
  }
};

/// Union-find over prophecy draws; two draws can be pinned to each other
/// before either has a concrete value.
class TokenTable {
 public:
  int fresh() {
    parent_.push_back(static_cast<int>(parent_.size()));
    value_.emplace_back();
    return parent_.back();
  }

  int find(int t) {
    while (parent_[t] != t) {
      parent_[t] = parent_[parent_[t]];
      t = parent_[t];
    }
    return t;
  }

  bool bind(int t, long long v) {
    t = find(t);
    if (value_[t] && *value_[t] != v) return false;
    value_[t] = v;
    return true;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return true;
    auto va = value_[a];
    auto vb = value_[b];
    if (va && vb && *va != *vb) return false;
    parent_[b] = a;
    if (!va) value_[a] = vb;
    return true;
  }

  std::optional<long long> value_of(int t) { return value_[find(t)]; }

  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<int> parent_;
  std::vector<std::optional<long long>> value_;
};

struct Bail {
  OracleDivergence d;
};

struct QEntry {
  int node = -1;
  long long value = 0;
};

struct Queue {
  const char* what = "";
  std::vector<QEntry> items;
  std::size_t pos = 0;
};

struct Frame {
  const TargetTerm* resume = nullptr;
  std::vector<std::string> binders;
};

using Env = std::map<std::string, OValue>;

constexpr long long kMaxReplaySteps = 10'000'000;

class Walker {
 public:
  Walker(const TargetProgram& p, const std::vector<SourceEvent>& events,
         bool resolving, std::vector<std::optional<long long>> table)
      : p_(p), resolving_(resolving), table_(std::move(table)) {
    havoc_.what = "havoc";
    deref_.what = "read";
    mkref_.what = "allocation";
    assign_.what = "write";
    ifz_.what = "branch";
    call_.what = "call";
    ret_.what = "return";
    for (const auto& e : events) {
      switch (e.kind) {
        case SourceEvent::Kind::Havoc:
          havoc_.items.push_back({e.node_id, e.value});
          break;
        case SourceEvent::Kind::MkRef:
          mkref_.items.push_back({e.node_id, e.value});
          break;
        case SourceEvent::Kind::Deref:
          deref_.items.push_back({e.node_id, e.value});
          break;
        case SourceEvent::Kind::Assign:
          assign_.items.push_back({e.node_id, e.value});
          break;
        case SourceEvent::Kind::IfZ:
          ifz_.items.push_back({e.node_id, e.value});
          break;
        case SourceEvent::Kind::Call:
          call_.items.push_back({e.node_id, 0});
          break;
        case SourceEvent::Kind::Ret:
          ret_.items.push_back({e.node_id, 0});
          break;
        case SourceEvent::Kind::Fail:
          src_failed_ = true;
          fail_node_ = e.node_id;
          break;
        case SourceEvent::Kind::Done:
          src_done_ = true;
          done_value_ = e.value;
          break;
        default:
          break;  // Alias and Drop effects carry no replay obligations.
      }
    }
  }

  struct Outcome {
    std::optional<OracleDivergence> divergence;
    bool failed = false;
    bool completed = false;
    long long final_value = 0;
  };

  Outcome go() {
    Outcome out;
    try {
      if (!src_done_ && !src_failed_)
        bail("the recording does not end in Done or Fail");
      envs_.emplace_back();
      const TargetTerm* cur = p_.main_t.get();
      for (;;) {
        ++steps_;
        if (steps_ > kMaxReplaySteps) bail("replay exceeded its step budget");
        const TargetTerm& t = *cur;

        if (const auto* v = std::get_if<TVar>(&t.node)) {
          if (frames_.empty()) {
            finish(*v, out);
            return out;
          }
          take(ret_, t.origin);
          Frame f = std::move(frames_.back());
          frames_.pop_back();
          if (f.binders.size() != v->names.size())
            bail("call bound " + std::to_string(f.binders.size()) +
                 " values but the function returned " +
                 std::to_string(v->names.size()));
          std::vector<OValue> vals;
          vals.reserve(v->names.size());
          for (const auto& nm : v->names) vals.push_back(lookup(nm));
          envs_.pop_back();
          for (std::size_t i = 0; i < f.binders.size(); ++i)
            env()[f.binders[i]] = std::move(vals[i]);
          cur = f.resume;
          continue;
        }

        if (const auto* l = std::get_if<TLetArith>(&t.node)) {
          env()[l->x] = OValue::of(eval_arith(l->value));
          cur = l->body.get();
          continue;
        }

        if (const auto* l = std::get_if<TLetAtom>(&t.node)) {
          env()[l->x] = atom_binding(l->value, t.origin);
          cur = l->body.get();
          continue;
        }

        if (const auto* l = std::get_if<TLetPair>(&t.node)) {
          OValue a = pair_component(l->fst);
          OValue b = pair_component(l->snd);
          check_effect(t.origin, a);
          env()[l->x] = OValue::mk_pair(std::move(a), std::move(b));
          cur = l->body.get();
          continue;
        }

        if (const auto* c = std::get_if<TLetCall>(&t.node)) {
          take(call_, t.origin);
          const TargetFnDef* fn = p_.find_fn(c->fn);
          if (!fn) bail("call to unknown function '" + c->fn + "'");
          if (fn->params.size() != c->args.size())
            bail("function '" + c->fn + "' takes " +
                 std::to_string(fn->params.size()) + " arguments, got " +
                 std::to_string(c->args.size()));
          Env callee;
          for (std::size_t i = 0; i < fn->params.size(); ++i)
            callee[fn->params[i]] = lookup(c->args[i]);
          frames_.push_back(Frame{c->body.get(), c->binders});
          envs_.push_back(std::move(callee));
          cur = fn->body.get();
          continue;
        }

        if (const auto* a = std::get_if<TAssume>(&t.node)) {
          handle_assume(atom_pure(a->a), atom_pure(a->b));
          cur = a->cont.get();
          continue;
        }

        if (const auto* i = std::get_if<TIfZ>(&t.node)) {
          long long v = as_int(lookup(i->x), "branch scrutinee");
          QEntry e = take(ifz_, t.origin);
          if (e.value != v)
            bail("branch scrutinee " + std::to_string(v) +
                 " differs from the recorded " + std::to_string(e.value));
          cur = v == 0 ? i->then_t.get() : i->else_t.get();
          continue;
        }

        // fail
        if (!src_failed_)
          bail("replay reached fail but the recorded run completed");
        if (fail_node_ != t.origin)
          bail("replay failed at a different site than the recording");
        drained_or_bail();
        out.failed = true;
        return out;
      }
    } catch (Bail& b) {
      b.d.step = steps_;
      out.divergence = std::move(b.d);
      return out;
    }
  }

  std::vector<std::optional<long long>> prophecy_table() {
    std::vector<std::optional<long long>> out(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      out[i] = tokens_.value_of(static_cast<int>(i));
    return out;
  }

 private:
  const TargetProgram& p_;
  bool resolving_ = false;
  std::vector<std::optional<long long>> table_;
  TokenTable tokens_;
  int draw_idx_ = 0;

  Queue havoc_, deref_, mkref_, assign_, ifz_, call_, ret_;
  bool src_done_ = false, src_failed_ = false;
  long long done_value_ = 0;
  int fail_node_ = -1;

  std::vector<Env> envs_;
  std::vector<Frame> frames_;
  long long steps_ = 0;

  [[noreturn]] void bail(std::string msg) { throw Bail{{0, std::move(msg)}}; }

  Env& env() { return envs_.back(); }

  const OValue& lookup(const std::string& x) {
    auto it = env().find(x);
    if (it == env().end()) bail("unbound register '" + x + "'");
    return it->second;
  }

  long long as_int(const OValue& v, const std::string& what) {
    if (v.kind == OValue::Kind::Int) return v.n;
    if (v.kind == OValue::Kind::Token) {
      if (resolving_) {
        auto known = tokens_.value_of(v.token);
        if (known) return *known;
      }
      bail(what + " depends on a draw nothing has pinned");
    }
    bail(what + " is a pair, expected an integer");
  }

  QEntry take(Queue& q, int node) {
    if (q.pos >= q.items.size())
      bail(std::string("replay performed a ") + q.what +
           " the recording does not have");
    QEntry e = q.items[q.pos++];
    if (e.node != node)
      bail(std::string("replay ") + q.what +
           " happened at a different site than recorded");
    return e;
  }

  void drained_or_bail() {
    for (Queue* q : {&havoc_, &deref_, &mkref_, &assign_, &ifz_, &call_, &ret_})
      if (q->pos < q->items.size())
        bail(std::string("the recording has ") + q->what +
             " effects the replay never performed");
  }

  long long eval_arith(const Arith& a) {
    switch (a.op) {
      case Arith::Op::Const: return a.n;
      case Arith::Op::Var: return as_int(lookup(a.var), "'" + a.var + "'");
      case Arith::Op::Add: return eval_arith(*a.lhs) + eval_arith(*a.rhs);
      case Arith::Op::Sub: return eval_arith(*a.lhs) - eval_arith(*a.rhs);
      case Arith::Op::Mul: return eval_arith(*a.lhs) * eval_arith(*a.rhs);
      case Arith::Op::Eq: return eval_arith(*a.lhs) == eval_arith(*a.rhs) ? 0 : 1;
      case Arith::Op::Lt: return eval_arith(*a.lhs) < eval_arith(*a.rhs) ? 0 : 1;
      case Arith::Op::Le: return eval_arith(*a.lhs) <= eval_arith(*a.rhs) ? 0 : 1;
    }
    bail("unknown arithmetic operator");
  }

  /// Atoms in pure positions: assume operands and pair components that are
  /// not draws.  No recording traffic.
  OValue atom_pure(const Atom& a) {
    switch (a.kind) {
      case Atom::Kind::Var: return lookup(a.var);
      case Atom::Kind::Fst:
      case Atom::Kind::Snd: {
        const OValue& v = lookup(a.var);
        if (v.kind != OValue::Kind::Pair)
          bail("projection of a non-pair '" + a.var + "'");
        return a.kind == Atom::Kind::Fst ? v.pair->first : v.pair->second;
      }
      case Atom::Kind::Const: return OValue::of(a.n);
      case Atom::Kind::Nondet:
        bail("draw in a position the translation never puts one");
    }
    bail("unknown atom kind");
  }

  OValue draw_prophecy() {
    int idx = draw_idx_++;
    if (resolving_) {
      tokens_.fresh();
      return OValue::tok(idx);
    }
    if (static_cast<std::size_t>(idx) < table_.size() && table_[idx])
      return OValue::of(*table_[idx]);
    return OValue::of(0);
  }

  /// Pair components: draws are prophecy slots; everything else is pure.
  OValue pair_component(const Atom& a) {
    if (a.kind != Atom::Kind::Nondet) return atom_pure(a);
    if (a.role == NondetRole::Havoc || a.role == NondetRole::UntrustedRead)
      bail("input draw inside a pair");
    return draw_prophecy();
  }

  /// Bindings made by a plain let: trusted reads check against the recorded
  /// read, input draws take the recorded value, prophecy draws resolve.
  OValue atom_binding(const Atom& a, int origin) {
    switch (a.kind) {
      case Atom::Kind::Fst: {
        QEntry e = take(deref_, origin);
        OValue v = atom_pure(a);
        long long n = as_int(v, "read through an owned reference");
        if (n != e.value)
          bail("read " + std::to_string(n) + " differs from the recorded " +
               std::to_string(e.value));
        return v;
      }
      case Atom::Kind::Nondet:
        switch (a.role) {
          case NondetRole::Havoc: {
            QEntry e = take(havoc_, origin);
            return OValue::of(e.value);
          }
          case NondetRole::UntrustedRead: {
            QEntry e = take(deref_, origin);
            return OValue::of(e.value);
          }
          default:
            return draw_prophecy();
        }
      default:
        return atom_pure(a);
    }
  }

  /// Consumes the allocation/write recording for a freshly built pair when
  /// its site matches, checking the stored value agrees.
  void check_effect(int origin, const OValue& first) {
    Queue* q = nullptr;
    if (mkref_.pos < mkref_.items.size() &&
        mkref_.items[mkref_.pos].node == origin) {
      q = &mkref_;
    } else if (assign_.pos < assign_.items.size() &&
               assign_.items[assign_.pos].node == origin) {
      q = &assign_;
    } else {
      return;
    }
    QEntry e = take(*q, origin);
    long long n = as_int(first, q->what);
    if (n != e.value)
      bail(std::string(q->what) + " stored " + std::to_string(n) +
           " but the recording stored " + std::to_string(e.value));
  }

  void handle_assume(OValue a, OValue b) {
    if (a.kind == OValue::Kind::Pair || b.kind == OValue::Kind::Pair)
      bail("assume over pairs");
    bool ta = a.kind == OValue::Kind::Token;
    bool tb = b.kind == OValue::Kind::Token;
    if (ta && tb) {
      if (!resolving_) bail("assume over unpinned draws in the checked pass");
      if (!tokens_.unite(a.token, b.token))
        bail("assume pins two draws to conflicting values");
      return;
    }
    if (ta || tb) {
      if (!resolving_) bail("assume over an unpinned draw in the checked pass");
      int t = ta ? a.token : b.token;
      long long v = ta ? b.n : a.n;
      if (!tokens_.bind(t, v))
        bail("assume pins a draw to two different values");
      return;
    }
    if (a.n != b.n)
      bail("assume violated: " + std::to_string(a.n) +
           " != " + std::to_string(b.n));
  }

  void finish(const TVar& v, Outcome& out) {
    if (!src_done_)
      bail("replay completed but the recorded run failed");
    drained_or_bail();
    if (v.names.empty()) bail("main returned no value");
    long long n = as_int(lookup(v.names.front()), "final value");
    if (n != done_value_)
      bail("final value " + std::to_string(n) +
           " differs from the recorded " + std::to_string(done_value_));
    out.completed = true;
    out.final_value = n;
  }
};

}  // namespace

OracleResult oracle_run(const TargetProgram& p,
                        const std::vector<SourceEvent>& events,
                        const OracleOptions& opts) {
  OracleResult out;
  Walker resolve(p, events, /*resolving=*/true, {});
  Walker::Outcome first = resolve.go();
  out.prophecies = resolve.prophecy_table();
  if (first.divergence) {
    out.divergence = std::move(first.divergence);
    out.target_failed = first.failed;
    out.completed = first.completed;
    out.final_value = first.final_value;
    return out;
  }

  auto table = out.prophecies;
  for (const auto& [idx, v] : opts.prophecy_overrides) {
    if (idx < 0) continue;
    if (static_cast<std::size_t>(idx) >= table.size()) table.resize(idx + 1);
    table[idx] = v;
  }

  Walker check(p, events, /*resolving=*/false, std::move(table));
  Walker::Outcome second = check.go();
  out.divergence = std::move(second.divergence);
  out.consistent = !out.divergence.has_value();
  out.target_failed = second.failed;
  out.completed = second.completed;
  out.final_value = second.final_value;
  return out;
}

}  // namespace bfo
