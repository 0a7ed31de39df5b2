#include "bfo/translate.hpp"

#include <stdexcept>
#include <utility>

namespace bfo {

namespace {

/// Erase ownership: a reference keeps its lifetime but owns nothing; an
/// integer is unchanged.
OwnType nullify(const OwnType& t) {
  if (!t.is_ref()) return t;
  return OwnType::make_ref(t.lft, Rational(0));
}

bool owns(const OwnType& t) { return t.is_ref() && t.own > 0; }

class Translator {
 public:
  Translator(const TypedProgram& tp, const TranslateOptions& opts)
      : tp_(tp), opts_(opts) {}

  TargetProgram run() {
    TargetProgram out;
    for (const auto& fn : tp_.program.fns) {
      cur_refs_ = &tp_.fns.at(fn.name).ref_params;
      in_fn_ = true;
      TargetFnDef d;
      d.name = fn.name;
      d.params = fn.param_names;
      d.ref_params = *cur_refs_;
      d.ret_count = static_cast<int>(fn.sig.rets.size());
      d.body = tr(*fn.body);
      out.fns.push_back(std::move(d));
    }
    in_fn_ = false;
    cur_refs_ = nullptr;
    out.main_t = tr(*tp_.program.main_e);
    return out;
  }

 private:
  const TypedProgram& tp_;
  TranslateOptions opts_;
  const std::vector<std::string>* cur_refs_ = nullptr;
  bool in_fn_ = false;

  const NodeInfo& info(const SourceExpr& e) const {
    return tp_.nodes.at(static_cast<size_t>(e.id));
  }

  /// Ownership conversion: rebinds x (old type tx, new type rx) and y (old
  /// ty, new ry) so their value slots agree with the new distribution. At
  /// most one argument swap is ever needed.
  TargetTermPtr conv(const OwnType& tx, const OwnType& rx, const OwnType& ty,
                     const OwnType& ry, const std::string& x,
                     const std::string& y, TargetTermPtr t, int origin,
                     bool swapped = false) {
    if (!owns(tx) && !owns(rx)) return t;  // x's slot is untrusted both ways
    if (owns(ty) && owns(rx) && owns(ry)) {
      // Both keep ownership afterwards: x picks up y's current value.
      return TargetTerm::make(
          origin, TLetPair{x, Atom::make_fst(y), Atom::make_snd(x), std::move(t)});
    }
    if (owns(tx) && !owns(rx)) {
      // x hands its value (and the obligation to justify it) over to y.
      auto inner = TargetTerm::make(
          origin, TLetPair{x, Atom::make_snd(y), Atom::make_snd(x), std::move(t)});
      return TargetTerm::make(origin, TLetPair{y, Atom::make_fst(x),
                                               Atom::make_snd(y),
                                               std::move(inner)});
    }
    if (swapped)
      throw std::logic_error("ownership conversion: no case applies");
    return conv(ty, ry, tx, rx, y, x, std::move(t), origin, true);
  }

  /// `let x = (_, _) in rest`, collapsing the placeholder pair into an
  /// immediate rebinding of x when the peephole is on.
  TargetTermPtr fresh_pair_then(const std::string& x, TargetTermPtr rest,
                                int origin) {
    Atom pad = Atom::make_nondet(NondetRole::Pad, x);
    Atom proph = Atom::make_nondet(NondetRole::Prophecy, x);
    if (opts_.peephole) {
      if (auto* rebind = std::get_if<TLetPair>(&rest->node);
          rebind && rebind->x == x) {
        auto subst = [&](const Atom& a) {
          if (a.kind == Atom::Kind::Fst && a.var == x) return pad;
          if (a.kind == Atom::Kind::Snd && a.var == x) return proph;
          return a;
        };
        rebind->fst = subst(rebind->fst);
        rebind->snd = subst(rebind->snd);
        return rest;
      }
    }
    return TargetTerm::make(origin, TLetPair{x, pad, proph, std::move(rest)});
  }

  TargetTermPtr tr(const SourceExpr& e) {
    const NodeInfo& ni = info(e);
    return std::visit(
        [&](const auto& n) -> TargetTermPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, SVar>) {
            const TailEvidence& tail = *ni.tail;
            // A split return carves a fresh register off the kept binding
            // (primed name), so the returned share and the parameter keep
            // separate prophecy slots.
            std::vector<std::string> names;
            for (const auto& s : tail.slots) {
              if (s.kind != ReturnKind::SplitReturn) {
                names.push_back(s.name);
                continue;
              }
              std::string carved = s.name + "'";
              auto taken = [&](const std::string& c) {
                for (const auto& m : names)
                  if (m == c) return true;
                return false;
              };
              while (taken(carved)) carved += "'";
              names.push_back(carved);
            }
            if (in_fn_)
              names.insert(names.end(), cur_refs_->begin(), cur_refs_->end());
            auto t = TargetTerm::make(
                e.id,
                TVar{names, static_cast<int>(tail.slots.size())});
            for (size_t i = tail.slots.size(); i-- > 0;) {
              const ReturnSlot& s = tail.slots[i];
              if (s.kind != ReturnKind::SplitReturn) continue;
              t = conv(nullify(s.source_before), s.ret_type, s.source_before,
                       s.source_after, names[i], s.name, std::move(t), e.id);
              t = fresh_pair_then(names[i], std::move(t), e.id);
            }
            // Dropped references settle their prophecies here.
            for (auto it = tail.dropped_refs.rbegin();
                 it != tail.dropped_refs.rend(); ++it)
              t = TargetTerm::make(e.id,
                                   TAssume{Atom::make_fst(it->first),
                                           Atom::make_snd(it->first),
                                           std::move(t)});
            return t;
          } else if constexpr (std::is_same_v<T, SLetArith>) {
            return TargetTerm::make(
                e.id, TLetArith{n.x, n.value.clone(), tr(*n.body)});
          } else if constexpr (std::is_same_v<T, SLetHavoc>) {
            return TargetTerm::make(
                e.id, TLetAtom{n.x, Atom::make_nondet(NondetRole::Havoc),
                               tr(*n.body)});
          } else if constexpr (std::is_same_v<T, SLetAlias>) {
            if (!ni.split)  // integer copy
              return TargetTerm::make(
                  e.id, TLetAtom{n.x, Atom::make_var(n.y), tr(*n.body)});
            const SplitChoice& sp = *ni.split;
            auto t = conv(nullify(sp.whole), sp.x_type, sp.whole, sp.y_type,
                          n.x, n.y, tr(*n.body), e.id);
            return fresh_pair_then(n.x, std::move(t), e.id);
          } else if constexpr (std::is_same_v<T, SLetMkRef>) {
            return TargetTerm::make(
                e.id, TLetPair{n.x, Atom::make_var(n.y),
                               Atom::make_nondet(NondetRole::Prophecy, n.x),
                               tr(*n.body)});
          } else if constexpr (std::is_same_v<T, SLetDeref>) {
            if (*ni.deref_own_positive)
              return TargetTerm::make(
                  e.id, TLetAtom{n.x, Atom::make_fst(n.y), tr(*n.body)});
            return TargetTerm::make(
                e.id, TLetAtom{n.x, Atom::make_nondet(NondetRole::UntrustedRead),
                               tr(*n.body)});
          } else if constexpr (std::is_same_v<T, SAssign>) {
            return TargetTerm::make(
                e.id, TLetPair{n.x, Atom::make_var(n.y), Atom::make_snd(n.x),
                               tr(*n.cont)});
          } else if constexpr (std::is_same_v<T, SIfZ>) {
            return TargetTerm::make(
                e.id, TIfZ{n.x, tr(*n.then_e), tr(*n.else_e)});
          } else if constexpr (std::is_same_v<T, SLetCall>) {
            const CallEvidence& ce = *ni.call;
            TLetCall c;
            c.binders = n.binders;
            c.ret_count = static_cast<int>(n.binders.size());
            for (int i : ce.ref_args) c.binders.push_back(n.args.at(i));
            c.fn = n.fn;
            c.args = n.args;
            c.body = tr(*n.body);
            return TargetTerm::make(e.id, std::move(c));
          } else if constexpr (std::is_same_v<T, SAliasAssume>) {
            const AliasChoice& ac = *ni.alias;
            return conv(ac.x_before, ac.x_after, ac.y_before, ac.y_after, n.x,
                        n.y, tr(*n.cont), e.id);
          } else if constexpr (std::is_same_v<T, SNewLft>) {
            return tr(*n.body);
          } else if constexpr (std::is_same_v<T, SEndLft>) {
            auto t = tr(*n.cont);
            const auto& drops = *ni.endlft_drops;
            for (auto it = drops.rbegin(); it != drops.rend(); ++it)
              t = TargetTerm::make(e.id,
                                   TAssume{Atom::make_fst(it->first),
                                           Atom::make_snd(it->first),
                                           std::move(t)});
            return t;
          } else if constexpr (std::is_same_v<T, SFail>) {
            return TargetTerm::make(e.id, TFail{});
          } else {
            throw std::logic_error("translate: unhandled node");
          }
        },
        e.node);
  }
};

}  // namespace

TargetProgram translate(const TypedProgram& tp, const TranslateOptions& opts) {
  return Translator(tp, opts).run();
}

}  // namespace bfo
