#include "bfo/type_algebra.hpp"

#include <sstream>

namespace bfo {

namespace {

AddError err(const std::string& reason) { return AddError{reason}; }

bool fraction_ok(const OwnType& t) {
  if (!t.is_ref()) return true;
  Rational total = t.own + t.lend_amount();
  return t.own >= Rational(0) && total <= Rational(1);
}

/// One orientation of the borrow rule:
///   ref<a, r+s> = ref<a, r lend b: s> + ref<b, s>
/// lender carries the borrow, borrowed side is borrow-free with own == s.
std::optional<OwnType> try_borrow(const OwnType& lender, const OwnType& borrowed) {
  if (!lender.is_ref() || !borrowed.is_ref()) return std::nullopt;
  if (!lender.borrow) return std::nullopt;
  if (lender.borrow->lft != borrowed.lft) return std::nullopt;
  if (borrowed.borrow) return std::nullopt;
  if (lender.borrow->amount != borrowed.own) return std::nullopt;
  return OwnType::make_ref(lender.lft, lender.own + borrowed.own);
}

}  // namespace

Expected<AddOk, AddError> add_types(const OwnType& a, const OwnType& b) {
  if (a.is_int() && b.is_int()) {
    return AddOk{OwnType::make_int(), AddRule::Int, false};
  }
  if (a.is_int() != b.is_int()) {
    return err("cannot add int and reference types");
  }

  if (a.lft != b.lft) {
    // Only the borrow rule can bridge distinct base lifetimes.
    if (auto r = try_borrow(a, b); r && fraction_ok(*r)) {
      return AddOk{*r, AddRule::Borrow, false};
    }
    if (auto r = try_borrow(b, a); r && fraction_ok(*r)) {
      return AddOk{*r, AddRule::Borrow, false};
    }
    return err("references have different lifetimes (" + a.lft + " vs " + b.lft +
               ") and neither side borrows the other's lifetime");
  }

  // Same base lifetime: share. Both borrows, if present, must target the
  // same lifetime; the amounts add.
  std::optional<Borrow> borrow;
  if (a.borrow && b.borrow) {
    if (a.borrow->lft != b.borrow->lft) {
      return err("borrow targets differ: " + a.borrow->lft + " vs " + b.borrow->lft);
    }
    borrow = Borrow{a.borrow->lft, a.borrow->amount + b.borrow->amount};
  } else if (a.borrow) {
    borrow = a.borrow;
  } else if (b.borrow) {
    borrow = b.borrow;
  }

  Rational own = a.own + b.own;
  if (own > Rational(1)) {
    return err("ownership sum " + own.str() + " exceeds 1");
  }
  if (borrow && borrow->amount > Rational(1)) {
    return err("borrow sum " + borrow->amount.str() + " exceeds 1");
  }
  OwnType result = OwnType::make_ref(a.lft, own, borrow);
  if (!fraction_ok(result)) {
    return err("result ownership " + own.str() + " + lend " +
               result.lend_amount().str() + " exceeds 1");
  }

  // A self-borrow counterpart would also satisfy the borrow rule here; the
  // share reading wins and the overlap is surfaced to diagnostics.
  bool ambiguous = try_borrow(a, b).has_value() || try_borrow(b, a).has_value();
  return AddOk{result, AddRule::Share, ambiguous};
}

Expected<OwnType, AddError> split_type(const OwnType& whole, const OwnType& left) {
  if (whole.is_int() && left.is_int()) return OwnType::make_int();
  if (whole.is_int() != left.is_int()) {
    return err("cannot split int against reference");
  }
  if (!fraction_ok(whole)) {
    // No addition can produce such a whole, so nothing splits off it either.
    return err("whole ownership " + whole.own.str() + " + lend " +
               whole.lend_amount().str() + " exceeds 1");
  }

  if (left.lft == whole.lft) {
    // Subtract within the share rule, or peel a borrow off an unborrowed whole.
    // A self-targeting borrow cannot peel: additions under one lifetime always
    // recombine by sharing, so the inverse must subtract instead.
    if (left.borrow && !whole.borrow && left.borrow->lft != whole.lft) {
      // whole<a, r+s> = left<a, r lend b: s> + right<b, s>
      if (left.own + left.borrow->amount != whole.own) {
        return err("borrow split does not preserve ownership: " + left.own.str() +
                   " + " + left.borrow->amount.str() + " != " + whole.own.str());
      }
      OwnType right = OwnType::make_ref(left.borrow->lft, left.borrow->amount);
      if (!fraction_ok(right)) return err("borrowed side exceeds 1");
      return right;
    }
    if (left.borrow && whole.borrow && left.borrow->lft != whole.borrow->lft) {
      return err("borrow targets differ: " + left.borrow->lft + " vs " +
                 whole.borrow->lft);
    }
    if (left.own > whole.own) {
      return err("left ownership " + left.own.str() + " exceeds whole " +
                 whole.own.str());
    }
    Rational own_rest = whole.own - left.own;
    std::optional<Borrow> borrow_rest;
    Rational lend_left = left.lend_amount();
    Rational lend_whole = whole.lend_amount();
    if (lend_left > lend_whole) {
      return err("left lends more than the whole does");
    }
    if (lend_whole > lend_left) {
      borrow_rest = Borrow{whole.borrow->lft, lend_whole - lend_left};
    }
    OwnType right = OwnType::make_ref(whole.lft, own_rest, borrow_rest);
    if (!fraction_ok(right)) return err("remainder exceeds 1");
    return right;
  }

  // left lives at a different lifetime: it must be the borrowed side.
  // whole<a, R> = right<a, R - s lend b: s> + left<b, s>
  if (whole.borrow) {
    return err("cannot carve a borrow out of an already-lending type");
  }
  if (left.borrow) {
    return err("borrowed side must be borrow-free");
  }
  if (left.own.is_zero()) {
    return err("borrowed side must take a positive amount");
  }
  if (left.own > whole.own) {
    return err("borrowed amount " + left.own.str() + " exceeds available " +
               whole.own.str());
  }
  return OwnType::make_ref(whole.lft, whole.own - left.own,
                           Borrow{left.lft, left.own});
}

Expected<TypeEnv, AddError> env_add(const TypeEnv& g1, const TypeEnv& g2) {
  TypeEnv out;
  for (const auto& [x, t1] : g1.entries()) {
    if (const OwnType* t2 = g2.find(x)) {
      auto sum = add_types(t1, *t2);
      if (!sum.ok()) {
        return err("at " + x + ": " + sum.error().reason);
      }
      out.set(x, sum->type);
    } else {
      out.set(x, t1);
    }
  }
  for (const auto& [x, t2] : g2.entries()) {
    if (!g1.contains(x)) out.set(x, t2);
  }
  return out;
}

bool well_formed(const LifetimeEnv& l, const OwnType& t) {
  if (t.is_int()) return true;
  if (!l.contains(t.lft)) return false;
  if (!fraction_ok(t)) return false;
  if (t.borrow) {
    if (!l.contains(t.borrow->lft)) return false;
    if (!l.less(t.borrow->lft, t.lft)) return false;
  }
  return true;
}

bool well_formed_env(const LifetimeEnv& l, const TypeEnv& g) {
  for (const auto& [x, t] : g.entries()) {
    if (!well_formed(l, t)) return false;
  }
  return true;
}

Expected<std::pair<LifetimeEnv, TypeEnv>, LftError> end_lifetime(
    const LifetimeEnv& l, const TypeEnv& g, const std::string& alpha) {
  if (!l.contains(alpha)) {
    return LftError{LftError::Kind::Unknown, alpha};
  }
  if (!l.is_minimal(alpha)) {
    return LftError{LftError::Kind::NotMinimal, alpha};
  }
  LifetimeEnv l2 = l;
  l2.erase(alpha);
  TypeEnv g2;
  for (const auto& [x, t] : g.entries()) {
    if (t.is_ref() && t.lft == alpha) continue;  // dropped with the lifetime
    if (t.is_ref() && t.borrow && t.borrow->lft == alpha) {
      g2.set(x, OwnType::make_ref(t.lft, t.own + t.borrow->amount));
    } else {
      g2.set(x, t);
    }
  }
  return std::make_pair(std::move(l2), std::move(g2));
}

OwnershipMetrics ownership_metrics(const TypeEnv& g,
                                   const std::map<std::string, long long>& regs,
                                   long long addr) {
  OwnershipMetrics m;
  m.own_total = Rational(0);
  for (const auto& [x, t] : g.entries()) {
    if (!t.is_ref()) continue;
    auto it = regs.find(x);
    if (it == regs.end() || it->second != addr) continue;
    m.own_total += t.own;
    m.own_by_lft[t.lft] += t.own;
    if (t.borrow) {
      m.borrowed_by[t.borrow->lft] += t.borrow->amount;
      m.borrowed_from[t.lft] += t.borrow->amount;
      m.brr[{t.lft, t.borrow->lft}] += t.borrow->amount;
    }
  }
  return m;
}

std::optional<std::string> borrow_consistency_violation(const OwnershipMetrics& m) {
  // Collect every lifetime mentioned by any metric.
  std::set<std::string> lfts;
  for (const auto& [a, _] : m.own_by_lft) lfts.insert(a);
  for (const auto& [a, _] : m.borrowed_by) lfts.insert(a);
  for (const auto& [a, _] : m.borrowed_from) lfts.insert(a);
  for (const auto& a : lfts) {
    Rational bby = m.borrowed_by.count(a) ? m.borrowed_by.at(a) : Rational(0);
    Rational own = m.own_by_lft.count(a) ? m.own_by_lft.at(a) : Rational(0);
    Rational bfrm = m.borrowed_from.count(a) ? m.borrowed_from.at(a) : Rational(0);
    if (bby > own + bfrm) return a;
  }
  return std::nullopt;
}

}  // namespace bfo
