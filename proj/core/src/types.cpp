#include "bfo/types.hpp"

#include <algorithm>
#include <sstream>

namespace bfo {

std::string OwnType::str() const {
  if (is_int()) return "int";
  std::ostringstream os;
  os << "ref<" << lft << ", " << own.str();
  if (borrow) os << " lend " << borrow->lft << ": " << borrow->amount.str();
  os << ">";
  return os.str();
}

bool LifetimeEnv::contains(const std::string& a) const {
  return std::find(vars_.begin(), vars_.end(), a) != vars_.end();
}

void LifetimeEnv::add(const std::string& a) {
  if (!contains(a)) vars_.push_back(a);
}

void LifetimeEnv::push_below_all(const std::string& a) {
  std::vector<std::string> existing = vars_;
  add(a);
  for (const auto& b : existing) {
    if (b != a) lt_.insert({a, b});
  }
}

bool LifetimeEnv::add_order(const std::string& a, const std::string& b) {
  if (a == b) return false;
  if (lt_.count({b, a})) return false;
  add(a);
  add(b);
  lt_.insert({a, b});
  // Re-close: below(a) ∪ {a} all precede {b} ∪ above(b).
  std::vector<std::string> below{a}, above{b};
  for (const auto& [p, q] : lt_) {
    if (q == a) below.push_back(p);
    if (p == b) above.push_back(q);
  }
  for (const auto& p : below) {
    for (const auto& q : above) {
      if (p == q) return false;
      lt_.insert({p, q});
    }
  }
  return true;
}

bool LifetimeEnv::less(const std::string& a, const std::string& b) const {
  return lt_.count({a, b}) > 0;
}

bool LifetimeEnv::is_minimal(const std::string& a) const {
  for (const auto& b : vars_) {
    if (b != a && less(b, a)) return false;
  }
  return true;
}

void LifetimeEnv::erase(const std::string& a) {
  vars_.erase(std::remove(vars_.begin(), vars_.end(), a), vars_.end());
  for (auto it = lt_.begin(); it != lt_.end();) {
    if (it->first == a || it->second == a) {
      it = lt_.erase(it);
    } else {
      ++it;
    }
  }
}

bool LifetimeEnv::entails(const LifetimeEnv& other) const {
  for (const auto& v : other.vars_) {
    if (!contains(v)) return false;
  }
  for (const auto& p : other.lt_) {
    if (!lt_.count(p)) return false;
  }
  return true;
}

std::string LifetimeEnv::str() const {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (i) os << ", ";
    os << vars_[i];
  }
  os << "}";
  bool first = true;
  for (const auto& [a, b] : lt_) {
    os << (first ? " with " : ", ") << a << " < " << b;
    first = false;
  }
  return os.str();
}

bool TypeEnv::contains(const std::string& x) const { return find(x) != nullptr; }

const OwnType* TypeEnv::find(const std::string& x) const {
  for (const auto& [k, v] : entries_) {
    if (k == x) return &v;
  }
  return nullptr;
}

OwnType* TypeEnv::find(const std::string& x) {
  for (auto& [k, v] : entries_) {
    if (k == x) return &v;
  }
  return nullptr;
}

void TypeEnv::set(const std::string& x, OwnType t) {
  if (auto* slot = find(x)) {
    *slot = std::move(t);
  } else {
    entries_.emplace_back(x, std::move(t));
  }
}

void TypeEnv::erase(const std::string& x) {
  entries_.erase(
      std::remove_if(entries_.begin(), entries_.end(),
                     [&](const auto& kv) { return kv.first == x; }),
      entries_.end());
}

bool operator==(const TypeEnv& a, const TypeEnv& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (const auto& [k, v] : a.entries_) {
    const OwnType* u = b.find(k);
    if (!u || !(*u == v)) return false;
  }
  return true;
}

std::string TypeEnv::str() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) os << ", ";
    os << entries_[i].first << ": " << entries_[i].second.str();
  }
  return os.str();
}

std::string FnType::str() const {
  std::ostringstream os;
  os << "<";
  for (std::size_t i = 0; i < lft_params.size(); ++i) {
    if (i) os << ", ";
    os << lft_params[i];
  }
  os << ">(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) os << ", ";
    os << params[i].str();
  }
  os << ") -> (";
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (i) os << ", ";
    os << posts[i].str();
  }
  os << " | ";
  for (std::size_t i = 0; i < rets.size(); ++i) {
    if (i) os << ", ";
    os << rets[i].str();
  }
  os << ")";
  return os.str();
}

}  // namespace bfo
