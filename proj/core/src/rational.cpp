#include "bfo/rational.hpp"

#include <boost/multiprecision/cpp_int.hpp>

namespace bfo {

namespace mp = boost::multiprecision;

std::optional<Rational> Rational::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::string s(text);

  auto parse_int = [](const std::string& t) -> std::optional<mp::cpp_int> {
    if (t.empty()) return std::nullopt;
    bool neg = t[0] == '-';
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return std::nullopt;
    for (std::size_t j = i; j < t.size(); ++j) {
      if (t[j] < '0' || t[j] > '9') return std::nullopt;
    }
    // Strip leading zeros: cpp_int's string constructor reads "0..." as octal.
    while (i + 1 < t.size() && t[i] == '0') ++i;
    mp::cpp_int v(t.substr(i));
    return neg ? mp::cpp_int(-v) : v;
  };

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    auto num = parse_int(s.substr(0, slash));
    auto den = parse_int(s.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    return Rational(Backing(*num) / Backing(*den));
  }

  auto dot = s.find('.');
  if (dot != std::string::npos) {
    std::string head = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    if (frac.empty()) return std::nullopt;
    bool neg = !head.empty() && head[0] == '-';
    if (head == "-" || head == "+") head += "0";
    if (head.empty()) head = "0";
    auto whole = parse_int(head);
    auto fpart = parse_int(frac);
    if (!whole || !fpart || *fpart < 0) return std::nullopt;
    mp::cpp_int scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    mp::cpp_int num = mp::abs(*whole) * scale + *fpart;
    if (neg || *whole < 0) num = -num;
    return Rational(Backing(num) / Backing(scale));
  }

  auto whole = parse_int(s);
  if (!whole) return std::nullopt;
  return Rational(Backing(*whole));
}

bool Rational::is_integer() const { return mp::denominator(v_) == 1; }

long long Rational::as_integer() const {
  return static_cast<long long>(mp::numerator(v_));
}

std::string Rational::str() const {
  mp::cpp_int num = mp::numerator(v_);
  mp::cpp_int den = mp::denominator(v_);
  if (den == 1) return num.str();

  // Finite decimal iff den = 2^a * 5^b; scale to 10^max(a,b).
  mp::cpp_int d = den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d == 1) {
    int digits = twos > fives ? twos : fives;
    mp::cpp_int scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    mp::cpp_int scaled = num * scale / den;
    bool neg = scaled < 0;
    std::string s = mp::cpp_int(mp::abs(scaled)).str();
    if (static_cast<int>(s.size()) <= digits) {
      s.insert(0, static_cast<std::size_t>(digits) - s.size() + 1, '0');
    }
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return neg ? "-" + s : s;
  }
  return num.str() + "/" + den.str();
}

}  // namespace bfo
