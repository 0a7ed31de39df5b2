#include "bfo/types.hpp"

#include "doctest.h"

using namespace bfo;

TEST_CASE("zero-amount borrows are normalized away at construction") {
  OwnType t = OwnType::make_ref("a", Rational(1), Borrow{"b", Rational(0)});
  CHECK(!t.borrow.has_value());
  CHECK(t == OwnType::make_ref("a", Rational(1)));
}

TEST_CASE("type printing uses the annotation syntax") {
  CHECK(OwnType::make_int().str() == "int");
  CHECK(OwnType::make_ref("a", Rational(1)).str() == "ref<a, 1>");
  CHECK(OwnType::make_ref("a", Rational(1, 2), Borrow{"b", Rational(1, 2)}).str() ==
        "ref<a, 0.5 lend b: 0.5>");
  CHECK(OwnType::make_ref("g", Rational(0), Borrow{"d", Rational(1)}).str() ==
        "ref<g, 0 lend d: 1>");
}

TEST_CASE("ownership helpers treat int as zero-ownership") {
  CHECK(OwnType::make_int().own_amount() == Rational(0));
  CHECK(OwnType::make_ref("a", Rational(1, 2)).own_amount() == Rational(1, 2));
  CHECK(OwnType::make_int().lend_amount() == Rational(0));
  CHECK(OwnType::make_ref("a", Rational(0), Borrow{"b", Rational(1, 4)}).lend_amount() ==
        Rational(1, 4));
}

TEST_CASE("lifetime order closes transitively and rejects cycles") {
  LifetimeEnv l;
  CHECK(l.add_order("c", "b"));
  CHECK(l.add_order("b", "a"));
  CHECK(l.less("c", "a"));  // transitive
  CHECK(!l.less("a", "c"));
  CHECK(!l.add_order("a", "c"));  // would close a cycle
  CHECK(l.is_minimal("c"));
  CHECK(!l.is_minimal("a"));
}

TEST_CASE("newlft pushes the new lifetime below every live one") {
  LifetimeEnv l;
  l.add("a");
  l.add("b");
  l.push_below_all("c");
  CHECK(l.less("c", "a"));
  CHECK(l.less("c", "b"));
  CHECK(l.is_minimal("c"));
  CHECK(!l.less("a", "b"));
}

TEST_CASE("erasing a lifetime restricts the order to the survivors") {
  LifetimeEnv l;
  CHECK(l.add_order("c", "b"));
  CHECK(l.add_order("b", "a"));
  l.erase("b");
  CHECK(!l.contains("b"));
  // The closure pair (c, a) was recorded before the erase and survives it.
  CHECK(l.less("c", "a"));
}

TEST_CASE("type environments overwrite in place and compare as maps") {
  TypeEnv g;
  g.set("x", OwnType::make_ref("a", Rational(1)));
  g.set("y", OwnType::make_int());
  g.set("x", OwnType::make_ref("a", Rational(1, 2)));
  CHECK(g.size() == 2);
  CHECK(g.entries()[0].first == "x");  // overwrite keeps position
  CHECK(*g.find("x") == OwnType::make_ref("a", Rational(1, 2)));

  TypeEnv h;
  h.set("y", OwnType::make_int());
  h.set("x", OwnType::make_ref("a", Rational(1, 2)));
  CHECK(g == h);  // order-insensitive

  CHECK(g.str() == "x: ref<a, 0.5>, y: int");

  g.erase("x");
  CHECK(!g.contains("x"));
  CHECK(g.size() == 1);
}

TEST_CASE("lifetime environment entailment checks vars and order pairs") {
  LifetimeEnv big;
  CHECK(big.add_order("b", "a"));
  big.add("c");
  LifetimeEnv small;
  CHECK(small.add_order("b", "a"));
  CHECK(big.entails(small));
  CHECK(!small.entails(big));  // missing c
  LifetimeEnv flipped;
  CHECK(flipped.add_order("a", "b"));
  CHECK(!big.entails(flipped));
}
