#include "doctest.h"
#include "twist/ncalg.hpp"

#include <random>

using namespace twist;
using namespace twist::ncalg;

namespace {

Context abstract_ctx() { return Context{}; }

Context crossed_ctx() {
  Context c;
  c.mode = SigmaMode::CrossedProduct;
  return c;
}

Expr E(const std::string& s) { return Expr::parse(s); }

Word random_word(std::mt19937& rng, int len) {
  std::vector<Atom> alphabet = {Atom::alg("a"),     Atom::alg("b", 1), Atom::alg("c", 0, true),
                                Atom::group(1, 1),  Atom::group(1, -1), Atom::group(2, 1),
                                Atom::dpow(1),      Atom::dpow(-1),     Atom::absd(1),
                                Atom::absd(-3),     Atom::grading(),    Atom::alg("a").with_op('d', 1)};
  std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);
  Word w;
  for (int j = 0; j < len; ++j) w.push_back(alphabet[pick(rng)]);
  return w;
}

Word letter_word(std::mt19937& rng, int len, bool groups) {
  std::vector<Atom> alphabet = {Atom::alg("a"), Atom::alg("b", -1), Atom::alg("c", 0, true)};
  if (groups) {
    alphabet.push_back(Atom::group(1, 1));
    alphabet.push_back(Atom::group(2, -1));
  }
  std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);
  Word w;
  for (int j = 0; j < len; ++j) w.push_back(alphabet[pick(rng)]);
  return w;
}

}  // namespace

TEST_CASE("normal form examples") {
  CHECK(E("U1 D^2") == E("mu1^2 D^2 U1"));
  CHECK(E("g g") == Expr::one());
  CHECK(E("D D^-1") == Expr::one());
  CHECK(E("U1 |D|^3 U1^-1") == E("mu1^3 |D|^3"));
  CHECK(E("D g") == E("-g D"));
  CHECK(E("U1 a U1*") == Expr::atom(Atom::parse("U1>a")));
  CHECK(E("D |D|^-1 D |D|^-1") == Expr::one());
}

TEST_CASE("text format round trip") {
  for (std::string s : {"(3/2)*sqrtpi*mu1^-2 s^2(a) D^-1 |D|^3 U1",
                        "g a d(s^-1(b)) D^-1 - (1+i) U1.U2^-1>c* U2",
                        "-2 n^2(d(a)) |D|^-3 + sqrt2i*sqrtpi s^3(t(s(b*)))"}) {
    Expr e = E(s);
    CHECK(E(e.str()) == e);
  }
  TraceExpr t = TraceExpr::parse("RES{a D} - (1/2) DIX[2]{g a d(b) D^-2} + TAU0{g a}");
  CHECK(TraceExpr::parse(t.str()).str() == t.str());
  CHECK(t.summands().size() == 3);
}

TEST_CASE("normalize is idempotent and multiplicative") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 400; ++trial) {
    int lu = static_cast<int>(rng() % 5), lv = static_cast<int>(rng() % 4);
    Word u = random_word(rng, lu), v = random_word(rng, lv);
    Word uv = u;
    uv.insert(uv.end(), v.begin(), v.end());
    auto [c, w] = normalize_word(uv);
    auto [c2, w2] = normalize_word(w);
    CHECK(c2 == Coeff(1));
    CHECK(w2 == w);
    CHECK(Expr(uv) == Expr(u) * Expr(v));
  }
}

TEST_CASE("apply_sigma") {
  Context cp = crossed_ctx();
  CHECK(apply_sigma(E("a U1"), 1, cp) == E("mu1^-1 a U1"));
  CHECK(apply_sigma(E("a"), 5, cp) == E("a"));
  Expr x = E("a U1"), y = E("b U2");
  CHECK(apply_sigma(x * y, 1, cp) == apply_sigma(x, 1, cp) * apply_sigma(y, 1, cp));
  Context ab = abstract_ctx();
  CHECK(apply_sigma(E("a U1"), 2, ab) == E("mu1^-2 s^2(a) U1"));
  std::mt19937 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Expr e(letter_word(rng, 4, true));
    int k = static_cast<int>(rng() % 7) - 3, l = static_cast<int>(rng() % 7) - 3;
    CHECK(apply_sigma(apply_sigma(e, k, ab), l, ab) == apply_sigma(e, k + l, ab));
    CHECK(apply_sigma(apply_sigma(e, k, cp), l, cp) == apply_sigma(e, k + l, cp));
  }
}

TEST_CASE("twisted commutator examples") {
  Context cp = crossed_ctx();
  CHECK(twisted_commutator(E("a U1"), WithOp::D, cp, CommForm::Formal) == E("d(a) U1"));
  CHECK(twisted_commutator(E("a U1"), WithOp::D, cp) == E("D a U1 - a D U1"));
  CHECK(twisted_commutator(Expr::one(), WithOp::D, cp).is_zero());
  CHECK(twisted_commutator(E("U1"), WithOp::DSquared, cp).is_zero());
  Context ab = abstract_ctx();
  for (auto op : {WithOp::D, WithOp::AbsD, WithOp::DSquared}) {
    int m = op == WithOp::DSquared ? 2 : 1;
    Expr a = E("a U1 b"), b = E("c* U2");
    Expr lhs = twisted_commutator(a * b, op, ab);
    Expr rhs = apply_sigma(a, m, ab) * twisted_commutator(b, op, ab) + twisted_commutator(a, op, ab) * b;
    CHECK((lhs - rhs).is_zero());
    Expr formal = twisted_commutator(a * b, op, ab, CommForm::Formal);
    CHECK(expand_formal(formal, ab) == lhs);
  }
}

TEST_CASE("twisted Leibniz on random words") {
  std::mt19937 rng(11);
  Context ab = abstract_ctx();
  for (int trial = 0; trial < 60; ++trial) {
    Expr a(letter_word(rng, 1 + static_cast<int>(rng() % 3), true));
    Expr b(letter_word(rng, 1 + static_cast<int>(rng() % 3), true));
    Expr lhs = twisted_commutator(a * b, WithOp::D, ab);
    Expr rhs = apply_sigma(a, 1, ab) * twisted_commutator(b, WithOp::D, ab) +
               twisted_commutator(a, WithOp::D, ab) * b;
    CHECK(lhs == rhs);
  }
}

TEST_CASE("higher twisted commutators") {
  Context ab = abstract_ctx();
  Expr a = E("a");
  CHECK(higher_twisted_commutator(a, 0, HigherForm::Plain, ab) == a);
  CHECK(higher_twisted_commutator(a, 1, HigherForm::Plain, ab) == E("D^2 a - s^2(a) D^2"));
  for (int k = 0; k < 4; ++k) {
    Expr rec = Expr::D(2) * higher_twisted_commutator(a, k, HigherForm::Plain, ab) -
               higher_twisted_commutator(apply_sigma(a, 2, ab), k, HigherForm::Plain, ab) * Expr::D(2);
    CHECK(rec == higher_twisted_commutator(a, k + 1, HigherForm::Plain, ab));
    Expr recD = Expr::D(2) * higher_twisted_commutator(a, k, HigherForm::WithD, ab) -
                higher_twisted_commutator(apply_sigma(a, 2, ab), k, HigherForm::WithD, ab) * Expr::D(2);
    CHECK(recD == higher_twisted_commutator(a, k + 1, HigherForm::WithD, ab));
  }
  CHECK_THROWS(higher_twisted_commutator(a, -1, HigherForm::Plain, ab));
  Context cp = crossed_ctx();
  Expr x = E("a b U1^2");
  for (int k = 0; k < 3; ++k)
    for (auto f : {HigherForm::Plain, HigherForm::WithD}) {
      Expr formal = higher_twisted_commutator(x, k, f, cp, CommForm::Formal);
      CHECK(expand_formal(formal, cp) == higher_twisted_commutator(x, k, f, cp));
    }
}

TEST_CASE("twisted Leibniz rule for iterated commutators with D^2") {
  std::vector<Expr> pool = {E("a U1"), E("b U1^-2"), E("c"), E("a U2")};
  for (auto ctx : {crossed_ctx(), abstract_ctx()}) {
    for (int m = 1; m <= 3; ++m) {
      std::vector<Expr> f(pool.begin(), pool.begin() + m);
      Expr prod = Expr::one();
      for (const auto& x : f) prod = prod * x;
      for (int q = 0; q <= 3; ++q)
        CHECK(higher_twisted_commutator(prod, q, HigherForm::Plain, ctx) == twisted_leibniz_expansion(f, q, ctx));
    }
  }
  // sigma must sit on the left factors: dropping it breaks the identity
  Context cp = crossed_ctx();
  Expr naive = higher_twisted_commutator(E("a U1"), 1, HigherForm::Plain, cp) * E("b U1^-2") +
               E("a U1") * higher_twisted_commutator(E("b U1^-2"), 1, HigherForm::Plain, cp);
  CHECK_FALSE(naive == higher_twisted_commutator(E("a U1 b U1^-2"), 1, HigherForm::Plain, cp));
}

TEST_CASE("sigma capital") {
  Context ab = abstract_ctx();
  Expr a = E("a");
  CHECK(sigma_capital(a, 0, 1, ab) == E("D s^-1(a) D^-1 - a"));
  for (int k = 0; k <= 3; ++k)
    for (int l = -5; l <= 5; ++l) CHECK(sigma_capital_identity_residual(a, k, l, ab).is_zero());
  Context cp = crossed_ctx();
  CHECK(sigma_capital(a, 0, 1, cp) == E("D a D^-1 - a"));
}

TEST_CASE("expansions") {
  Context ab = abstract_ctx();
  Expr b = E("b");
  auto e1 = expand_abs_power(b, 3, 1, ab);
  CHECK(e1.terms == E("b |D|^3"));
  CHECK(e1.remainderOrder == 2);
  auto e2 = expand_abs_power(b, 2, 2, ab);
  CHECK(e2.terms == E("b |D|^2 + 2 t(b) |D|"));
  auto e3 = expand_abs_power(Expr::one(), 5, 3, ab);
  CHECK(e3.terms == E("|D|^5"));
  CHECK(e3.exact);
  CHECK_THROWS(expand_abs_power(b, 1, -1, ab));
  auto sym = expand_abs_power_symbolic(b, 3, ab);
  REQUIRE(sym.size() == 3);
  CHECK(sym[2].polyInS == std::vector<Rational>{0, Rational(-1, 2), Rational(1, 2)});
  auto d2 = expand_d2_power(b, 1, 3, ab);
  CHECK(d2.terms == E("b D^2 + n(b)"));
  CHECK(d2.exact);
}

TEST_CASE("adjoint") {
  Context ab = abstract_ctx();
  CHECK(adjoint(E("s^2(a)")) == E("s^-2(a*)"));
  CHECK(adjoint(E("a U1")) == E("U1^-1 a*"));
  CHECK(adjoint(E("i a b")) == E("-i b* a*"));
  // ([D,a]_sigma)* = -[D, sigma^{-1}(a*)]_sigma, checked through the expanded forms
  Expr lhs = adjoint(expand_formal(E("d(a)"), ab));
  CHECK(lhs == expand_formal(adjoint(E("d(a)")), ab));
}

TEST_CASE("trace normal form examples") {
  Context ab = abstract_ctx();
  TraceRules rules;
  CHECK(trace_normal_form(TraceExpr::res(E("a U1")), ab, rules).is_zero());
  Context cp = crossed_ctx();
  Expr P = E("p U1"), Q = E("q U1^-1");
  CHECK(trace_normal_form(TraceExpr::res(P * Q - Q * P), cp, rules).is_zero());
  Expr PU = E("p D U1"), QV = E("q |D|^-2 U1^-1");
  CHECK(trace_normal_form(TraceExpr::res(PU * QV - QV * PU), cp, rules).is_zero());
  for (int p = 1; p <= 3; ++p) {
    Expr x = E("a b") * Expr::absD(-p) - E("b") * apply_sigma(E("a"), -p, ab) * Expr::absD(-p);
    CHECK(trace_normal_form(TraceExpr::dix(p, x), ab, rules).is_zero());
  }
  TraceRules noSel = rules;
  noSel.selberg = false;
  CHECK(!trace_normal_form(TraceExpr::res(E("a U1")), ab, noSel).is_zero());
  Context iso = ab;
  iso.concreteMu[1] = 1.0;
  CHECK(!trace_normal_form(TraceExpr::res(E("a U1")), iso, rules).is_zero());
}

TEST_CASE("trace normal form: grading and sigma invariance") {
  Context ab = abstract_ctx();
  TraceRules rules;
  CHECK(trace_normal_form(TraceExpr::res(E("g a D")), ab, rules).is_zero());
  CHECK(trace_equal(TraceExpr::res(E("g a d(b) c D")), TraceExpr::res(E("-g c D a d(b)")), ab, rules));
  CHECK(!trace_equal(TraceExpr::res(E("s(a) D |D|^-1")), TraceExpr::res(E("a D |D|^-1")), ab, rules));
  rules.sigmaInvariance = true;
  CHECK(trace_equal(TraceExpr::res(E("s(a) D |D|^-1")), TraceExpr::res(E("a D |D|^-1")), ab, rules));
}

TEST_CASE("trace normal form is confluent under random rewrites") {
  std::mt19937 rng(5);
  Context cp = crossed_ctx();
  TraceRules rules;
  for (int trial = 0; trial < 80; ++trial) {
    Word w = letter_word(rng, 4, true);
    w.push_back(Atom::absd(-1 - static_cast<int>(rng() % 3)));
    TraceExpr base = trace_normal_form(TraceExpr::res(Expr(w)), cp, rules);
    // random rotation plus random conjugation, applied as operator identities
    Expr e(w);
    size_t r = rng() % w.size();
    Word rot(w.begin() + static_cast<long>(r), w.end());
    rot.insert(rot.end(), w.begin(), w.begin() + static_cast<long>(r));
    Expr conj = Expr::U(2, 1) * Expr(rot) * Expr::U(2, -1);
    TraceExpr other = trace_normal_form(TraceExpr::res(conj), cp, rules);
    CHECK(trace_normal_form(base - other, cp, rules).is_zero());
  }
}
