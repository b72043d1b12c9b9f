#include "twist/ncalg.hpp"

#include <functional>
#include <stdexcept>

namespace twist::ncalg {

namespace {

Coeff character_power(const Word& w, int scale) {
  Coeff c = 1;
  for (const auto& a : w)
    if (a.kind == AtomKind::Group) c *= Coeff::mu(a.id, a.k * scale);
  return c;
}

Expr single(const Word& w, const Coeff& c = 1) {
  Expr e;
  e.add(w, c);
  return e;
}

std::pair<Expr, int> op_data(WithOp op) {
  switch (op) {
    case WithOp::D: return {Expr::D(1), 1};
    case WithOp::AbsD: return {Expr::absD(1), 1};
    case WithOp::DSquared: return {Expr::D(2), 2};
  }
  throw std::logic_error("unreachable");
}

char op_char(WithOp op) {
  switch (op) {
    case WithOp::D: return 'd';
    case WithOp::AbsD: return 't';
    case WithOp::DSquared: return 'n';
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Expr apply_sigma(const Expr& e, int k, const Context& ctx) {
  if (k == 0) return e;
  Expr out;
  for (const auto& [w, c] : e.terms()) {
    Word nw = w;
    if (ctx.mode == SigmaMode::Abstract) {
      for (auto& a : nw)
        if (a.is_letter()) a = a.with_op('s', k);
    }
    out.add(nw, c * character_power(w, -k));
  }
  return out;
}

namespace {

Coeff conjugate(const Coeff& c) {
  Coeff out;
  for (const auto& [m, v] : c.terms()) {
    Coeff t(v);
    if (m.i) t *= -Coeff::imag();
    if (m.s2i) throw std::invalid_argument("adjoint: conjugate of sqrt(2i) is outside the ring");
    if (m.sqrtpi) t *= Coeff::sqrtpi(m.sqrtpi);
    for (auto [id, p] : m.mu) t *= Coeff::mu(id, p);
    out += t;
  }
  return out;
}

// Adjoint of one algebra letter: (sigma^k y)* = sigma^{-k}(y*),
// ([W,y]_sigma)* = -[W, sigma^{-m}(y*)]_sigma.
Expr letter_adjoint(const Atom& a) {
  Atom b = a;
  b.ops.clear();
  b.adjoint = !a.adjoint;
  b.conj = group_add({}, a.conj, 1);
  int sign = 1;
  for (const auto& o : a.ops) {
    if (o.kind == 's') {
      b = b.with_op('s', -o.k);
      continue;
    }
    int m = o.kind == 'n' ? 2 : 1;
    for (int r = 0; r < o.k; ++r) {
      b = b.with_op('s', -m).with_op(o.kind, 1);
      sign = -sign;
    }
  }
  Expr out;
  out.add({b}, sign);
  return out;
}

}  // namespace

Expr adjoint(const Expr& e) {
  Expr out;
  for (const auto& [w, c] : e.terms()) {
    Expr t = Expr::one() * conjugate(c);
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      const Atom& a = *it;
      switch (a.kind) {
        case AtomKind::Alg: t = t * letter_adjoint(a); break;
        case AtomKind::Group: t = t * Expr::U(a.id, -a.k); break;
        default: t = t * Expr::atom(a); break;
      }
    }
    out += t;
  }
  return out;
}

Expr twisted_commutator(const Expr& x, WithOp op, const Context& ctx, CommForm form) {
  if (form == CommForm::Formal) return apply_derivation(x, op, ctx);
  auto [W, m] = op_data(op);
  return W * x - apply_sigma(x, m, ctx) * W;
}

Expr apply_derivation(const Expr& e, WithOp op, const Context& ctx) {
  auto [W, m] = op_data(op);
  char oc = op_char(op);
  Expr out;
  for (const auto& [w, c] : e.terms()) {
    for (const auto& a : w)
      if (a.is_dpower() || a.kind == AtomKind::Grading)
        throw std::invalid_argument("apply_derivation: word contains D-powers or grading: " +
                                    word_str(w));
    for (size_t j = 0; j < w.size(); ++j) {
      if (!w[j].is_letter()) continue;  // [W,U]_sigma = 0 for group letters
      Word prefix(w.begin(), w.begin() + j);
      Word suffix(w.begin() + j + 1, w.end());
      Expr left = apply_sigma(single(prefix), m, ctx);
      Expr mid = single({w[j].with_op(oc, 1)});
      out += left * mid * single(suffix) * c;
    }
  }
  return out;
}

Expr higher_twisted_commutator(const Expr& a, int k, HigherForm form, const Context& ctx,
                               CommForm repr) {
  if (k < 0) throw std::invalid_argument("higher_twisted_commutator: negative k");
  if (repr == CommForm::Formal) {
    if (ctx.mode != SigmaMode::CrossedProduct)
      throw std::invalid_argument("formal higher commutators need crossed-product mode");
    Expr x = form == HigherForm::WithD ? apply_derivation(a, WithOp::D, ctx) : a;
    for (int r = 0; r < k; ++r) x = apply_derivation(x, WithOp::DSquared, ctx);
    return x;
  }
  Expr out;
  for (int j = 0; j <= k; ++j) {
    Coeff c(binomial(k, j) * (j % 2 ? -1 : 1));
    if (form == HigherForm::Plain) {
      out += Expr::D(2 * (k - j)) * apply_sigma(a, 2 * j, ctx) * Expr::D(2 * j) * c;
    } else {
      out += (Expr::D(2 * (k - j) + 1) * apply_sigma(a, 2 * j, ctx) * Expr::D(2 * j) -
              Expr::D(2 * (k - j)) * apply_sigma(a, 2 * j + 1, ctx) * Expr::D(2 * j + 1)) *
             c;
    }
  }
  return out;
}

Expr alpha_sigma(const Expr& a, int m, const Context& ctx) {
  return Expr::D(m) * apply_sigma(a, -m, ctx) * Expr::D(-m);
}

Expr sigma_capital(const Expr& a, int k, int l, const Context& ctx) {
  if (k < 0) throw std::invalid_argument("sigma_capital: negative k");
  Expr out;
  for (int j = 0; j <= k; ++j) {
    Coeff c(binomial(k, j) * (j % 2 ? -1 : 1));
    out += (alpha_sigma(a, l - 2 * j, ctx) - alpha_sigma(a, l - 2 * j - 1, ctx)) * c;
  }
  return out;
}

Expr sigma_capital_identity_residual(const Expr& a, int k, int l, const Context& ctx) {
  Expr lhs = Expr::D(2 * k + 1 - l) * sigma_capital(a, k, l, ctx);
  Expr rhs = higher_twisted_commutator(apply_sigma(a, -l, ctx), k, HigherForm::WithD, ctx) *
             Expr::D(-l);
  return lhs - rhs;
}

namespace {

Expr expand_letter(const Atom& a, const Context& ctx) {
  Atom base = a;
  base.ops.clear();
  Expr x = Expr::atom(base);
  for (const auto& o : a.ops) {
    if (o.kind == 's') {
      x = apply_sigma(x, o.k, ctx);
      continue;
    }
    WithOp op = o.kind == 'd' ? WithOp::D : o.kind == 't' ? WithOp::AbsD : WithOp::DSquared;
    for (int r = 0; r < o.k; ++r) x = twisted_commutator(x, op, ctx, CommForm::Expanded);
  }
  return x;
}

}  // namespace

Expr expand_formal(const Expr& e, const Context& ctx) {
  Expr out;
  for (const auto& [w, c] : e.terms()) {
    Expr t = Expr::one() * c;
    for (const auto& a : w) t = t * (a.is_letter() && a.derived() ? expand_letter(a, ctx) : Expr::atom(a));
    out += t;
  }
  return out;
}

namespace {

void require_no_dpowers(const Expr& b, const char* who) {
  for (const auto& [w, c] : b.terms())
    for (const auto& a : w)
      if (a.is_dpower()) throw std::invalid_argument(std::string(who) + ": argument contains D-powers");
}

}  // namespace

Expansion expand_abs_power(const Expr& b, int s, int N, const Context& ctx) {
  if (N < 0) throw std::invalid_argument("expand_abs_power: negative N");
  require_no_dpowers(b, "expand_abs_power");
  Expansion r{Expr(), s - N, false};
  Expr der = b;
  for (int k = 0; k < N; ++k) {
    r.terms += der * Expr::absD(s - k) * Coeff(binomial_q(Rational(s), k));
    der = apply_derivation(der, WithOp::AbsD, ctx);
  }
  r.exact = der.is_zero();
  return r;
}

Expansion expand_d2_power(const Expr& T, int s, int N, const Context& ctx) {
  if (N < 0) throw std::invalid_argument("expand_d2_power: negative N");
  require_no_dpowers(T, "expand_d2_power");
  Expansion r{Expr(), 2 * s - N, false};
  Expr der = T;
  for (int k = 0; k < N; ++k) {
    r.terms += der * Expr::D(2 * (s - k)) * Coeff(binomial_q(Rational(s), k));
    der = apply_derivation(der, WithOp::DSquared, ctx);
  }
  r.exact = der.is_zero() || (s >= 0 && N > s);
  return r;
}

std::vector<SymbolicExpansionTerm> expand_abs_power_symbolic(const Expr& b, int N,
                                                             const Context& ctx) {
  if (N < 0) throw std::invalid_argument("expand_abs_power_symbolic: negative N");
  require_no_dpowers(b, "expand_abs_power_symbolic");
  std::vector<SymbolicExpansionTerm> out;
  std::vector<Rational> poly{1};  // s(s-1)...(s-k+1)/k!
  Expr der = b;
  for (int k = 0; k < N; ++k) {
    if (der.is_zero()) break;
    out.push_back({k, poly, der});
    std::vector<Rational> next(poly.size() + 1, 0);
    for (size_t j = 0; j < poly.size(); ++j) {
      next[j + 1] += poly[j] / (k + 1);
      next[j] -= poly[j] * k / (k + 1);
    }
    poly = next;
    der = apply_derivation(der, WithOp::AbsD, ctx);
  }
  return out;
}

std::string SymbolicExpansionTerm::str() const {
  std::string p;
  for (size_t j = 0; j < polyInS.size(); ++j) {
    if (polyInS[j] == 0) continue;
    if (!p.empty()) p += "+";
    p += "(" + rational_str(polyInS[j]) + ")";
    if (j) p += "*s^" + std::to_string(j);
  }
  return "[" + (p.empty() ? std::string("0") : p) + "] (" + derived.str() + ") |D|^(s-" +
         std::to_string(k) + ")";
}

Expr twisted_leibniz_expansion(const std::vector<Expr>& factors, int k, const Context& ctx) {
  if (k < 0) throw std::invalid_argument("twisted_leibniz_expansion: negative order");
  const int m = static_cast<int>(factors.size());
  if (m == 0) return k == 0 ? Expr::one() : Expr();
  Expr out;
  std::vector<int> parts(m, 0);
  // enumerate compositions of k into m parts
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == m - 1) {
      parts[i] = left;
      Rational mult = factorial(k);
      for (int p : parts) mult /= factorial(p);
      Expr term = Expr::one();
      int tail = k;
      for (int j = 0; j < m; ++j) {
        tail -= parts[j];
        term = term * higher_twisted_commutator(apply_sigma(factors[j], 2 * tail, ctx), parts[j],
                                                HigherForm::Plain, ctx);
      }
      out += term * Coeff(mult);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      parts[i] = p;
      rec(i + 1, left - p);
    }
  };
  rec(0, k);
  return out;
}

}  // namespace twist::ncalg
