#include "twist/ncalg.hpp"

#include <stdexcept>

namespace twist::ncalg {

namespace {

// Letter shapes accepted by the symbol calculus: L_j = nabla^j(x), M_j = nabla^j(d x).
struct Shape {
  bool isM;
  int j;
};

Shape shape_of(const Atom& a) {
  const auto& ops = a.ops;
  size_t pos = 0;
  bool isM = false;
  if (pos < ops.size() && ops[pos].kind == 'd') {
    if (ops[pos].k != 1) throw std::invalid_argument("symbol_normalize: iterated d in " + a.str());
    isM = true;
    ++pos;
  }
  int j = 0;
  if (pos < ops.size() && ops[pos].kind == 'n') {
    j = ops[pos].k;
    ++pos;
  }
  if (pos != ops.size()) throw std::invalid_argument("symbol_normalize: unsupported letter " + a.str());
  return {isM, j};
}

Atom make_letter(const Atom& base, bool isM, int j) {
  Atom a = base;
  a.ops.clear();
  if (isM) a.ops.push_back({'d', 1});
  if (j > 0) a.ops.push_back({'n', j});
  return a;
}

struct Partial {
  Coeff c;
  Word prefix;  // grading and letters already placed
  int e = 0;    // pending D^e |D|^{n-e}
  int n = 0;
  int prefixOrder = 0;
};

}  // namespace

Expr symbol_normalize(const Expr& input, int minOrder) {
  Expr out;
  for (const auto& [w0, c0] : input.terms()) {
    auto [f, w] = normalize_word(w0);
    // suffix order bound for truncation
    std::vector<int> suffixOrder(w.size() + 1, 0);
    for (size_t j = w.size(); j-- > 0;) suffixOrder[j] = suffixOrder[j + 1] + w[j].order();
    std::vector<Partial> cur{{c0 * f, {}, 0, 0, 0}};
    Word groups;
    for (size_t idx = 0; idx < w.size(); ++idx) {
      const Atom& a = w[idx];
      if (a.kind == AtomKind::Grading) {
        for (auto& p : cur) p.prefix.push_back(a);
        continue;
      }
      if (a.kind == AtomKind::Group) {
        groups.push_back(a);
        continue;
      }
      if (a.is_dpower()) {
        for (auto& p : cur) {
          if (a.kind == AtomKind::DPow) p.e = (p.e + ((a.k % 2) + 2) % 2) % 2;
          p.n += a.k;
        }
        continue;
      }
      Shape s = shape_of(a);
      std::vector<Partial> next;
      for (const auto& p : cur) {
        int m = p.n - p.e;  // |D|^m part, then D^e on the left
        int budget = p.prefixOrder + p.n + a.order() + suffixOrder[idx + 1];
        for (int k = 0;; ++k) {
          // term order drops by k relative to the leading term
          if (budget - k < minOrder) break;
          Rational bk = binomial_q(Rational(m, 2), k);
          if (m >= 0 && m % 2 == 0 && k > m / 2) break;
          if (bk == 0) continue;
          int j = s.j + k;
          int tailN = m - 2 * k;  // |D|^{tailN}
          if (p.e == 0) {
            Partial q = p;
            q.c = p.c * Coeff(bk);
            q.prefix.push_back(make_letter(a, s.isM, j));
            q.prefixOrder += j;
            q.e = 0;
            q.n = tailN;
            next.push_back(q);
          } else if (!s.isM) {
            // D L_j = L_j D + M_j
            Partial q1 = p;
            q1.c = p.c * Coeff(bk);
            q1.prefix.push_back(make_letter(a, false, j));
            q1.prefixOrder += j;
            q1.e = 1;
            q1.n = tailN + 1;
            next.push_back(q1);
            Partial q2 = p;
            q2.c = p.c * Coeff(bk);
            q2.prefix.push_back(make_letter(a, true, j));
            q2.prefixOrder += j;
            q2.e = 0;
            q2.n = tailN;
            if (q2.prefixOrder + q2.n + suffixOrder[idx + 1] >= minOrder) next.push_back(q2);
          } else {
            // D M_j = -M_j D + L_{j+1}
            Partial q1 = p;
            q1.c = -p.c * Coeff(bk);
            q1.prefix.push_back(make_letter(a, true, j));
            q1.prefixOrder += j;
            q1.e = 1;
            q1.n = tailN + 1;
            next.push_back(q1);
            Partial q2 = p;
            q2.c = p.c * Coeff(bk);
            q2.prefix.push_back(make_letter(a, false, j + 1));
            q2.prefixOrder += j + 1;
            q2.e = 0;
            q2.n = tailN;
            if (q2.prefixOrder + q2.n + suffixOrder[idx + 1] >= minOrder) next.push_back(q2);
          }
        }
      }
      cur = std::move(next);
    }
    for (const auto& p : cur) {
      if (p.prefixOrder + p.n < minOrder) continue;
      Word fw = p.prefix;
      if (p.e == 0) {
        if (p.n != 0) fw.push_back(p.n % 2 == 0 ? Atom::dpow(p.n) : Atom::absd(p.n));
      } else {
        fw.push_back(Atom::dpow(1));
        if (p.n - 1 != 0) fw.push_back(Atom::absd(p.n - 1));
      }
      fw.insert(fw.end(), groups.begin(), groups.end());
      out += Expr(fw, p.c);
    }
  }
  return out;
}

}  // namespace twist::ncalg
