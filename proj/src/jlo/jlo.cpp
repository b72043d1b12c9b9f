#include "twist/jlo.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace twist::jlo {

namespace {

std::atomic<int> g_threads{0};

struct SparseRows {
  std::vector<std::vector<std::pair<int, cplx>>> rows;
};

SparseRows sparse_rows(const Mat& X) {
  SparseRows s;
  s.rows.resize(X.rows());
  for (int c = 0; c < X.cols(); ++c)
    for (int r = 0; r < X.rows(); ++r)
      if (X(r, c) != cplx(0)) s.rows[r].push_back({c, X(r, c)});
  return s;
}

// Pairwise sum in input order, so the result does not depend on the thread count.
template <class T>
T pairwise_sum(const std::vector<T>& v, size_t lo, size_t hi) {
  if (hi - lo <= 8) {
    T s{};
    for (size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

Mat diag(const RVec& v) { return v.cast<cplx>().asDiagonal(); }

}  // namespace

void set_threads(int n) { g_threads = n; }

int threads() {
  int n = g_threads.load();
  if (n > 0) return n;
  if (const char* env = std::getenv("TWIST_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::min(16u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------------------
// Divided differences of exp.
//
// The simplex integral equals (-1)^q f[c_0..c_q] for f(x) = e^{-x}, i.e. the corner entry of
// the exponential of the Opitz matrix diag(-c) + superdiagonal(1). That exponential is built
// by the Parlett recurrence on sorted nodes, with a Taylor block for clusters of width < 1
// where the recurrence would cancel.

namespace {

double cluster_dd(const double* x, int k) {
  // f[x_0..x_k] for e^{-x} with all nodes within distance 1
  double lo = x[0], hi = x[0];
  for (int i = 1; i <= k; ++i) {
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  double mid = 0.5 * (lo + hi);
  double y[16];
  for (int i = 0; i <= k; ++i) y[i] = x[i] - mid;
  // sum_{n>=k} (-1)^n / n! h_{n-k}(y), h complete homogeneous
  const int R = 30;
  double h[R + 1];
  h[0] = 1;
  for (int r = 1; r <= R; ++r) h[r] = 0;
  for (int i = 0; i <= k; ++i)
    for (int r = 1; r <= R; ++r) h[r] += y[i] * h[r - 1];
  double rho = 0.5 * (hi - lo);
  double sum = 0, fact = 1, kfact = 1, tail = 1;
  for (int n = 1; n <= k; ++n) fact *= n;
  kfact = fact;
  for (int r = 0; r <= R; ++r) {
    int n = k + r;
    if (r > 0) {
      fact *= n;
      tail *= rho / r;  // |h_r| / (k+r)! <= rho^r / (k! r!)
    }
    double term = h[r] / fact;
    sum += (n % 2 ? -term : term);
    if (tail / kfact < 1e-18 * std::abs(sum)) break;
  }
  return std::exp(-mid) * sum;
}

}  // namespace

double simplex_exp_integral(const std::vector<double>& c) {
  const int q = static_cast<int>(c.size()) - 1;
  if (q < 0) throw std::invalid_argument("simplex_exp_integral: no nodes");
  if (q > 14) throw std::invalid_argument("simplex_exp_integral: order too large");
  double x[16];
  for (int i = 0; i <= q; ++i) x[i] = c[i];
  std::sort(x, x + q + 1);
  if (q == 0) return std::exp(-x[0]);
  if (q == 1) {
    double d = x[1] - x[0];
    return d < 1e-300 ? std::exp(-x[0]) : std::exp(-x[0]) * (-std::expm1(-d)) / d;
  }
  double T[16][16];
  for (int i = 0; i <= q; ++i) T[i][i] = std::exp(-x[i]);
  for (int len = 1; len <= q; ++len)
    for (int i = 0; i + len <= q; ++i) {
      int j = i + len;
      double span = x[j] - x[i];
      T[i][j] = span < 1.0 ? cluster_dd(x + i, len) : (T[i + 1][j] - T[i][j - 1]) / span;
    }
  return q % 2 ? -T[0][q] : T[0][q];
}

// ---------------------------------------------------------------------------------------

HeatData heat_data(const ModelTriple& m) {
  if (!m.diagonal_D2()) throw std::invalid_argument("JLO brackets need a diagonal D^2 (" + m.kind + ")");
  HeatData h;
  h.dsq = m.dsq;
  if (m.grading) h.gamma = *m.grading;
  h.inner.assign(m.outerDim, 0);
  for (int i : m.inner) h.inner[i] = 1;
  return h;
}

BracketValue eval_bracket(const ModelTriple& m, const std::vector<BracketEntry>& entries, double t,
                          const BracketOptions& opt) {
  return eval_bracket(heat_data(m), entries, t, opt);
}

BracketValue eval_bracket(const HeatData& h, const std::vector<BracketEntry>& entries, double t,
                          const BracketOptions& opt) {
  if (entries.empty()) throw std::invalid_argument("eval_bracket: no entries");
  if (!(t > 0)) throw std::invalid_argument("eval_bracket: t must be positive");
  const int n = static_cast<int>(h.dsq.size());
  const int q = static_cast<int>(entries.size()) - 1;
  for (const auto& e : entries) {
    if (e.op.rows() != n || e.op.cols() != n) throw std::invalid_argument("eval_bracket: entry size mismatch");
    if (!(e.groupFactor > 0)) throw std::invalid_argument("eval_bracket: group factor must be positive");
  }
  std::vector<double> scale(q + 1);
  double g = 1;
  for (int j = 0; j <= q; ++j) {
    g *= entries[j].groupFactor;
    scale[j] = g * g * t * t;
  }
  std::vector<SparseRows> S;
  for (const auto& e : entries) S.push_back(sparse_rows(e.op));

  // walks of length q bound the enumeration
  {
    std::vector<double> w(n, 1.0);
    for (int j = q - 1; j >= 0; --j) {
      std::vector<double> nw(n, 0.0);
      for (int r = 0; r < n; ++r)
        for (const auto& [c, v] : S[j].rows[r]) nw[r] += w[c];
      w = nw;
    }
    double walks = 0;
    for (int r = 0; r < n; ++r) walks += w[r];
    if (walks > static_cast<double>(opt.maxTuples))
      throw std::runtime_error("eval_bracket: tuple count " + std::to_string(static_cast<long long>(walks)) +
                               " exceeds the guard " + std::to_string(opt.maxTuples));
  }

  std::vector<cplx> partial(n);
  std::vector<double> absPartial(n), outerPartial(n);
  std::vector<long long> counts(n);
  const Mat& last = entries[q].op;

  auto work = [&](int i0) {
    std::vector<int> idx(q + 2);
    std::vector<cplx> prod(q + 2);
    std::vector<double> c(q + 1);
    idx[0] = i0;
    double gam = h.gamma.size() ? h.gamma(i0) : 1.0;
    prod[0] = gam;
    cplx sum = 0;
    double abssum = 0, outer = 0;
    long long cnt = 0;
    // depth j picks i_{j+1} from row i_j of entry j, for j < q; the last entry closes the loop
    std::function<void(int)> rec = [&](int j) {
      if (j == q) {
        cplx v = last(idx[q], i0);
        if (v == cplx(0)) return;
        idx[q + 1] = i0;
        for (int k = 0; k <= q; ++k) c[k] = scale[k] * h.dsq(idx[k + 1]);
        cplx term = prod[q] * v * simplex_exp_integral(c);
        ++cnt;
        sum += term;
        abssum += std::abs(term);
        bool out = false;
        for (int k = 0; k <= q; ++k) out = out || !h.inner[idx[k]];
        if (out) outer += std::abs(term);
        return;
      }
      for (const auto& [col, v] : S[j].rows[idx[j]]) {
        idx[j + 1] = col;
        prod[j + 1] = prod[j] * v;
        rec(j + 1);
      }
    };
    if (gam != 0.0) rec(0);
    partial[i0] = sum;
    absPartial[i0] = abssum;
    outerPartial[i0] = outer;
    counts[i0] = cnt;
  };

  int T = std::min(threads(), std::max(1, n / 8));
  if (T <= 1) {
    for (int i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < T; ++k)
      pool.emplace_back([&, k] {
        for (int i = k; i < n; i += T) work(i);
      });
    for (auto& th : pool) th.join();
  }

  BracketValue r;
  r.value = pairwise_sum(partial, 0, partial.size());
  double abss = pairwise_sum(absPartial, 0, absPartial.size());
  double outer = pairwise_sum(outerPartial, 0, outerPartial.size());
  r.errorBound = 8 * (q + 2) * 1.1e-16 * abss + outer;
  r.q = q;
  r.t = t;
  for (auto k : counts) r.tuples += k;
  return r;
}

BracketValue eval_bracket_epsilon(const ModelTriple& m, const std::vector<BracketEntry>& entries, double eps,
                                  int mDeg, const BracketOptions& opt) {
  if (!(eps > 0)) throw std::invalid_argument("eval_bracket_epsilon: eps must be positive");
  BracketValue r = eval_bracket(m, entries, std::sqrt(eps), opt);
  double f = std::pow(eps, 0.5 * mDeg);
  r.value *= f;
  r.errorBound *= f;
  r.degree = mDeg;
  return r;
}

// ---------------------------------------------------------------------------------------

Element unit(const ModelTriple& m) { return {m.identity(), 1.0, 0}; }

Element product(const Element& a, const Element& b) {
  return {a.op * b.op, a.groupFactor * b.groupFactor, a.parity ^ b.parity};
}

Element sigma(const ModelTriple& m, const Element& a, int k) {
  Element out = a;
  out.op = m.sigma_power(a.op, k, a.groupFactor);
  return out;
}

Element twisted_commutator(const ModelTriple& m, const Mat& X, const Element& a) {
  Element s = sigma(m, a, 1);
  return {X * a.op - s.op * X, a.groupFactor, a.parity ^ 1};
}

Element twisted_commutator_sq(const ModelTriple& m, const Element& a) {
  if (!m.diagonal_D2()) throw std::invalid_argument("twisted_commutator_sq: D^2 must be diagonal");
  Element s = sigma(m, a, 2);
  Mat D2 = diag(m.dsq);
  return {D2 * a.op - s.op * D2, a.groupFactor, a.parity};
}

Element scaling_element(const ModelTriple& s, const Mat& alpha, int p) {
  if (s.unitaries.empty()) throw std::invalid_argument("scaling_element: model has no scaling unitary");
  const auto& U = s.unitaries[0];
  Mat P = Mat::Identity(U.op.rows(), U.op.cols());
  Mat base = p >= 0 ? U.op : Mat(U.op.adjoint());
  for (int j = 0; j < std::abs(p); ++j) P = P * base;
  return {alpha * P, std::pow(U.mu, -p), 0};
}

// ---------------------------------------------------------------------------------------

namespace {

Residual residual(cplx lhs, cplx rhs) {
  Residual r;
  r.lhs = lhs;
  r.rhs = rhs;
  r.absolute = std::abs(lhs - rhs);
  double s = std::max(std::abs(lhs), std::abs(rhs));
  r.relative = s > 0 ? r.absolute / s : 0.0;
  return r;
}

}  // namespace

Residual check_forB(const ModelTriple& m, const std::vector<BracketEntry>& entries, double t) {
  cplx lhs = eval_bracket(m, entries, t).value;
  cplx rhs = 0;
  const Element one = unit(m);
  for (size_t k = 0; k < entries.size(); ++k) {
    std::vector<BracketEntry> e(entries.begin(), entries.begin() + k + 1);
    e.push_back(one);
    e.insert(e.end(), entries.begin() + k + 1, entries.end());
    rhs += eval_bracket(m, e, t).value;
  }
  return residual(lhs, rhs);
}

Residual check_forb(const ModelTriple& m, const std::vector<BracketEntry>& entries, int j, double t) {
  const int q = static_cast<int>(entries.size()) - 1;
  if (j < 1 || j > q - 1) throw std::invalid_argument("check_forb: need 1 <= j <= q-1");
  std::vector<BracketEntry> left, right, mid;
  for (int i = 0; i <= q; ++i) {
    if (i == j) continue;
    left.push_back(i == j - 1 ? product(entries[j - 1], entries[j]) : entries[i]);
  }
  for (int i = 0; i <= q; ++i) {
    if (i == j + 1) continue;
    right.push_back(i == j ? product(entries[j], entries[j + 1]) : entries[i]);
  }
  for (int i = 0; i <= q; ++i) {
    if (i < j) mid.push_back(sigma(m, entries[i], 2));
    else if (i == j) mid.push_back(twisted_commutator_sq(m, entries[i]));
    else mid.push_back(entries[i]);
  }
  // the bracket of [D^2, .] carries the heat scale t^2 of the Duhamel formula
  cplx lhs = eval_bracket(m, left, t).value - eval_bracket(m, right, t).value;
  cplx rhs = t * t * eval_bracket(m, mid, t).value;
  return residual(lhs, rhs);
}

Residual check_cyc1(const ModelTriple& m, const std::vector<BracketEntry>& entries, int mDeg, double eps) {
  double total = 1;
  for (const auto& e : entries) total *= e.groupFactor;
  if (std::abs(total - 1) > 1e-12) throw std::invalid_argument("check_cyc1: total character must be 1");
  std::vector<BracketEntry> rot(entries.begin() + 1, entries.end());
  rot.push_back(sigma(m, entries[0], -mDeg));
  double g0 = entries[0].groupFactor;
  cplx lhs = eval_bracket_epsilon(m, entries, eps, mDeg).value;
  cplx rhs = eval_bracket_epsilon(m, rot, g0 * g0 * eps, mDeg).value;
  return residual(lhs, rhs);
}

// ---------------------------------------------------------------------------------------
// Constant term

ConstantTermFit fit_constant_term(const std::vector<double>& eps, const std::vector<cplx>& values,
                                  const std::vector<double>& exponents, const FitOptions& opt) {
  if (eps.size() != values.size()) throw std::invalid_argument("fit_constant_term: size mismatch");
  if (eps.empty()) throw std::invalid_argument("fit_constant_term: empty grid");
  double lo = *std::min_element(eps.begin(), eps.end()), hi = *std::max_element(eps.begin(), eps.end());
  if (!(lo > 0)) throw std::invalid_argument("fit_constant_term: eps must be positive");
  if (std::log10(hi / lo) < opt.minDecades - 1e-9)
    throw std::invalid_argument("fit_constant_term: eps grid spans fewer than " + std::to_string(opt.minDecades) +
                                " decades");
  ConstantTermFit fit;
  struct Col {
    double e;
    bool log;
    std::string name;
  };
  std::vector<Col> cols;
  auto has_power = [&](double e) {
    for (const auto& c : cols)
      if (!c.log && std::abs(c.e - e) < 1e-12) return true;
    return false;
  };
  for (double e : exponents) {
    if (std::abs(e) < 1e-12) {
      cols.push_back({0.0, true, "log(eps)"});
    } else {
      if (!has_power(e)) cols.push_back({e, false, "eps^" + std::to_string(e)});
      cols.push_back({e, true, "eps^" + std::to_string(e) + " log(eps)"});
    }
  }
  const size_t constCol = cols.size();
  cols.push_back({0.0, false, "1"});
  for (double p : opt.extraPowers)
    if (!has_power(p)) cols.push_back({p, false, "eps^" + std::to_string(p)});
  const int rows = static_cast<int>(eps.size()), ncol = static_cast<int>(cols.size());
  if (rows <= ncol) throw std::invalid_argument("fit_constant_term: need more grid points than basis functions");

  Eigen::MatrixXd A(rows, ncol);
  Eigen::MatrixXd b(rows, 2);
  for (int r = 0; r < rows; ++r) {
    double le = std::log(eps[r]);
    for (int c = 0; c < ncol; ++c) {
      double v = cols[c].e == 0.0 ? 1.0 : std::pow(eps[r], cols[c].e);
      A(r, c) = cols[c].log ? v * le : v;
    }
    b(r, 0) = values[r].real();
    b(r, 1) = values[r].imag();
  }
  Eigen::VectorXd norms = A.colwise().norm();
  Eigen::MatrixXd As = A * norms.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
  auto sv = svd.singularValues();
  fit.condition = sv(0) / sv(sv.size() - 1);
  if (!(fit.condition <= opt.maxCondition))
    throw std::runtime_error("fit_constant_term: ill-conditioned basis (condition " + std::to_string(fit.condition) +
                             ")");
  Eigen::MatrixXd x = svd.solve(b);
  x = norms.cwiseInverse().asDiagonal() * x;
  Eigen::MatrixXd res = A * x - b;
  fit.residual = std::sqrt(res.squaredNorm() / rows);
  for (int c = 0; c < ncol; ++c) {
    cplx v(x(c, 0), x(c, 1));
    fit.basis.push_back(cols[c].name);
    fit.coefficients.push_back(v);
    if (cols[c].log) {
      fit.logMagnitude = std::max(fit.logMagnitude, std::abs(v));
      if (cols[c].e == 0.0) fit.logCoefficient = v;
    }
  }
  fit.value = fit.coefficients[constCol];
  return fit;
}

ConstantTermFit extract_constant_term(const ModelTriple& m, const std::vector<BracketEntry>& entries, int mDeg,
                                      const std::vector<double>& epsGrid, const std::vector<double>& poleBasis,
                                      const FitOptions& opt) {
  const double q = static_cast<double>(entries.size()) - 1;
  std::vector<cplx> values;
  for (double e : epsGrid) values.push_back(eval_bracket_epsilon(m, entries, e, mDeg).value);
  std::vector<double> exps;
  for (double rho : poleBasis) exps.push_back(q / 2 - rho);
  return fit_constant_term(epsGrid, values, exps, opt);
}

// ---------------------------------------------------------------------------------------
// Families

FamilyPoint family_point(const ModelTriple& m, Family f, double tau) {
  if (!m.diagonal_D2()) throw std::invalid_argument("family_point: D^2 must be diagonal");
  FamilyPoint p;
  const RVec& d2 = m.dsq;
  if (d2.minCoeff() <= 0) throw std::invalid_argument("family_point: D must be invertible");
  if (f == Family::Scale) {
    if (!(tau > 0)) throw std::invalid_argument("scale family needs t > 0");
    p.D = tau * m.D;
    p.dsq = tau * tau * d2;
    p.Ddot = m.D;
    p.V = diag(2 * tau * d2);
  } else {
    if (tau < 0 || tau > 1) throw std::invalid_argument("phase family needs u in [0,1]");
    RVec absD = d2.cwiseSqrt();
    RVec pw = absD.array().pow(-tau);
    RVec logAbs = absD.array().log();
    p.D = m.D * diag(pw);
    p.dsq = d2.array() * pw.array().square();
    p.Ddot = -(m.D * diag(pw.cwiseProduct(logAbs)));
    p.V = diag(-2.0 * p.dsq.cwiseProduct(logAbs));
  }
  return p;
}

HeatData heat_data(const ModelTriple& m, const FamilyPoint& p) {
  HeatData h = heat_data(m);
  h.dsq = p.dsq;
  return h;
}

namespace {

BracketValue contract(const ModelTriple& m, const HeatData& h, const std::vector<BracketEntry>& entries,
                      const BracketEntry& V) {
  BracketValue total;
  int parity = 0;
  for (size_t k = 0; k < entries.size(); ++k) {
    parity ^= entries[k].parity;
    std::vector<BracketEntry> e;
    for (size_t i = 0; i <= k; ++i) e.push_back(sigma(m, entries[i], 2));
    e.push_back(V);
    e.insert(e.end(), entries.begin() + k + 1, entries.end());
    BracketValue b = eval_bracket(h, e, 1.0);
    double sgn = (parity * V.parity) % 2 ? -1.0 : 1.0;
    total.value += sgn * b.value;
    total.errorBound += b.errorBound;
    total.tuples += b.tuples;
  }
  total.q = static_cast<int>(entries.size());
  return total;
}

std::vector<BracketEntry> jlo_entries(const ModelTriple& m, const Mat& Dtau, const std::vector<Element>& a) {
  std::vector<BracketEntry> e;
  e.push_back(a.at(0));
  for (size_t j = 1; j < a.size(); ++j)
    e.push_back(twisted_commutator(m, Dtau, sigma(m, a[j], -static_cast<int>(j))));
  return e;
}

}  // namespace

BracketValue jbar_bracket(const ModelTriple& m, const std::vector<BracketEntry>& entries, const BracketEntry& V,
                          Family f, double tau) {
  FamilyPoint p = family_point(m, f, tau);
  return contract(m, heat_data(m, p), entries, V);
}

cplx J(const ModelTriple& m, Family f, double tau, const std::vector<Element>& a) {
  FamilyPoint p = family_point(m, f, tau);
  return eval_bracket(heat_data(m, p), jlo_entries(m, p.D, a), 1.0).value;
}

cplx K(const ModelTriple& m, Family f, double tau, const std::vector<Element>& a) {
  FamilyPoint p = family_point(m, f, tau);
  HeatData h = heat_data(m, p);
  auto base = jlo_entries(m, p.D, a);
  cplx sum = 0;
  for (size_t j = 1; j < a.size(); ++j) {
    auto e = base;
    e[j] = twisted_commutator(m, p.Ddot, sigma(m, a[j], -static_cast<int>(j)));
    sum += eval_bracket(h, e, 1.0).value;
  }
  return sum;
}

cplx Jbar(const ModelTriple& m, Family f, double tau, Insert v, const std::vector<Element>& a) {
  FamilyPoint p = family_point(m, f, tau);
  BracketEntry V = v == Insert::Ddot ? BracketEntry{p.Ddot, 1.0, 1} : BracketEntry{p.V, 1.0, 0};
  return contract(m, heat_data(m, p), jlo_entries(m, p.D, a), V).value;
}

DerJCheck check_derJ(const ModelTriple& m, Family f, double tau, const std::vector<Element>& a, double relStep) {
  double h = relStep * (tau > 0 ? tau : 1.0);
  if (f == Family::Phase) {
    if (tau - h < 0 || tau + h > 1) throw std::invalid_argument("check_derJ: u too close to the ends of [0,1]");
  }
  DerJCheck r;
  r.finiteDifference = (J(m, f, tau + h, a) - J(m, f, tau - h, a)) / (2 * h);
  r.identity = K(m, f, tau, a) - Jbar(m, f, tau, Insert::Commutator, a);
  double s = std::max(std::abs(r.finiteDifference), std::abs(r.identity));
  r.relative = s > 0 ? std::abs(r.finiteDifference - r.identity) / s : 0.0;
  return r;
}

// ---------------------------------------------------------------------------------------

cplx apply_b(const NumCochain& phi, const std::vector<Element>& a) {
  const int n = static_cast<int>(a.size()) - 2;
  if (n < 0) throw std::invalid_argument("apply_b: need at least two inputs");
  cplx sum = 0;
  for (int i = 0; i <= n; ++i) {
    std::vector<Element> x;
    for (int k = 0; k < i; ++k) x.push_back(a[k]);
    x.push_back(product(a[i], a[i + 1]));
    for (int k = i + 2; k <= n + 1; ++k) x.push_back(a[k]);
    sum += (i % 2 ? -1.0 : 1.0) * phi(x);
  }
  std::vector<Element> x{product(a[n + 1], a[0])};
  for (int k = 1; k <= n; ++k) x.push_back(a[k]);
  sum += ((n + 1) % 2 ? -1.0 : 1.0) * phi(x);
  return sum;
}

cplx apply_B(const NumCochain& phi, const std::vector<Element>& a, const Element& one) {
  const int n = static_cast<int>(a.size());
  if (n < 1) throw std::invalid_argument("apply_B: need at least one input");
  cplx sum = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<Element> x{one};
    for (int k = 0; k < n; ++k) x.push_back(a[(i + k) % n]);
    sum += (((n - 1) * i) % 2 ? -1.0 : 1.0) * phi(x);
  }
  return sum;
}

// ---------------------------------------------------------------------------------------
// Transgression

namespace {

template <class F>
cplx gauss_panel(F&& f, double a, double b) {
  using G = boost::math::quadrature::gauss<double, 30>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx s = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      s += w[i] * f(c);
    } else {
      s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
    }
  }
  return s * h;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return g;
}

}  // namespace

TransgressResult transgress(const ModelTriple& m, const std::vector<Element>& a, const TransgressOptions& opt) {
  TransgressResult res;
  bool allZero = true;
  for (const auto& e : a) allZero = allZero && e.op.isZero(0);
  std::vector<double> eg = opt.epsGrid.empty() ? log_grid(0.02, 0.4, 14) : opt.epsGrid;
  std::sort(eg.begin(), eg.end());
  if (allZero) {
    for (double e : eg) res.samples.push_back({e, 0.0});
    return res;
  }
  auto f = [&](double t) { return Jbar(m, Family::Scale, t, Insert::Ddot, a); };

  // upper limit: march out until the integrand is negligible against its running maximum
  double fmax = 0;
  for (double t : log_grid(eg.front(), 4.0, 24)) fmax = std::max(fmax, std::abs(f(t)));
  double T = 4.0;
  while (true) {
    double v = std::abs(f(T));
    fmax = std::max(fmax, v);
    if (v <= opt.tailTol * std::max(fmax, 1e-300) || T > 1e4) break;
    T *= 1.25;
  }
  if (T > 1e4) throw std::runtime_error("transgress: integrand does not decay (is D invertible?)");
  res.tInfinity = T;

  // panels: the eps grid points, then log-spaced up to T
  std::vector<double> nodes = eg;
  double start = eg.back();
  int extra = std::max(2, static_cast<int>(std::ceil(opt.panelsPerDecade * std::log10(T / start))));
  for (int i = 1; i <= extra; ++i) nodes.push_back(start * std::pow(T / start, double(i) / extra));
  std::vector<cplx> pieces(nodes.size() - 1);
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    // subdivide each panel so that it spans at most a factor 1.5
    double lo = nodes[i], hi = nodes[i + 1];
    int sub = std::max(1, static_cast<int>(std::ceil(std::log(hi / lo) / std::log(1.5))));
    cplx s = 0;
    for (int k = 0; k < sub; ++k) {
      double a0 = lo * std::pow(hi / lo, double(k) / sub), a1 = lo * std::pow(hi / lo, double(k + 1) / sub);
      s += gauss_panel(f, a0, a1);
    }
    pieces[i] = s;
  }
  std::vector<cplx> G(eg.size());
  cplx acc = 0;
  for (size_t i = pieces.size(); i-- > 0;) {
    acc += pieces[i];
    if (i < eg.size()) G[i] = acc;
  }
  for (size_t i = 0; i < eg.size(); ++i) res.samples.push_back({eg[i], G[i]});
  res.fit = fit_constant_term(eg, G, opt.divergentPowers, opt.fit);
  res.value = res.fit.value;
  return res;
}

ConstantTermFit constant_term_J(const ModelTriple& m, const std::vector<Element>& a, const std::vector<double>& epsGrid,
                                const std::vector<double>& poleBasis, const FitOptions& opt) {
  const double q = static_cast<double>(a.size()) - 1;
  std::vector<cplx> values;
  for (double e : epsGrid) values.push_back(J(m, Family::Scale, std::sqrt(e), a));
  std::vector<double> exps;
  for (double rho : poleBasis) exps.push_back(q / 2 - rho);
  return fit_constant_term(epsGrid, values, exps, opt);
}

}  // namespace twist::jlo
