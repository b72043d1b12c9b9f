#pragma once
// Twisted JLO brackets on model triples with diagonal D^2.
//
// A bracket <A_0, ..., A_q>_D is the simplex integral of
//   Tr(gamma A_0 e^{-s_0 m_0 t^2 D^2} A_1 e^{-s_1 m_1 t^2 D^2} ... A_q e^{-s_q m_q t^2 D^2})
// with m_j = (g_0 ... g_j)^2, g_i the character of the group part of A_i. Because D^2 is
// diagonal the trace is a finite sum over index tuples, each weighted by a divided difference
// of exp, which is evaluated exactly (Opitz).

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "twist/models.hpp"

namespace twist::jlo {

using models::cplx;
using models::Mat;
using models::ModelTriple;
using models::RVec;

// alpha U^* with character g = mu(U); parity is the Z/2 degree used by the contraction signs.
struct BracketEntry {
  Mat op;
  double groupFactor = 1.0;
  int parity = 0;
};
using Element = BracketEntry;

struct BracketValue {
  cplx value{0.0, 0.0};
  double errorBound = 0;  // rounding estimate plus contributions from outside the inner window
  int q = 0;
  double t = 1;
  int degree = 0;         // homogeneity degree m (eval_bracket_epsilon only)
  long long tuples = 0;
};

struct BracketOptions {
  long long maxTuples = 20'000'000;
};

// Heat data used by the evaluator: diagonal of D^2, grading (empty = none), inner-window mask.
struct HeatData {
  RVec dsq;
  RVec gamma;
  std::vector<char> inner;
};
HeatData heat_data(const ModelTriple& m);

// int over the q-simplex of exp(-sum s_j c_j), q = c.size() - 1
double simplex_exp_integral(const std::vector<double>& c);

BracketValue eval_bracket(const ModelTriple& m, const std::vector<BracketEntry>& entries, double t,
                          const BracketOptions& opt = {});
BracketValue eval_bracket(const HeatData& h, const std::vector<BracketEntry>& entries, double t,
                          const BracketOptions& opt = {});
// eps^{mDeg/2} <entries>_{eps^{1/2} D}
BracketValue eval_bracket_epsilon(const ModelTriple& m, const std::vector<BracketEntry>& entries, double eps,
                                  int mDeg, const BracketOptions& opt = {});

// ---- algebra on elements ----
Element unit(const ModelTriple& m);
Element product(const Element& a, const Element& b);
Element sigma(const ModelTriple& m, const Element& a, int k);
// [X, a]_sigma = X a - sigma(a) X for an odd operator X (D, a family member or its derivative)
Element twisted_commutator(const ModelTriple& m, const Mat& X, const Element& a);
// [D^2, a]_sigma = D^2 a - sigma^2(a) D^2
Element twisted_commutator_sq(const ModelTriple& m, const Element& a);
// Element from a scaling-model matrix alpha (banded) and shift power p: alpha U^p, g = mu^{-p}
Element scaling_element(const ModelTriple& s, const Mat& alpha, int p);

// ---- lemma checks (absolute and relative residuals) ----
struct Residual {
  double absolute = 0;
  double relative = 0;
  cplx lhs, rhs;
};
Residual check_forB(const ModelTriple& m, const std::vector<BracketEntry>& entries, double t);
Residual check_forb(const ModelTriple& m, const std::vector<BracketEntry>& entries, int j, double t);
// <A_0..A_q>(eps) against <A_1..A_q, sigma^{-m}(A_0)>(g_0^2 eps); needs total character 1
Residual check_cyc1(const ModelTriple& m, const std::vector<BracketEntry>& entries, int mDeg, double eps);

// ---- constant term ----
struct FitOptions {
  std::vector<double> extraPowers{0.5, 1.0, 1.5, 2.0};  // positive-power corrections
  double maxCondition = 1e13;
  double minDecades = 1.5;
};
struct ConstantTermFit {
  cplx value{0.0, 0.0};
  cplx logCoefficient{0.0, 0.0};  // coefficient of log(eps) at order eps^0
  double logMagnitude = 0;
  double residual = 0;             // rms of the fit residual
  double condition = 0;
  std::vector<std::string> basis;
  std::vector<cplx> coefficients;
};
// Least-squares fit of values(eps) against eps^e, eps^e log eps (e in exponents), 1 and extras.
ConstantTermFit fit_constant_term(const std::vector<double>& eps, const std::vector<cplx>& values,
                                  const std::vector<double>& exponents, const FitOptions& opt = {});
// Basis exponents are q/2 - rho_j for the pole positions rho_j.
ConstantTermFit extract_constant_term(const ModelTriple& m, const std::vector<BracketEntry>& entries, int mDeg,
                                      const std::vector<double>& epsGrid, const std::vector<double>& poleBasis,
                                      const FitOptions& opt = {});

// ---- families D_t = t D and D_u = D |D|^{-u} ----
enum class Family { Scale, Phase };
struct FamilyPoint {
  Mat D;      // D_tau
  RVec dsq;   // diagonal of D_tau^2
  Mat Ddot;   // d D_tau / d tau
  Mat V;      // D_tau Ddot + Ddot D_tau = d(D_tau^2)/d tau (diagonal)
};
FamilyPoint family_point(const ModelTriple& m, Family f, double tau);
HeatData heat_data(const ModelTriple& m, const FamilyPoint& p);

// Contraction: sum_k (-1)^{(#A_0+..+#A_k) #V} <sigma^2 A_0, .., sigma^2 A_k, V, A_{k+1}, .., A_q>_{D_tau}
BracketValue jbar_bracket(const ModelTriple& m, const std::vector<BracketEntry>& entries, const BracketEntry& V,
                          Family f, double tau);

// Cochains evaluated on inputs a_0..a_q (elements of the crossed product).
cplx J(const ModelTriple& m, Family f, double tau, const std::vector<Element>& a);
cplx K(const ModelTriple& m, Family f, double tau, const std::vector<Element>& a);
enum class Insert { Ddot, Commutator };
cplx Jbar(const ModelTriple& m, Family f, double tau, Insert v, const std::vector<Element>& a);

struct DerJCheck {
  cplx finiteDifference, identity;
  double relative = 0;
};
// d/dtau J^q against K^q - Jbar^q(D_tau, [D_tau, Ddot]) by central differences, h = relStep * tau
DerJCheck check_derJ(const ModelTriple& m, Family f, double tau, const std::vector<Element>& a,
                     double relStep = 1e-4);

// ---- numerical b and B on cochains given as functions of their inputs ----
using NumCochain = std::function<cplx(const std::vector<Element>&)>;
// (b phi)(a_0..a_{n+1}) for phi of degree n = a.size() - 2
cplx apply_b(const NumCochain& phi, const std::vector<Element>& a);
// (B phi)(a_0..a_{n-1}) for phi of degree n = a.size()
cplx apply_B(const NumCochain& phi, const std::vector<Element>& a, const Element& one);

// ---- transgression ----
struct TransgressOptions {
  std::vector<double> epsGrid;       // lower cutoffs for the finite-part fit; default log grid
  double tailTol = 1e-14;            // integrate until |integrand| falls below this (relative)
  int panelsPerDecade = 6;
  FitOptions fit{{1.0, 2.0, 3.0}, 1e13, 1.0};
  std::vector<double> divergentPowers{-1.0, 0.0};  // eps^e and eps^e log eps for the lower-end divergence
};
struct TransgressResult {
  cplx value{0.0, 0.0};  // Pf_0 int_eps^infty Jbar^q(tD, D) dt
  double tInfinity = 0;
  ConstantTermFit fit;
  std::vector<std::pair<double, cplx>> samples;  // (eps, int_eps^T)
};
TransgressResult transgress(const ModelTriple& m, const std::vector<Element>& a, const TransgressOptions& opt = {});
// Pf_0 of J^q(eps^{1/2} D)(a) as eps -> 0, basis exponents q/2 - rho_j as in extract_constant_term
ConstantTermFit constant_term_J(const ModelTriple& m, const std::vector<Element>& a, const std::vector<double>& epsGrid,
                                const std::vector<double>& poleBasis, const FitOptions& opt = {});

// thread count for tuple sums; default from TWIST_THREADS or hardware concurrency
void set_threads(int n);
int threads();

}  // namespace twist::jlo
