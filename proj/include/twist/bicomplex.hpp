#pragma once
// Cochain templates valued in formal traces, the (b, B) operators, the local Hochschild
// cocycle, the residue Ansatz and an order-by-order verifier for its cocycle identity.

#include "twist/ncalg.hpp"

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace twist::bicomplex {

using ncalg::Context;
using ncalg::Expr;
using ncalg::TraceExpr;

struct CochainTemplate {
  int degree = 0;
  std::string label;
  std::function<TraceExpr(const std::vector<Expr>&)> body;

  TraceExpr operator()(const std::vector<Expr>& slots) const;
  // Instantiate on the letters a0, ..., a_degree.
  TraceExpr on_letters() const;
  std::string str() const;
};

CochainTemplate operator+(const CochainTemplate& a, const CochainTemplate& b);
CochainTemplate scale(const CochainTemplate& a, const Coeff& c);

CochainTemplate hochschild_b(const CochainTemplate& c);
CochainTemplate connes_B(const CochainTemplate& c);

// (a0..ap) -> DIX[p]{ g a0 [D, s^-1(a1)] ... [D, s^-p(ap)] D^-p }; the grading is present for
// even p only (odd triples carry no grading).
CochainTemplate build_kappa(int p, const Context& ctx);

// c_{q,k}; the sqrt(2i) factor is folded in for odd q when requested.
Coeff ansatz_coefficient(int q, const std::vector<int>& k, bool oddNormalization = true);

struct AnsatzOptions {
  ncalg::CommForm form = ncalg::CommForm::Expanded;  // Formal needs crossed-product mode
  bool oddNormalization = true;
  // Include multi-index k (default: every entry <= kmax).
  std::function<bool(const std::vector<int>&)> select;
};

CochainTemplate build_tau_ansatz(int q, int kmax, const Context& ctx, const AnsatzOptions& opt = {});
// q = 0 component: a -> TAU0{ g a }.
CochainTemplate build_tau0();

// Every multi-index of length q with entries in [0, kmax].
std::vector<std::vector<int>> multi_indices(int q, int kmax);

struct VerifyOptions {
  int maxWords = 200000;  // non-termination guard on the relation closure
  int splitMin = -2, splitMax = 4;
  std::vector<std::vector<int>> shifts;  // group exponent configurations; empty = defaults
  std::vector<Rational> muSamples = {Rational(3, 2), Rational(7, 5)};
  Rational upperScale = 1;  // weight of the B part; anything but 1 must fail (negative control)
};

struct VerifyReport {
  bool pass = false;
  nlohmann::json json;
};

// b J^{q-1} + B J^{q+1} on inputs a_i V^{n_i} in the crossed product, symbol-expanded and
// reduced modulo trace relations down to order -(q+1)-kmax.
VerifyReport verify_cocycle_identity(int q, int kmax, const VerifyOptions& opt = {});

}  // namespace twist::bicomplex
