#pragma once
// Zeta functions and residues on the model triples, the constant-term cocycle built from
// residues, and the index-pairing cocycles.
//
// Circle models: the diagonal of P is modelled on each half-line (and each doubled component)
// as a finite Laurent sum sum_j c_j |d|^j. Inside the inner window the exact diagonal is summed;
// beyond it the symbol is continued and summed with Hurwitz zeta functions, which carry all the
// poles. Symbols that are not exactly of this form (shifted rational entries such as 1/|d-k|)
// are fitted asymptotically and flagged.
// Scaling models: every zeta function is a finite sum, hence entire.

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "twist/models.hpp"

namespace twist::residue {

using models::cplx;
using models::Mat;
using models::ModelConfig;
using models::ModelTriple;
using models::RVec;

// Reported scalar: value plus how it was obtained.
struct Quantity {
  cplx value{0.0, 0.0};
  std::string method;
  double errorBound = 0;
  bool hasCrossCheck = false;
  cplx crossCheck{0.0, 0.0};
  std::string provenance;  // PAPER, TRIVIAL or DERIVED
  nlohmann::json extra = nlohmann::json::object();
};
nlohmann::json to_json(const Quantity& q);

// Hurwitz zeta sum_{n>=0} (n+a)^{-s}, a > 0, s != 1 (Euler-Maclaurin).
cplx hurwitz_zeta(cplx s, double a);

struct Pole {
  cplx location;  // in the variable z of zeta_P(z)
  cplx residue;
};
class PoleError : public std::domain_error {
 public:
  PoleError(const std::string& what, Pole p) : std::domain_error(what), pole(p) {}
  Pole pole;
};

struct SymbolGroup {
  int sign = 1;          // half-line of d
  int component = 0;     // index inside the doubled fibre
  std::vector<double> headAbs;   // |d| on the inner window
  std::vector<cplx> headDiag;    // P_ii there
  int lowPower = 0;              // P_ii = sum_i coef[i] |d|^{lowPower + i} beyond the window
  std::vector<cplx> coef;
  double tailStart = 0;          // first |d| beyond the window
  bool exact = true;             // false: asymptotic fit
  double c1Error = 0;            // uncertainty of the |d|^{-1} coefficient
};

struct ZetaModel {
  enum Kind { CircleHurwitz, FiniteSupport } kind = FiniteSupport;
  std::vector<SymbolGroup> groups;   // CircleHurwitz
  std::vector<double> absEig;        // FiniteSupport
  std::vector<cplx> weight;
  double fitResidual = 0;

  cplx operator()(cplx z) const;     // throws PoleError at a pole
  std::vector<Pole> poles() const;
  cplx residue_at_zero() const;      // Res_{z=0} zeta(2z)
  cplx finite_part_at_zero() const;  // constant Laurent coefficient of zeta(2z) at 0
};

struct SymbolOptions {
  int maxPower = 8;      // largest power of |d| searched
  int minPower = -14;
  int maxTerms = 10;
  double exactTol = 1e-11;     // relative fit residual accepted as exact
  double validateTol = 1e-9;   // relative extrapolation error on |d| in [max/8, max/2)
};
// P given directly or as Q with P = Q |D|^{-S}.
ZetaModel zeta_model(const ModelTriple& m, const Mat& P, const SymbolOptions& opt = {});
ZetaModel zeta_model(const ModelTriple& m, const Mat& Q, int S, const SymbolOptions& opt = {});

cplx zeta(const ModelTriple& m, const Mat& P, cplx z);

// Res_{z=0} zeta_P(2z): closed form with the numerical limit z zeta(2z) -> as cross-check.
Quantity residue_functional(const ModelTriple& m, const Mat& P);
Quantity residue_functional(const ModelTriple& m, const Mat& Q, int S);
double numerical_residue_limit(const ZetaModel& z, double h = 1e-2);

// ---- constant-term cocycle ----
struct Input {
  Mat op;
  double groupFactor = 1;  // character of the group part
  int order = 0;           // pseudodifferential order (0 for algebra elements)
};
struct GimelOptions {
  int kmax = 2;
};
struct GimelTerm {
  std::vector<int> k;
  cplx coefficient;
  cplx residue;
  bool certifiedZero = false;  // pole bookkeeping: the order is below -1
};
struct GimelResult {
  Quantity value;           // without the sqrt(2i) factor
  cplx withOddFactor;       // times sqrt(2i)
  std::vector<GimelTerm> terms;
  int certifiedFrom = 0;    // |k| from which all terms vanish by order counting
};
double ansatz_coefficient(int q, const std::vector<int>& k);
// nabla_sigma(X) = D^2 X - sigma^2(X) D^2, X of character g
Mat twisted_nabla(const ModelTriple& m, const Mat& X, double g, int times);
GimelResult gimel(const ModelTriple& m, int q, const std::vector<Input>& a, const GimelOptions& opt = {});

// Res Gamma(z) zeta_{gamma a}(2z) at 0, cross-checked by the heat-trace constant term.
Quantity tau0(const ModelTriple& m, const Mat& a);

// ---- index pairings ----
enum class PairingMode { Phase, Twisted, TwistedOdd };
// Phase:      Tr(gamma F [F,a_0] ... [F,a_p])
// Twisted:    Tr(gamma D^{-1}[D,a_0]_s ... D^{-1}[D,a_p]_s)
// TwistedOdd: (-1)^{(p+1)/2} Tr(F D^{-1}[D,a_0]_s ... D^{-1}[D,a_p]_s), ungraded models; equals the phase
//             value when D = F
cplx chern_pairing(const ModelTriple& m, PairingMode mode, const std::vector<Input>& a);

using InputBuilder = std::function<Input(const ModelTriple&)>;
// Same as above at cfg and at cfg with the outer dimension doubled; rejects products whose trace
// norm keeps growing (not trace class).
Quantity chern_pairing(const ModelConfig& cfg, PairingMode mode, const std::vector<InputBuilder>& a);
double trace_norm_growth(const ModelConfig& cfg, PairingMode mode, const std::vector<InputBuilder>& a);

struct IndexResult {
  int index = 0;
  int kernel = 0, cokernel = 0;       // genuine (inner-window) kernel / cokernel
  int edgeArtefacts = 0;              // small singular vectors living at the truncation edge
  double largestSmall = 0;            // largest singular value below threshold
  double smallestLarge = 0;           // smallest singular value above threshold
  bool separated = true;
  bool stable = true;                 // same index after doubling (config overload only)
};
IndexResult fredholm_index(const ModelTriple& m, const Mat& u, double threshold = 1e-8);
IndexResult fredholm_index(const ModelConfig& cfg, const InputBuilder& u, double threshold = 1e-8);

struct ScanRow {
  double u;
  cplx value;
};
struct ScanResult {
  std::vector<ScanRow> rows;
  double deviation = 0;  // (max - min) / max |value|, 0 when all values vanish
  cplx phaseValue;       // Phase-mode pairing for comparison with the u = 1 endpoint
};
// Pairing candidate with D replaced by D_u = D |D|^{-u}: Twisted (graded models) or TwistedOdd.
ScanResult homotopy_pairing_scan(const ModelTriple& m, const std::vector<double>& uGrid, const std::vector<Input>& a);
ModelTriple with_phase_family(const ModelTriple& m, double u);

// Model at doubled outer dimension (circle cutoff or scaling window).
ModelConfig doubled(const ModelConfig& cfg);

}  // namespace twist::residue
