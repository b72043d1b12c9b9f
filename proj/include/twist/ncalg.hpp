#pragma once
// Twisted operator words, normal form, sigma, twisted commutators and residue traces.

#include "twist/coeff.hpp"

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace twist::ncalg {

enum class AtomKind : int { Grading = 0, Alg = 1, DPow = 2, AbsDPow = 3, Group = 4 };

using GroupVec = std::vector<std::pair<int, int>>;  // sorted (id, power), nonzero powers

GroupVec group_add(const GroupVec& a, const GroupVec& b, int scale = 1);

// An algebra letter is a base symbol (optionally adjointed and conjugated by a group
// element, U|>a = U a U*) followed by a chain of operations applied innermost first:
// 's' = sigma^k, 'd' = [D,.]_sigma, 't' = [|D|,.]_sigma, 'n' = [D^2,.]_sigma.
// The chain is kept verbatim because sigma need not commute with the derivations.
struct LetterOp {
  char kind;  // 's', 'd', 't', 'n'
  int k;
  bool operator<(const LetterOp& o) const { return std::tie(kind, k) < std::tie(o.kind, o.k); }
  bool operator==(const LetterOp& o) const { return kind == o.kind && k == o.k; }
};

struct Atom {
  AtomKind kind = AtomKind::Alg;
  std::string name;
  int id = 0;  // group id
  int k = 0;   // D / |D| exponent, group power
  bool adjoint = false;
  GroupVec conj;
  std::vector<LetterOp> ops;

  static Atom alg(const std::string& name, int sigma = 0, bool adjoint = false);
  static Atom group(int id, int power);
  static Atom dpow(int k);
  static Atom absd(int k);
  static Atom grading();

  bool is_letter() const { return kind == AtomKind::Alg; }
  bool is_dpower() const { return kind == AtomKind::DPow || kind == AtomKind::AbsDPow; }
  int count(char op) const;
  bool derived() const { return count('d') + count('t') + count('n') > 0; }
  // Letter of the algebra itself: no derivation in the chain.
  bool plain() const { return is_letter() && !derived(); }
  // Z/2 parity for the grading: D^odd and letters with an odd number of d's are odd.
  int parity() const;
  // Homogeneity degree under D -> lambda D.
  int degree() const;
  // Pseudodifferential order: nabla raises order by one, D^k has order k.
  int order() const;
  // Outermost sigma exponent (0 if the chain does not end with a sigma).
  int sigma_slot() const;
  // Append an operation, merging with an equal trailing kind.
  Atom with_op(char op, int k) const;
  // Chain with the outermost sigma removed.
  Atom without_outer_sigma() const;

  auto key() const { return std::tie(kind, name, id, k, adjoint, conj, ops); }
  bool operator<(const Atom& o) const { return key() < o.key(); }
  bool operator==(const Atom& o) const { return key() == o.key(); }
  bool operator!=(const Atom& o) const { return !(*this == o); }
  std::string str() const;
  static Atom parse(const std::string& token);
};

using Word = std::vector<Atom>;

std::string word_str(const Word& w);
int word_parity(const Word& w);
int word_degree(const Word& w);
int word_order(const Word& w);

enum class SigmaMode { Abstract, CrossedProduct };

struct Context {
  SigmaMode mode = SigmaMode::Abstract;
  // Optional concrete character values; ids absent here are formal symbols.
  std::map<int, double> concreteMu;
  // Character of a group vector, if every id has a concrete value.
  std::optional<double> character(const GroupVec& g) const;
  bool character_is_one(const GroupVec& g) const;
};

class Expr {
 public:
  Expr() = default;
  explicit Expr(const Word& w, const Coeff& c = 1);
  static Expr one() { return Expr(Word{}); }
  static Expr letter(const std::string& name, int sigma = 0);
  static Expr atom(const Atom& a) { return Expr(Word{a}); }
  static Expr D(int k = 1) { return atom(Atom::dpow(k)); }
  static Expr absD(int k = 1) { return atom(Atom::absd(k)); }
  static Expr U(int id, int power = 1) { return atom(Atom::group(id, power)); }
  static Expr gamma() { return atom(Atom::grading()); }

  void add(const Word& w, const Coeff& c);
  bool is_zero() const { return terms_.empty(); }
  size_t size() const { return terms_.size(); }
  const std::map<Word, Coeff>& terms() const { return terms_; }

  Expr operator+(const Expr& o) const;
  Expr operator-(const Expr& o) const;
  Expr operator-() const;
  Expr operator*(const Expr& o) const;  // concatenation, then normalize
  Expr operator*(const Coeff& c) const;
  Expr& operator+=(const Expr& o);
  Expr& operator-=(const Expr& o);
  bool operator==(const Expr& o) const { return terms_ == o.terms_; }

  std::string str() const;
  static Expr parse(const std::string& text);

 private:
  std::map<Word, Coeff> terms_;
};

inline Expr operator*(const Coeff& c, const Expr& e) { return e * c; }

// Canonical word order: grading leftmost (signs), group letters rightmost (characters and
// conjugation prefixes), D/|D| runs merged into D^n (even parity) or D|D|^{n-1} (odd).
std::pair<Coeff, Word> normalize_word(const Word& w);
Expr normalize(const Expr& e);

Expr apply_sigma(const Expr& e, int k, const Context& ctx);
Expr adjoint(const Expr& e);

enum class WithOp { D, AbsD, DSquared };
enum class CommForm { Expanded, Formal };

// [W, x]_sigma = W x - sigma^m(x) W with (W, m) = (D,1), (|D|,1), (D^2,2).
Expr twisted_commutator(const Expr& x, WithOp op, const Context& ctx,
                        CommForm form = CommForm::Expanded);

enum class HigherForm { Plain, WithD };
// (a)^{(k)}_sigma resp. [D,a]^{(k)}_sigma as alternating binomial sums. The Formal variant
// is available in crossed-product mode, where [D, P U]^{(k)}_sigma = nabla^k(dP) U.
Expr higher_twisted_commutator(const Expr& a, int k, HigherForm form, const Context& ctx,
                               CommForm repr = CommForm::Expanded);

// Right side of the twisted Leibniz rule for (P1...Pm)^{(k)}_sigma:
// sum over m1+..+mm = k of multinomial * prod_i (sigma^{2(m_{i+1}+..+m_m)}(P_i))^{(m_i)}_sigma.
Expr twisted_leibniz_expansion(const std::vector<Expr>& factors, int k, const Context& ctx);

// alpha^m(a) = D^m sigma^{-m}(a) D^{-m}
Expr alpha_sigma(const Expr& a, int m, const Context& ctx);
Expr sigma_capital(const Expr& a, int k, int l, const Context& ctx);
// D^{2k+1-l} Sigma^{(k,l)}(a) - [D, sigma^{-l}(a)]^{(k)} D^{-l}, normalized
Expr sigma_capital_identity_residual(const Expr& a, int k, int l, const Context& ctx);

// Formal derivation on letter words (Leibniz, twisted by sigma^m on the left factors in
// abstract mode). Group letters are transparent; words with D-powers or grading are rejected.
Expr apply_derivation(const Expr& e, WithOp op, const Context& ctx);

// Replace every derived letter by its defining operator expression and normalize.
Expr expand_formal(const Expr& e, const Context& ctx);

struct Expansion {
  Expr terms;
  int remainderOrder;  // order of the dropped remainder
  bool exact;          // remainder is identically zero
};
// |D|^s b ~ sum_{k<N} s(s-1)..(s-k+1)/k! delta^k(b) |D|^{s-k}
Expansion expand_abs_power(const Expr& b, int s, int N, const Context& ctx);
// D^{2s} T ~ sum_{k<N} binom(s,k) nabla^k(T) D^{2(s-k)}
Expansion expand_d2_power(const Expr& T, int s, int N, const Context& ctx);

struct SymbolicExpansionTerm {
  int k;
  std::vector<Rational> polyInS;  // coefficients of s^0, s^1, ... of s(s-1)..(s-k+1)/k!
  Expr derived;                   // delta^k(b)
  std::string str() const;
};
// Same expansion with s kept as a formal variable.
std::vector<SymbolicExpansionTerm> expand_abs_power_symbolic(const Expr& b, int N,
                                                             const Context& ctx);

// Untwisted symbol calculus: pushes every D-power to the right of all letters using
// D x = x D + d(x), D d(x) = -d(x) D + nabla(x), |D|^s x = sum binom(s/2,k) nabla^k(x)|D|^{s-2k}.
// Terms whose order falls below minOrder are dropped. Letters must be of the form
// nabla^j(x) or nabla^j(d x) with no sigma decoration.
Expr symbol_normalize(const Expr& e, int minOrder);

// ---------------------------------------------------------------------------------------
// Traces

enum class TraceKind { Residue = 0, Dixmier = 1, Tau0 = 2 };

struct TraceRules {
  bool cyclic = true;
  bool sigmaInvariance = false;
  bool selberg = true;
  bool hypertrace = true;
  bool conjugationInvariance = true;
};

struct TraceSummand {
  TraceKind kind = TraceKind::Residue;
  int p = 0;
  Expr argument;
  Coeff scalar = 1;
};

class TraceExpr {
 public:
  TraceExpr() = default;
  void add(TraceKind kind, int p, const Expr& arg, const Coeff& scalar = 1);
  void add(const TraceExpr& o, const Coeff& scalar = 1);
  static TraceExpr res(const Expr& arg) {
    TraceExpr t;
    t.add(TraceKind::Residue, 0, arg);
    return t;
  }
  static TraceExpr dix(int p, const Expr& arg) {
    TraceExpr t;
    t.add(TraceKind::Dixmier, p, arg);
    return t;
  }
  const std::vector<TraceSummand>& summands() const { return summands_; }
  TraceExpr operator+(const TraceExpr& o) const;
  TraceExpr operator-(const TraceExpr& o) const;
  TraceExpr operator*(const Coeff& c) const;
  bool is_zero() const;  // no summands with nonzero argument
  std::string str() const;
  static TraceExpr parse(const std::string& text);

 private:
  std::vector<TraceSummand> summands_;
};

// Canonical representative: each summand becomes scalar * kind{single word}, merged.
TraceExpr trace_normal_form(const TraceExpr& t, const Context& ctx, const TraceRules& rules);
bool trace_equal(const TraceExpr& a, const TraceExpr& b, const Context& ctx,
                 const TraceRules& rules);

// Canonical form of one word under a trace rule set; returns zero coefficient when the
// word is annihilated.
std::pair<Coeff, Word> canonical_trace_word(TraceKind kind, int p, const Word& w,
                                            const Context& ctx, const TraceRules& rules);

}  // namespace twist::ncalg
