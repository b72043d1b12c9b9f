#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <random>

#include "twist/bicomplex.hpp"
#include "twist/cli.hpp"
#include "twist/jlo.hpp"
#include "twist/residue.hpp"

namespace twist::cli {

namespace {

using models::cplx;
using models::Mat;
using models::ModelTriple;
using nlohmann::json;

json cjson(cplx z) { return z.imag() == 0 ? json(z.real()) : json{{"re", z.real()}, {"im", z.imag()}}; }

CheckResult exact(bool ok, const std::string& value, const std::string& expected, const std::string& detail = "") {
  return {value, expected, ok ? 0.0 : 1.0, detail};
}

CheckResult numeric(cplx value, cplx expected, bool relative, const std::string& detail = "") {
  double r = std::abs(value - expected);
  if (relative && std::abs(expected) > 0) r /= std::abs(expected);
  return {cjson(value), cjson(expected), r, detail};
}

std::map<int, cplx> random_poly(std::mt19937_64& rng, int deg) {
  std::normal_distribution<double> N;
  std::map<int, cplx> c;
  for (int k = -deg; k <= deg; ++k) c[k] = cplx(N(rng), N(rng));
  return c;
}

Mat banded_inner(const ModelTriple& m, int bw, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  Mat A = Mat::Zero(m.outerDim, m.outerDim);
  std::vector<char> in(m.outerDim, 0);
  for (int i : m.inner) in[i] = 1;
  for (int i = 0; i < m.outerDim; ++i)
    for (int j = std::max(0, i - bw); j <= std::min(m.outerDim - 1, i + bw); ++j)
      if (in[i] && in[j]) A(i, j) = cplx(N(rng), N(rng));
  return A;
}

ModelTriple circle(const CheckContext& c) { return models::build_circle(c.config.model.cutoff, c.config.model.innerFraction); }
ModelTriple small_circle(const CheckContext& c) { return models::build_circle(c.config.jloCutoff); }
ModelTriple scaling(const CheckContext& c) {
  const auto& m = c.config.model;
  return models::build_scaling(m.windowLo, m.windowHi, m.kind == "scaling" ? m.mu : 2.0, m.collar);
}

// three diagonal functions on the inner window of the scaling model
std::vector<Mat> scaling_functions(const ModelTriple& s, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  int lo = INT32_MAX, hi = INT32_MIN;
  for (int i : s.inner) {
    lo = std::min(lo, s.labels[i]);
    hi = std::max(hi, s.labels[i]);
  }
  std::uniform_int_distribution<int> pick(lo + 4, hi - 4);
  std::vector<Mat> f;
  for (int k = 0; k < 3; ++k) {
    std::map<int, cplx> v;
    for (int j = 0; j < 3; ++j) v[pick(rng)] = cplx(N(rng), N(rng));
    f.push_back(models::scaling_function(s, v));
  }
  return f;
}

ncalg::Context crossed() {
  ncalg::Context c;
  c.mode = ncalg::SigmaMode::CrossedProduct;
  return c;
}

ncalg::Word random_letters(std::mt19937_64& rng, int len) {
  using ncalg::Atom;
  std::vector<Atom> alphabet = {Atom::alg("a"), Atom::alg("b", -1), Atom::alg("c", 0, true), Atom::group(1, 1),
                                Atom::group(2, -1)};
  std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);
  ncalg::Word w;
  for (int j = 0; j < len; ++j) w.push_back(alphabet[pick(rng)]);
  return w;
}

double simplex_quadrature(const std::vector<double>& c) {
  using G = boost::math::quadrature::gauss<double, 30>;
  const int q = static_cast<int>(c.size()) - 1;
  std::function<double(int, double, double)> rec = [&](int j, double rest, double acc) -> double {
    if (j > q) return std::exp(-(acc + rest * c[0]));
    return G::integrate([&](double s) { return rec(j + 1, rest - s, acc + s * c[j]); }, 0.0, rest);
  };
  return rec(1, 1.0, 0.0);
}

std::vector<CheckSpec> build_catalog() {
  std::vector<CheckSpec> v;
  const std::vector<std::string> circles{"circle", "conformal"};
  auto add = [&](CheckSpec s) { v.push_back(std::move(s)); };

  // ---- symbolic-identities ----
  add({"normal-form.scaling-commutation", "symbolic-identities", "defines an automorphism", Provenance::TRIVIAL, "",
       0, {}, [](const CheckContext&) {
         using ncalg::Expr;
         Expr lhs = Expr::parse("U1 |D|^3 U1^-1"), rhs = Expr::parse("mu1^3 |D|^3");
         bool ok = lhs == rhs && Expr::parse("U1 D^2") == Expr::parse("mu1^2 D^2 U1");
         return exact(ok, lhs.str(), rhs.str());
       }});
  add({"sigma.crossed-product", "symbolic-identities", "defines an automorphism", Provenance::PAPER, "", 0, {},
       [](const CheckContext&) {
         using ncalg::Expr;
         Expr got = ncalg::apply_sigma(Expr::parse("a U1"), 1, crossed());
         Expr want = Expr::parse("mu1^-1 a U1");
         return exact(got == want, got.str(), want.str());
       }});
  add({"sigma.multiplicative", "symbolic-identities", "defines an automorphism", Provenance::DERIVED,
       "product of separately twisted factors on random words", 0, {}, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         ncalg::Context ab;
         int bad = 0;
         for (int t = 0; t < 60; ++t) {
           ncalg::Expr x(random_letters(rng, 1 + int(rng() % 3))), y(random_letters(rng, 1 + int(rng() % 3)));
           int k = int(rng() % 5) - 2;
           for (const auto& ctx : {ab, crossed()})
             if (!(ncalg::apply_sigma(x * y, k, ctx) == ncalg::apply_sigma(x, k, ctx) * ncalg::apply_sigma(y, k, ctx)))
               ++bad;
         }
         return exact(bad == 0, std::to_string(bad) + " failures", "0 failures", "120 random products");
       }});
  add({"leibniz.twisted-commutator", "symbolic-identities", "twisted derivation rule",
       Provenance::DERIVED, "expansion of [D, ab]_sigma against sigma(a)[D,b]_sigma + [D,a]_sigma b", 0, {},
       [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         ncalg::Context ab;
         int bad = 0;
         for (int t = 0; t < 60; ++t) {
           ncalg::Expr a(random_letters(rng, 1 + int(rng() % 3))), b(random_letters(rng, 1 + int(rng() % 3)));
           auto lhs = ncalg::twisted_commutator(a * b, ncalg::WithOp::D, ab);
           auto rhs = ncalg::apply_sigma(a, 1, ab) * ncalg::twisted_commutator(b, ncalg::WithOp::D, ab) +
                      ncalg::twisted_commutator(a, ncalg::WithOp::D, ab) * b;
           if (!(lhs == rhs)) ++bad;
         }
         return exact(bad == 0, std::to_string(bad) + " failures", "0 failures", "60 random products");
       }});
  add({"leibniz.iterated", "symbolic-identities", "usual iterated Leibniz rule is replaced with",
       Provenance::DERIVED, "direct expansion of nabla_sigma^m of the product", 0, {}, [](const CheckContext&) {
         using ncalg::Expr;
         std::vector<Expr> pool = {Expr::parse("a U1"), Expr::parse("b U1^-2"), Expr::parse("c"), Expr::parse("a U2")};
         int bad = 0, n = 0;
         for (const auto& ctx : {crossed(), ncalg::Context{}})
           for (int m = 1; m <= 3; ++m) {
             std::vector<Expr> f(pool.begin(), pool.begin() + m);
             Expr prod = Expr::one();
             for (const auto& x : f) prod = prod * x;
             for (int q = 0; q <= 3; ++q, ++n)
               if (!(ncalg::higher_twisted_commutator(prod, q, ncalg::HigherForm::Plain, ctx) ==
                     ncalg::twisted_leibniz_expansion(f, q, ctx)))
                 ++bad;
           }
         return exact(bad == 0, std::to_string(bad) + " failures", "0 failures", std::to_string(n) + " cases, m<=3, q<=3");
       }});

  // ---- hochschild ----
  for (int p = 1; p <= 2; ++p)
    add({"hochschild.b-kappa-p" + std::to_string(p), "hochschild",
         "The end result is 0 because the successive terms cancel in pairs", Provenance::PAPER, "", 0, {},
         [p](const CheckContext&) {
           ncalg::Context ctx;
           auto t = bicomplex::hochschild_b(bicomplex::build_kappa(p, ctx)).on_letters();
           auto nf = ncalg::trace_normal_form(t, ctx, ncalg::TraceRules{});
           return exact(nf.is_zero(), nf.is_zero() ? "0" : nf.str(), "0",
                        std::to_string(t.summands().size()) + " terms before normalization");
         }});
  add({"hochschild.needs-hypertrace", "hochschild", "It is in fact a σ^{-p}-hypertrace",
       Provenance::DERIVED, "same normalization with the hypertrace rule disabled", 0, {}, [](const CheckContext&) {
         ncalg::Context ctx;
         ncalg::TraceRules r;
         r.hypertrace = false;
         bool nonzero = !ncalg::trace_normal_form(bicomplex::hochschild_b(bicomplex::build_kappa(1, ctx)).on_letters(), ctx, r)
                             .is_zero();
         return exact(nonzero, nonzero ? "nonzero" : "0", "nonzero");
       }});

  // ---- ansatz-obstruction ----
  auto Btau = [] {
    ncalg::Context ctx;
    return bicomplex::connes_B(bicomplex::build_tau_ansatz(1, 2, ctx)).on_letters();
  };
  add({"ansatz.B-tau1-display", "ansatz-obstruction", "This expression vanishes if", Provenance::PAPER, "", 0, {},
       [Btau](const CheckContext&) {
         using namespace ncalg;
         Context ctx;
         auto Bt = Btau();
         TraceExpr expected;
         Expr F = Expr::D(1) * Expr::absD(-1);
         for (int k = 0; k <= 2; ++k) {
           Coeff c = bicomplex::ansatz_coefficient(1, {k});
           for (int j = 0; j <= k; ++j) {
             Coeff cj = c * Coeff(binomial(k, j) * (j % 2 ? -1 : 1));
             expected.add(TraceKind::Residue, 0, F * Expr::letter("a0", -2 * (k - j) - 1), cj);
             expected.add(TraceKind::Residue, 0, F * Expr::letter("a0", -2 * (k - j)), -cj);
           }
         }
         bool ok = trace_equal(Bt, expected, ctx, TraceRules{});
         return exact(ok, trace_normal_form(Bt, ctx, TraceRules{}).str(), trace_normal_form(expected, ctx, TraceRules{}).str());
       }});
  add({"ansatz.B-tau1-sigma-invariant", "ansatz-obstruction", "This expression vanishes if", Provenance::PAPER, "", 0,
       {}, [Btau](const CheckContext&) {
         ncalg::Context ctx;
         ncalg::TraceRules r;
         r.sigmaInvariance = true;
         auto nf = ncalg::trace_normal_form(Btau(), ctx, r);
         return exact(nf.is_zero(), nf.is_zero() ? "0" : nf.str(), "0");
       }});

  // ---- residue-cocycle ----
  for (auto [q, k] : {std::pair{1, 0}, std::pair{1, 1}, std::pair{2, 0}})
    add({"cocycle.identity-q" + std::to_string(q) + "-kmax" + std::to_string(k), "residue-cocycle",
         "satisfies the cocycle identity", Provenance::PAPER, "", 0, {}, [q = q, k = k](const CheckContext&) {
           auto r = bicomplex::verify_cocycle_identity(q, k);
           return exact(r.pass, r.pass ? "0" : "nonzero remainder", "0", r.json.dump().substr(0, 400));
         }});
  add({"cocycle.mis-weighted-B-detected", "residue-cocycle", "satisfies the cocycle identity", Provenance::DERIVED,
       "verifier with the B part scaled by 2", 0, {}, [](const CheckContext&) {
         bicomplex::VerifyOptions o;
         o.upperScale = 2;
         bool fails = !bicomplex::verify_cocycle_identity(1, 1, o).pass;
         return exact(fails, fails ? "rejected" : "accepted", "rejected");
       }});
  add({"selberg.symbolic", "residue-cocycle", "de facto enforces the Selberg Principle", Provenance::PAPER, "", 0, {},
       [](const CheckContext&) {
         ncalg::Context ctx;
         auto nf = ncalg::trace_normal_form(ncalg::TraceExpr::res(ncalg::Expr::parse("a D |D|^-2 U1")), ctx, {});
         return exact(nf.is_zero(), nf.is_zero() ? "0" : nf.str(), "0");
       }});
  add({"selberg.scaling-residue", "residue-cocycle", "de facto enforces the Selberg Principle", Provenance::DERIVED,
       "finite-sum zeta function of the scaling model", 0, {}, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         auto s = scaling(c);
         auto f = scaling_functions(s, rng);
         double worst = 0;
         for (int p : {-2, -1, 1, 2}) {
           Mat P = f[0] * models::scaling_power(s, p) * s.D;
           worst = std::max(worst, std::abs(residue::residue_functional(s, P).value));
         }
         return CheckResult{worst, 0.0, worst, "max |res(f U^p D)|, p in {-2,-1,1,2}"};
       }});
  add({"residue.abs-inverse", "residue-cocycle", "is an (algebraic) trace", Provenance::DERIVED,
       "numerical limit z zeta(2z) as z -> 0 (Richardson)", 1e-8, circles, [](const CheckContext& c) {
         auto m = circle(c);
         Mat P = m.dsq.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
         auto q = residue::residue_functional(m, P);
         auto r = numeric(q.value, 1.0, false, "closed form " + std::to_string(q.value.real()));
         r.residual = std::max(r.residual, std::abs(q.crossCheck - 1.0));
         return r;
       }});
  add({"residue.fourier-mode", "residue-cocycle", "is an (algebraic) trace", Provenance::DERIVED,
       "zeroth Fourier coefficient of f", 1e-8, circles, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         auto m = circle(c);
         Mat P = m.dsq.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
         double worst = 0;
         for (int t = 0; t < 10; ++t) {
           auto f = random_poly(rng, 3);
           auto q = residue::residue_functional(m, models::trig_poly(m, f) * P);
           worst = std::max(worst, std::abs(q.value - f[0]) / std::abs(f[0]));
         }
         return CheckResult{worst, 0.0, worst, "max relative error over 10 random trig polynomials"};
       }});
  add({"residue.tracial", "residue-cocycle", "is an (algebraic) trace", Provenance::DERIVED,
       "asymptotic symbol fit error bound", 1e-6, circles, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         auto m = circle(c);
         Mat X = models::trig_poly(m, random_poly(rng, 2)) * m.dsq.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
         Mat G = models::trig_poly(m, random_poly(rng, 2));
         auto q = residue::residue_functional(m, X * G - G * X);
         return CheckResult{cjson(q.value), 0.0, std::abs(q.value),
                            "error bound " + std::to_string(q.errorBound)};
       }});

  // ---- constant-term ----
  add({"constant-term.jlo-vs-gimel", "constant-term", "The constant term has the expression", Provenance::DERIVED,
       "least-squares heat-expansion fit of the JLO bracket", 1e-3, circles, [](const CheckContext& c) {
         auto m = circle(c);
         const int N = c.config.model.cutoff;
         jlo::Element us{models::shift(m, -1), 1, 0}, u{models::shift(m, 1), 1, 0};
         auto cu = jlo::twisted_commutator(m, m.D, jlo::sigma(m, u, -1));
         std::vector<double> grid;
         for (int i = 0; i < 14; ++i) grid.push_back(30.0 / (double(N) * N) * std::pow(10.0, i / 13.0));
         auto fit = jlo::extract_constant_term(m, {us, cu}, 1, grid, {1.0}, {{0.5, 1, 1.5, 2}, 1e13, 1.0});
         auto g = residue::gimel(m, 1, {{models::shift(m, -1), 1, 0}, {models::shift(m, 1), 1, 0}});
         return numeric(fit.value, g.value.value, true, "gimel without the sqrt(2i) factor");
       }});
  add({"constant-term.vanishing-above-dimension", "constant-term", "for any q > p", Provenance::PAPER, "", 0, circles,
       [](const CheckContext& c) {
         auto m = circle(c);
         residue::Input us{models::shift(m, -1), 1, 0}, u{models::shift(m, 1), 1, 0};
         cplx v = residue::gimel(m, 3, {us, u, us, u}).value.value;
         return CheckResult{cjson(v), 0.0, std::abs(v), "gimel^3 on the circle (p = 1)"};
       }});
  add({"constant-term.scaling-selberg", "constant-term", "de facto enforces the Selberg Principle", Provenance::DERIVED,
       "finite-sum zeta function of the scaling model", 0, {}, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         auto s = scaling(c);
         auto f = scaling_functions(s, rng);
         double mu = s.mu;
         cplx v = residue::gimel(s, 1, {{f[0] * models::scaling_power(s, 1), 1 / mu, 0},
                                        {f[1] * models::scaling_power(s, -1), mu, 0}})
                      .value.value;
         return CheckResult{cjson(v), 0.0, std::abs(v), "entire zeta functions have no residues"};
       }});
  add({"constant-term.tau0", "constant-term", "In the even case", Provenance::DERIVED,
       "heat-trace constant term fit", 1e-6, circles, [](const CheckContext& c) {
         auto m = circle(c);
         auto g = models::graded_double(m);
         Mat b = Mat::Zero(g.outerDim, g.outerDim);
         for (int i = 0; i < g.outerDim; i += 2)
           if (m.labels[i / 2] >= 1) b(i, i) = 1;
         auto t = residue::tau0(g, b);
         auto r = numeric(t.value, -1.0, false, "half-line n >= 1, first component: zeta_H(0, 3/2) = -1");
         r.residual = std::max(r.residual, std::abs(t.crossCheck - t.value));
         return r;
       }});

  // ---- jlo-lemmas ----
  auto scaling_entries = [](const CheckContext& c, ModelTriple& s) {
    std::mt19937_64 rng(c.seed);
    s = scaling(c);
    auto f = scaling_functions(s, rng);
    return std::vector<jlo::Element>{jlo::scaling_element(s, f[0], 1), jlo::scaling_element(s, f[1], -2),
                                     jlo::scaling_element(s, f[2], 1)};
  };
  add({"jlo.selberg-zero", "jlo-lemmas", "de facto enforces the Selberg Principle", Provenance::TRIVIAL, "", 0, {},
       [scaling_entries](const CheckContext& c) {
         ModelTriple s;
         auto e = scaling_entries(c, s);
         cplx v = jlo::eval_bracket(s, {e[0], e[2]}, 0.8).value + jlo::eval_bracket(s, {e[0], e[1], e[0]}, 0.8).value;
         return CheckResult{cjson(v), 0.0, std::abs(v), "net shift != 0"};
       }});
  add({"jlo.forB-scaling", "jlo-lemmas", "Proceeding as in", Provenance::PAPER, "",
       1e-10, {}, [scaling_entries](const CheckContext& c) {
         ModelTriple s;
         auto e = scaling_entries(c, s);
         auto r = jlo::check_forB(s, e, 1.0);
         return CheckResult{cjson(r.lhs), cjson(r.rhs), r.relative, "q = 2, t = 1"};
       }});
  add({"jlo.forb-scaling", "jlo-lemmas", "Making use of the commutator formula", Provenance::PAPER, "", 1e-10, {},
       [scaling_entries](const CheckContext& c) {
         ModelTriple s;
         auto e = scaling_entries(c, s);
         auto r = jlo::check_forb(s, e, 1, 1.0);
         return CheckResult{cjson(r.lhs), cjson(r.rhs), r.relative, "q = 2, j = 1, t = 1"};
       }});
  add({"jlo.cyc1-scaling", "jlo-lemmas", "no longer exactly satisfied", Provenance::PAPER, "", 1e-10, {},
       [scaling_entries](const CheckContext& c) {
         ModelTriple s;
         auto e = scaling_entries(c, s);
         auto r = jlo::check_cyc1(s, e, 0, 0.3);
         return CheckResult{cjson(r.lhs), cjson(r.rhs), r.relative, "eps = 0.3"};
       }});
  add({"jlo.forB-circle", "jlo-lemmas", "Proceeding as in", Provenance::PAPER, "",
       1e-10, circles, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         auto m = small_circle(c);
         std::vector<jlo::Element> e{{banded_inner(m, 2, rng), 1, 0}, {banded_inner(m, 2, rng), 1, 0}};
         auto r = jlo::check_forB(m, e, 0.7);
         return CheckResult{cjson(r.lhs), cjson(r.rhs), r.relative, "q = 1, t = 0.7"};
       }});
  add({"jlo.divided-differences", "jlo-lemmas", "Duhamel", Provenance::DERIVED,
       "nested Gauss-Legendre quadrature over the simplex", 1e-10, {}, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         std::uniform_real_distribution<double> U(0, 30);
         double worst = 0;
         for (int t = 0; t < 6; ++t) {
           std::vector<double> x(2 + t % 3);
           for (auto& v : x) v = U(rng);
           double a = jlo::simplex_exp_integral(x), b = simplex_quadrature(x);
           worst = std::max(worst, std::abs(a - b) / std::abs(b));
         }
         return CheckResult{worst, 0.0, worst, "max relative difference, q <= 3"};
       }});

  // ---- index-pairing ----
  add({"index.phase-pairing", "index-pairing", "universal constant factor", Provenance::DERIVED,
       "rank count of [F, u]: one crossing of the sign change", 1e-12, circles, [](const CheckContext& c) {
         auto m = circle(c);
         cplx v = residue::chern_pairing(m, residue::PairingMode::Phase,
                                         {{models::shift(m, -1), 1, 0}, {models::shift(m, 1), 1, 0}});
         return numeric(v, 4.0, false, "Tr(F [F,u*] [F,u])");
       }});
  for (int k : {-2, -1, 1, 2})
    add({"fredholm_index(e^{" + std::string(k < 0 ? "-" : "") + (std::abs(k) == 1 ? "" : std::to_string(std::abs(k))) + "iθ})", "index-pairing", "Index(σ(e) D e)",
         Provenance::DERIVED, "SVD kernel/cokernel count of the compressed Toeplitz operator", 0, circles,
         [k](const CheckContext& c) {
           auto m = circle(c);
           auto r = residue::fredholm_index(m, models::shift(m, k));
           return CheckResult{r.index, -k, double(std::abs(r.index + k)),
                              "kernel " + std::to_string(r.kernel) + ", cokernel " + std::to_string(r.cokernel) +
                                  ", edge artefacts " + std::to_string(r.edgeArtefacts)};
         }});
  add({"index.pairing-over-index", "index-pairing", "universal constant factor", Provenance::PAPER, "", 1e-10, circles,
       [](const CheckContext& c) {
         auto m = circle(c);
         std::vector<double> ratios;
         for (int k : {-2, -1, 1, 2}) {
           cplx pr = residue::chern_pairing(m, residue::PairingMode::Phase,
                                            {{models::shift(m, -k), 1, 0}, {models::shift(m, k), 1, 0}});
           ratios.push_back(pr.real() / residue::fredholm_index(m, models::shift(m, k)).index);
         }
         auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
         return CheckResult{ratios.front(), ratios.front(), *hi - *lo, "spread of pairing/index over k = +-1, +-2"};
       }});
  add({"index.conformal-character", "index-pairing", "periodic Connes-Chern character", Provenance::DERIVED,
       "both sides computed independently on the truncation", 1e-6, circles, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         auto base = circle(c);
         std::map<int, cplx> h = c.config.model.h;
         if (h.empty()) h = {{1, 0.15}, {-1, 0.15}};
         auto cc = models::conformal_perturb(base, h);
         Mat Dhi = cc.twisted.D.inverse(), Di = base.D.inverse();
         double worst = 0;
         cplx first = 0;
         for (int t = 0; t < 5; ++t) {
           Mat a0 = models::trig_poly(base, random_poly(rng, 2)), a1 = models::trig_poly(base, random_poly(rng, 2));
           cplx l = (Dhi * cc.twisted.twisted_commutator(a0) * Dhi * cc.twisted.twisted_commutator(a1)).trace();
           Mat b0 = cc.sigma_half(a0), b1 = cc.sigma_half(a1);
           cplx r = (Di * (base.D * b0 - b0 * base.D) * Di * (base.D * b1 - b1 * base.D)).trace();
           if (t == 0) first = r;
           worst = std::max(worst, std::abs(l - r) / std::abs(r));
         }
         return CheckResult{worst, 0.0, worst, "max relative defect over 5 random pairs; first value " +
                                                    std::to_string(first.real())};
       }});

  // ---- transgression ----
  for (auto f : {jlo::Family::Scale, jlo::Family::Phase})
    add({std::string("transgression.derJ-") + (f == jlo::Family::Scale ? "scale" : "phase"), "transgression",
         "This gives the identity", Provenance::DERIVED, "central finite difference in the family parameter", 1e-5,
         circles, [f](const CheckContext& c) {
           std::mt19937_64 rng(c.seed);
           auto m = small_circle(c);
           std::vector<jlo::Element> a;
           for (int k = 0; k < 3; ++k) a.push_back({banded_inner(m, 2, rng), 1, 0});
           double tau = f == jlo::Family::Scale ? 0.8 : 0.5;
           auto r1 = jlo::check_derJ(m, f, tau, {a[0], a[1]});
           auto r2 = jlo::check_derJ(m, f, tau, a);
           auto& r = r1.relative > r2.relative ? r1 : r2;
           return CheckResult{cjson(r.finiteDifference), cjson(r.identity), r.relative, "q = 1 and 2, worst shown"};
         }});
  add({"transgression.decay", "transgression", "the similar vanishing result", Provenance::PAPER, "", 1e-6, circles,
       [](const CheckContext& c) {
         auto m = small_circle(c);
         std::vector<jlo::Element> a{{models::shift(m, -1), 1, 0}, {models::shift(m, 1), 1, 0}};
         double r = std::abs(jlo::J(m, jlo::Family::Scale, 5.0, a)) / std::abs(jlo::J(m, jlo::Family::Scale, 2.0, a));
         return CheckResult{r, 0.0, r, "|J^1(5D)(u*,u)| / |J^1(2D)(u*,u)|; smallest |d| is 1/2"};
       }});
  add({"transgression.untwisted-reduction", "transgression", "which vanishes in the untwisted case", Provenance::DERIVED,
       "numerical b and B of the heat cochains", 1e-9, circles, [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         auto m = small_circle(c);
         std::vector<jlo::Element> a;
         for (int k = 0; k < 3; ++k) a.push_back({banded_inner(m, 2, rng), 1, 0});
         jlo::NumCochain Jc = [&](const std::vector<jlo::Element>& x) { return jlo::J(m, jlo::Family::Scale, 0.8, x); };
         cplx b = jlo::apply_b(Jc, a), B = jlo::apply_B(Jc, a, jlo::unit(m));
         return CheckResult{cjson(b), cjson(-B), std::abs(b + B) / std::abs(b), "b J^1 + B J^3 on the circle, t = 0.8"};
       }});
  add({"transgression.formula", "transgression", "transgression formula", Provenance::PAPER, "", 1e-4, circles,
       [](const CheckContext& c) {
         std::mt19937_64 rng(c.seed);
         auto m = small_circle(c);
         std::vector<jlo::Element> a{{banded_inner(m, 2, rng), 1, 0}, {banded_inner(m, 2, rng), 1, 0}};
         jlo::TransgressOptions o;
         for (int i = 0; i < 10; ++i) o.epsGrid.push_back(1e-4 * std::pow(10.0, i / 9.0));
         jlo::NumCochain T = [&](const std::vector<jlo::Element>& x) { return jlo::transgress(m, x, o).value; };
         cplx b = jlo::apply_b(T, a), B = jlo::apply_B(T, a, jlo::unit(m));
         return CheckResult{cjson(b), cjson(-B), std::abs(b + B) / std::abs(b),
                            "finite-rank inputs: both boundary terms vanish"};
       }});

  // ---- homotopy ----
  auto scan = [](const CheckContext& c) {
    auto m = circle(c);
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    return residue::homotopy_pairing_scan(m, grid, {{models::shift(m, -1), 1, 0}, {models::shift(m, 1), 1, 0}});
  };
  add({"homotopy.constancy", "homotopy", "The periodic cyclic cohomology class", Provenance::PAPER, "", 1e-4, circles,
       [scan](const CheckContext& c) {
         auto s = scan(c);
         return CheckResult{cjson(s.rows.front().value), cjson(s.rows.back().value), s.deviation,
                            "relative spread over u in [0,1]"};
       }});
  add({"homotopy.endpoint", "homotopy", "construct a homotopy between", Provenance::DERIVED,
       "phase cocycle Tr(F [F,a_0] [F,a_1])", 1e-14, circles, [scan](const CheckContext& c) {
         auto s = scan(c);
         return numeric(s.rows.back().value, s.phaseValue, false, "value at u = 1");
       }});
  return v;
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::PAPER:
      return "PAPER";
    case Provenance::TRIVIAL:
      return "TRIVIAL";
    default:
      return "DERIVED";
  }
}

const std::vector<CheckSpec>& catalog() {
  static const std::vector<CheckSpec> c = build_catalog();
  return c;
}

}  // namespace twist::cli
