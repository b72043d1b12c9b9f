#include "twist/bicomplex.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <set>
#include <stdexcept>

namespace twist::bicomplex {

using namespace twist::ncalg;

TraceExpr CochainTemplate::operator()(const std::vector<Expr>& slots) const {
  if (static_cast<int>(slots.size()) != degree + 1)
    throw std::invalid_argument("cochain '" + label + "' expects " + std::to_string(degree + 1) + " slots");
  return body(slots);
}

TraceExpr CochainTemplate::on_letters() const {
  std::vector<Expr> slots;
  for (int j = 0; j <= degree; ++j) slots.push_back(Expr::letter("a" + std::to_string(j)));
  return (*this)(slots);
}

std::string CochainTemplate::str() const {
  std::string args;
  for (int j = 0; j <= degree; ++j) args += (j ? "," : "") + std::string("a") + std::to_string(j);
  return label + "(" + args + ") = " + on_letters().str();
}

CochainTemplate operator+(const CochainTemplate& a, const CochainTemplate& b) {
  if (a.degree != b.degree) throw std::invalid_argument("adding cochains of different degree");
  return {a.degree, a.label + " + " + b.label,
          [a, b](const std::vector<Expr>& s) { return a.body(s) + b.body(s); }};
}

CochainTemplate scale(const CochainTemplate& a, const Coeff& c) {
  return {a.degree, c.str() + "*" + a.label,
          [a, c](const std::vector<Expr>& s) { return a.body(s) * c; }};
}

CochainTemplate hochschild_b(const CochainTemplate& c) {
  int q = c.degree;
  return {q + 1, "b(" + c.label + ")", [c, q](const std::vector<Expr>& a) {
            TraceExpr out;
            for (int i = 0; i <= q; ++i) {
              std::vector<Expr> s;
              for (int j = 0; j < i; ++j) s.push_back(a[j]);
              s.push_back(a[i] * a[i + 1]);
              for (int j = i + 2; j <= q + 1; ++j) s.push_back(a[j]);
              out.add(c.body(s), i % 2 ? -1 : 1);
            }
            std::vector<Expr> s{a[q + 1] * a[0]};
            for (int j = 1; j <= q; ++j) s.push_back(a[j]);
            out.add(c.body(s), (q + 1) % 2 ? -1 : 1);
            return out;
          }};
}

CochainTemplate connes_B(const CochainTemplate& c) {
  int n = c.degree;
  if (n < 1) throw std::invalid_argument("connes_B: degree 0 cochain");
  int q = n - 1;
  return {q, "B(" + c.label + ")", [c, q](const std::vector<Expr>& a) {
            TraceExpr out;
            for (int k = 0; k <= q; ++k) {
              std::vector<Expr> s{Expr::one()};
              for (int j = 0; j <= q; ++j) s.push_back(a[(k + j) % (q + 1)]);
              out.add(c.body(s), (k * q) % 2 ? -1 : 1);
            }
            return out;
          }};
}

CochainTemplate build_kappa(int p, const Context& ctx) {
  if (p <= 0) throw std::invalid_argument("build_kappa: p must be positive");
  return {p, "kappa" + std::to_string(p), [p, ctx](const std::vector<Expr>& a) {
            Expr w = (p % 2 == 0 ? Expr::gamma() : Expr::one()) * a[0];
            for (int j = 1; j <= p; ++j)
              w = w * twisted_commutator(apply_sigma(a[j], -j, ctx), WithOp::D, ctx, CommForm::Formal);
            w = w * Expr::D(-p);
            return TraceExpr::dix(p, w);
          }};
}

Coeff ansatz_coefficient(int q, const std::vector<int>& k, bool oddNormalization) {
  if (static_cast<int>(k.size()) != q) throw std::invalid_argument("ansatz_coefficient: |k| != q");
  int total = 0;
  Rational denom = 1;
  int partial = 0;
  for (int j = 0; j < q; ++j) {
    total += k[j];
    denom *= factorial(k[j]);
    partial += k[j] + 1;
    denom *= partial;
  }
  // Gamma(|k| + q/2) = Gamma((2|k| + q)/2)
  Coeff c = Coeff::gamma_half(2 * total + q) * Coeff(Rational(total % 2 ? -1 : 1) / denom);
  if (oddNormalization && q % 2 == 1) c *= Coeff::sqrt2i();
  return c;
}

std::vector<std::vector<int>> multi_indices(int q, int kmax) {
  std::vector<std::vector<int>> out;
  std::vector<int> k(q, 0);
  while (true) {
    out.push_back(k);
    int j = q - 1;
    while (j >= 0 && k[j] == kmax) k[j--] = 0;
    if (j < 0) break;
    ++k[j];
  }
  return out;
}

CochainTemplate build_tau_ansatz(int q, int kmax, const Context& ctx, const AnsatzOptions& opt) {
  if (q <= 0) throw std::invalid_argument("build_tau_ansatz: q must be positive");
  if (kmax < 0) throw std::invalid_argument("build_tau_ansatz: negative kmax");
  auto indices = multi_indices(q, kmax);
  return {q, "tau" + std::to_string(q), [q, indices, ctx, opt](const std::vector<Expr>& a) {
            TraceExpr out;
            for (const auto& k : indices) {
              if (opt.select && !opt.select(k)) continue;
              Expr w = (q % 2 == 0 ? Expr::gamma() : Expr::one()) * a[0];
              int partial = 0, total = 0;
              for (int j = 1; j <= q; ++j) {
                partial += 2 * k[j - 1] + 1;
                total += k[j - 1];
                w = w * higher_twisted_commutator(apply_sigma(a[j], -partial, ctx), k[j - 1],
                                                  HigherForm::WithD, ctx, opt.form);
              }
              w = w * Expr::absD(-2 * total - q);
              out.add(TraceKind::Residue, 0, w, ansatz_coefficient(q, k, opt.oddNormalization));
            }
            return out;
          }};
}

CochainTemplate build_tau0() {
  return {0, "tau0", [](const std::vector<Expr>& a) {
            TraceExpr t;
            t.add(TraceKind::Tau0, 0, Expr::gamma() * a[0]);
            return t;
          }};
}

// ---------------------------------------------------------------------------------------
// Cocycle identity verifier

namespace {

using Key = std::pair<int, Word>;  // (trace kind, word)

std::string key_str(const Key& k) {
  return std::string(k.first == static_cast<int>(TraceKind::Tau0) ? "TAU0{" : "RES{") + word_str(k.second) + "}";
}

using Lin = std::map<Key, Coeff>;

void lin_add(Lin& acc, const Key& k, const Coeff& c) {
  if (c.is_zero()) return;
  auto [it, ins] = acc.try_emplace(k, c);
  if (!ins) {
    it->second += c;
    if (it->second.is_zero()) acc.erase(it);
  }
}

struct Canon {
  const Context* ctx;
  int cutoff;

  // Symbol-normalize, then rewrite each word to its canonical conjugation class.
  Lin apply(TraceKind kind, const Expr& e, const Coeff& scale) const {
    Lin out;
    Expr s = kind == TraceKind::Residue ? symbol_normalize(e, cutoff) : e;
    for (const auto& [w, c] : s.terms()) {
      if (kind == TraceKind::Residue && word_order(w) < cutoff) continue;
      auto [f, nw] = canonical_word(w);
      if (f.is_zero()) continue;
      lin_add(out, {static_cast<int>(kind), nw}, c * f * scale);
    }
    return out;
  }

  std::pair<Coeff, Word> canonical_word(const Word& w) const {
    TraceRules rules;
    rules.cyclic = false;
    rules.sigmaInvariance = false;
    return canonical_trace_word(TraceKind::Residue, 0, w, *ctx, rules);
  }
};

struct Relation {
  Lin terms;
  std::string origin;
};

struct WordParts {
  bool gamma = false;
  Word letters;
  int e = 0, n = 0;
  bool hasRun = false;
};

WordParts split_word(const Word& w) {
  WordParts p;
  for (const auto& a : w) {
    if (a.kind == AtomKind::Grading) {
      p.gamma = true;
    } else if (a.is_dpower()) {
      p.hasRun = true;
      p.n += a.k;
      if (a.kind == AtomKind::DPow) p.e = (p.e + ((a.k % 2) + 2) % 2) % 2;
    } else {
      p.letters.push_back(a);
    }
  }
  return p;
}

Expr run_expr(int e, int n) {
  if (e == 0) return n % 2 == 0 ? Expr::D(n) : Expr::absD(n);
  return Expr::D(1) * Expr::absD(n - 1);
}

Expr word_expr(const Word& w) { return Expr(w); }

std::vector<Relation> relations_for(const Key& key, const Canon& canon, const VerifyOptions& opt) {
  std::vector<Relation> rels;
  const Word& w = key.second;
  WordParts p = split_word(w);
  Expr g = p.gamma ? Expr::gamma() : Expr::one();
  if (key.first == static_cast<int>(TraceKind::Tau0)) {
    if (p.letters.empty() || p.hasRun) return rels;
    const Atom& x = p.letters.front();
    if (!x.plain()) return rels;
    Word rest(p.letters.begin() + 1, p.letters.end());
    Relation r;
    r.origin = "tau0-rotation of " + key_str(key);
    lin_add(r.terms, key, 1);
    Lin moved = canon.apply(TraceKind::Tau0, g * word_expr(rest) * Expr::atom(x), 1);
    for (auto& [k, c] : moved) lin_add(r.terms, k, -c);
    // TAU0{xW} - TAU0{Wx} = sum_k (-1)^k/k RES{W nabla^k(x) |D|^{-2k}}
    for (int k = 1; -k >= canon.cutoff; ++k) {
      Expr corr = g * word_expr(rest) * Expr::atom(x.with_op('n', k)) * Expr::absD(-2 * k);
      Lin res = canon.apply(TraceKind::Residue, corr, Coeff(Rational(k % 2 ? -1 : 1, k)));
      for (auto& [kk, c] : res) lin_add(r.terms, kk, -c);
    }
    rels.push_back(std::move(r));
    return rels;
  }
  if (p.letters.empty()) return rels;
  Expr T = p.hasRun ? run_expr(p.e, p.n) : Expr::one();
  // (A) move the first letter to the end: RES{g x W T} = (-1)^{|x|} RES{g W T x}
  {
    const Atom& x = p.letters.front();
    Word rest(p.letters.begin() + 1, p.letters.end());
    int sign = (p.gamma && x.parity()) ? -1 : 1;
    Relation r;
    r.origin = "rotation of " + key_str(key);
    lin_add(r.terms, key, 1);
    Lin moved = canon.apply(TraceKind::Residue, g * word_expr(rest) * T * Expr::atom(x), sign);
    for (auto& [k, c] : moved) lin_add(r.terms, k, -c);
    rels.push_back(std::move(r));
  }
  // (B) split the D-run and move its right factor to the front
  for (int e2 = 0; e2 <= 1; ++e2) {
    for (int m2 = opt.splitMin; m2 <= opt.splitMax; ++m2) {
      if (e2 == 0 && m2 == 0) continue;
      int n2 = e2 + m2;
      int e1 = p.e ^ e2;
      int n1 = p.n - n2;
      Expr T2 = run_expr(e2, n2);
      Expr T1 = (e1 == 0 && n1 == 0) ? Expr::one() : run_expr(e1, n1);
      int sign = (p.gamma && e2) ? -1 : 1;
      Relation r;
      r.origin = "run split (" + std::to_string(e2) + "," + std::to_string(m2) + ") of " + key_str(key);
      lin_add(r.terms, key, 1);
      Lin moved = canon.apply(TraceKind::Residue, g * T2 * word_expr(p.letters) * T1, sign);
      for (auto& [k, c] : moved) lin_add(r.terms, k, -c);
      rels.push_back(std::move(r));
    }
  }
  return rels;
}

// Words one order higher whose relations reach w: strip one nabla or one d from a letter and
// compensate on the D-run so the degree is unchanged.
std::vector<Key> parents_of(const Key& key, const Canon& canon) {
  std::vector<Key> out;
  if (key.first != static_cast<int>(TraceKind::Residue)) return out;
  WordParts p = split_word(key.second);
  auto emit = [&](size_t i, const Atom& repl, int e, int n) {
    Word letters = p.letters;
    letters[i] = repl;
    Expr w = (p.gamma ? Expr::gamma() : Expr::one()) * Expr(letters);
    if (!(e == 0 && n == 0)) w = w * run_expr(e, n);
    for (const auto& [word, c] : w.terms()) {
      auto [f, nw] = canon.canonical_word(word);
      if (!f.is_zero() && word_order(nw) >= canon.cutoff) out.push_back({key.first, nw});
    }
  };
  for (size_t i = 0; i < p.letters.size(); ++i) {
    const Atom& a = p.letters[i];
    if (!a.is_letter()) continue;
    bool isM = a.count('d') > 0;
    int j = a.count('n');
    Atom base = a;
    base.ops.clear();
    auto make = [&](bool m, int jj) {
      Atom x = base;
      if (m) x.ops.push_back({'d', 1});
      if (jj > 0) x.ops.push_back({'n', jj});
      return x;
    };
    if (j >= 1) {
      emit(i, make(isM, j - 1), p.e, p.n + 2);
      if (!isM) emit(i, make(true, j - 1), p.e ^ 1, p.n + 1);
    }
    if (isM) emit(i, make(false, j), p.e ^ 1, p.n + 1);
  }
  return out;
}

// Sparse rational row keyed by variable index.
using Row = std::map<int, Rational>;

struct Eliminator {
  std::map<int, std::pair<Row, int>> pivots;  // lead var -> (row with lead 1, relation id)

  void reduce(Row& row, std::vector<std::pair<int, int>>* log = nullptr) const {
    while (!row.empty()) {
      auto lead = row.begin();
      auto it = pivots.find(lead->first);
      if (it == pivots.end()) return;
      Rational f = lead->second;
      if (log) log->push_back({lead->first, it->second.second});
      for (const auto& [v, c] : it->second.first) {
        Rational nv = row[v] - f * c;
        if (nv == 0) row.erase(v);
        else row[v] = nv;
      }
    }
  }

  // Reduce fully; remaining entries have no pivot.
  void reduce_full(Row& row, std::vector<std::pair<int, int>>* log = nullptr) const {
    Row done;
    while (!row.empty()) {
      reduce(row, log);
      if (row.empty()) break;
      auto lead = *row.begin();
      done[lead.first] = lead.second;
      row.erase(row.begin());
    }
    row = done;
  }

  void insert(Row row, int relId) {
    reduce(row);
    if (row.empty()) return;
    Rational lead = row.begin()->second;
    for (auto& [v, c] : row) c /= lead;
    pivots[row.begin()->first] = {row, relId};
  }
};

using MonoKey = std::tuple<int, int, int>;  // (i, sqrt2i, sqrtpi)

std::map<MonoKey, Rational> evaluate_mu(const Coeff& c, const std::map<int, Rational>& mu) {
  std::map<MonoKey, Rational> out;
  for (const auto& [m, v] : c.terms()) {
    Rational x = v;
    for (auto [id, p] : m.mu) {
      auto it = mu.find(id);
      Rational base = it == mu.end() ? Rational(1) : it->second;
      for (int r = 0; r < std::abs(p); ++r) { if (p > 0) x *= base; else x /= base; }
    }
    out[{m.i, m.s2i, m.sqrtpi}] += x;
  }
  return out;
}

}  // namespace

VerifyReport verify_cocycle_identity(int q, int kmax, const VerifyOptions& opt) {
  if (q <= 0) throw std::invalid_argument("verify_cocycle_identity: q must be positive");
  if (kmax < 0) throw std::invalid_argument("verify_cocycle_identity: negative kmax");
  auto t0 = std::chrono::steady_clock::now();
  Context ctx;
  ctx.mode = SigmaMode::CrossedProduct;
  const int cutoff = -(q + 1) - kmax;
  Canon canon{&ctx, cutoff};

  // Ansatz components restricted to the orders that reach the cutoff.
  AnsatzOptions lowOpt;
  lowOpt.form = CommForm::Formal;
  lowOpt.select = [=](const std::vector<int>& k) {
    int s = 0;
    for (int x : k) s += x;
    return -(q - 1) - s >= cutoff;
  };
  AnsatzOptions highOpt = lowOpt;
  highOpt.select = [=](const std::vector<int>& k) {
    int s = 0;
    for (int x : k) s += x;
    return -(q + 1) - s >= cutoff;
  };
  CochainTemplate lower = q - 1 == 0 ? build_tau0() : build_tau_ansatz(q - 1, kmax + 2, ctx, lowOpt);
  CochainTemplate upper = build_tau_ansatz(q + 1, kmax, ctx, highOpt);
  CochainTemplate bLow = hochschild_b(lower);
  CochainTemplate BHigh = connes_B(upper);

  std::vector<std::vector<int>> shifts = opt.shifts;
  if (shifts.empty()) {
    shifts.push_back(std::vector<int>(q + 1, 0));
    std::vector<int> s1(q + 1, 0);
    s1[0] = 1;
    s1[q] = -1;
    shifts.push_back(s1);
    std::vector<int> s2(q + 1, 0);
    s2[q] = 1;
    if (q >= 1) s2[q - 1] = -1;
    if (q >= 2) {
      s2[0] = 1;
      s2[q - 1] = -2;
    }
    shifts.push_back(s2);
    std::vector<int> s3(q + 1, 0);
    s3[0] = 1;
    shifts.push_back(s3);
  }

  nlohmann::json report;
  report["q"] = q;
  report["kmax"] = kmax;
  report["orderCutoff"] = cutoff;
  report["identity"] = "b J^{q-1} + B J^{q+1} = 0";
  report["conventions"] = {
      {"unit", "B inserts the empty word"},
      {"cyclicWeight", "conjugation by group elements absorbed by the trace (character factor mu^-degree)"},
      {"tau0", "TAU0 assumed invariant under conjugation by group elements"}};
  report["configurations"] = nlohmann::json::array();
  bool allPass = true;

  for (const auto& n : shifts) {
    nlohmann::json cfg;
    cfg["groupExponents"] = n;
    std::vector<Expr> inputs;
    for (int j = 0; j <= q; ++j) inputs.push_back(Expr::letter("a" + std::to_string(j)) * Expr::U(1, n[j]));

    // Target, with every raw term tagged for the cancellation log.
    Lin target;
    std::map<Key, std::vector<std::string>> sources;
    auto absorb = [&](const TraceExpr& t, const std::string& tag) {
      int id = 0;
      for (const auto& s : t.summands()) {
        ++id;
        Lin part = canon.apply(s.kind, s.argument, s.scalar);
        for (auto& [k, c] : part) {
          lin_add(target, k, c);
          sources[k].push_back(tag + "#" + std::to_string(id));
        }
      }
    };
    absorb(bLow(inputs), "b");
    absorb(BHigh(inputs) * Coeff(opt.upperScale), "B");
    nlohmann::json direct = nlohmann::json::array();
    for (const auto& [k, tags] : sources)
      if (!target.count(k) && tags.size() > 1)
        direct.push_back({{"term", key_str(k)}, {"partners", tags}, {"rule", "normal form"}});
    cfg["directCancellations"] = direct;
    cfg["termsAfterNormalForm"] = target.size();

    // Relation closure.
    std::vector<Relation> relations;
    std::set<Key> seen;
    std::deque<Key> queue;
    for (const auto& [k, c] : target) {
      seen.insert(k);
      queue.push_back(k);
    }
    bool truncated = false;
    while (!queue.empty()) {
      Key k = queue.front();
      queue.pop_front();
      for (auto& r : relations_for(k, canon, opt)) {
        for (const auto& [kk, c] : r.terms) {
          if (seen.insert(kk).second) queue.push_back(kk);
        }
        relations.push_back(std::move(r));
      }
      for (auto& pk : parents_of(k, canon))
        if (seen.insert(pk).second) queue.push_back(pk);
      if (static_cast<int>(seen.size()) > opt.maxWords) {
        truncated = true;
        break;
      }
    }
    cfg["relations"] = relations.size();
    cfg["words"] = seen.size();

    // Variables ordered by decreasing order so pivots are leading-order words.
    std::vector<Key> vars(seen.begin(), seen.end());
    std::stable_sort(vars.begin(), vars.end(), [](const Key& a, const Key& b) {
      int oa = word_order(a.second) + (a.first == static_cast<int>(TraceKind::Tau0) ? 1000 : 0);
      int ob = word_order(b.second) + (b.first == static_cast<int>(TraceKind::Tau0) ? 1000 : 0);
      if (oa != ob) return oa > ob;
      return a < b;
    });
    std::map<Key, int> index;
    for (size_t j = 0; j < vars.size(); ++j) index[vars[j]] = static_cast<int>(j);

    bool cfgPass = !truncated;
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& muv : opt.muSamples) {
      std::map<int, Rational> mu{{1, muv}};
      Eliminator elim;
      for (size_t r = 0; r < relations.size(); ++r) {
        Row row;
        for (const auto& [k, c] : relations[r].terms) {
          auto parts = evaluate_mu(c, mu);
          for (const auto& [mono, v] : parts) {
            if (mono != MonoKey{0, 0, 0} && v != 0)
              throw std::logic_error("relation with irrational coefficient: " + relations[r].origin);
            if (v != 0) row[index[k]] += v;
          }
        }
        for (auto it = row.begin(); it != row.end();) it = it->second == 0 ? row.erase(it) : std::next(it);
        elim.insert(row, static_cast<int>(r));
      }
      // Target split by irrational monomial.
      std::map<MonoKey, Row> comps;
      for (const auto& [k, c] : target)
        for (const auto& [mono, v] : evaluate_mu(c, mu))
          if (v != 0) comps[mono][index[k]] += v;
      nlohmann::json sample;
      sample["mu"] = rational_str(muv);
      sample["rank"] = elim.pivots.size();
      nlohmann::json steps = nlohmann::json::array();
      nlohmann::json residual = nlohmann::json::array();
      for (auto& [mono, row] : comps) {
        for (auto it = row.begin(); it != row.end();) it = it->second == 0 ? row.erase(it) : std::next(it);
        std::vector<std::pair<int, int>> log;
        elim.reduce_full(row, &log);
        for (auto [var, rel] : log)
          if (steps.size() < 400)
            steps.push_back({{"term", key_str(vars[var])}, {"partner", relations[rel].origin},
                             {"rule", relations[rel].origin.substr(0, relations[rel].origin.find(" of "))}});
        for (const auto& [var, v] : row)
          residual.push_back({{"term", key_str(vars[var])}, {"coefficient", rational_str(v)}});
      }
      sample["reductionSteps"] = steps;
      sample["residual"] = residual;
      sample["pass"] = residual.empty();
      cfgPass = cfgPass && residual.empty();
      samples.push_back(sample);
    }
    cfg["samples"] = samples;
    cfg["truncated"] = truncated;
    cfg["pass"] = cfgPass;
    allPass = allPass && cfgPass;
    report["configurations"].push_back(cfg);
  }
  report["pass"] = allPass;
  report["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {allPass, report};
}

}  // namespace twist::bicomplex
