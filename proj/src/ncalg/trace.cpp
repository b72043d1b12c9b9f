#include "twist/ncalg.hpp"

#include <cctype>
#include <deque>
#include <set>
#include <stdexcept>

namespace twist::ncalg {

void TraceExpr::add(TraceKind kind, int p, const Expr& arg, const Coeff& scalar) {
  if (arg.is_zero() || scalar.is_zero()) return;
  summands_.push_back({kind, p, arg, scalar});
}

void TraceExpr::add(const TraceExpr& o, const Coeff& scalar) {
  for (const auto& s : o.summands_) add(s.kind, s.p, s.argument, s.scalar * scalar);
}

TraceExpr TraceExpr::operator+(const TraceExpr& o) const {
  TraceExpr r = *this;
  r.add(o);
  return r;
}

TraceExpr TraceExpr::operator-(const TraceExpr& o) const {
  TraceExpr r = *this;
  r.add(o, -1);
  return r;
}

TraceExpr TraceExpr::operator*(const Coeff& c) const {
  TraceExpr r;
  r.add(*this, c);
  return r;
}

bool TraceExpr::is_zero() const {
  for (const auto& s : summands_)
    if (!s.argument.is_zero() && !s.scalar.is_zero()) return false;
  return true;
}

static std::string kind_head(TraceKind k, int p) {
  switch (k) {
    case TraceKind::Residue: return "RES";
    case TraceKind::Dixmier: return "DIX[" + std::to_string(p) + "]";
    case TraceKind::Tau0: return "TAU0";
  }
  return "?";
}

std::string TraceExpr::str() const {
  if (is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& s : summands_) {
    Coeff c = s.scalar;
    bool neg = c.terms().size() == 1 && c.terms().begin()->second < 0;
    if (neg) c = -c;
    if (first) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    first = false;
    if (c != Coeff(1)) out += c.str() + " ";
    out += kind_head(s.kind, s.p) + "{" + s.argument.str() + "}";
  }
  return out;
}

TraceExpr TraceExpr::parse(const std::string& text) {
  TraceExpr out;
  size_t pos = 0;
  auto skip = [&]() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  skip();
  if (text.substr(pos) == "0") return out;
  while (pos < text.size()) {
    Coeff sign = 1;
    if (text[pos] == '+' || text[pos] == '-') {
      if (text[pos] == '-') sign = -1;
      ++pos;
      skip();
    }
    // optional coefficient token before the head
    Coeff scalar = 1;
    size_t headPos = std::min({text.find("RES{", pos), text.find("DIX[", pos), text.find("TAU0{", pos)});
    if (headPos == std::string::npos) throw std::invalid_argument("trace parse: expected RES/DIX/TAU0");
    std::string pre = text.substr(pos, headPos - pos);
    while (!pre.empty() && std::isspace(static_cast<unsigned char>(pre.back()))) pre.pop_back();
    if (!pre.empty()) scalar = Coeff::parse(pre);
    pos = headPos;
    TraceKind kind;
    int p = 0;
    if (text.compare(pos, 4, "RES{") == 0) {
      kind = TraceKind::Residue;
      pos += 4;
    } else if (text.compare(pos, 5, "TAU0{") == 0) {
      kind = TraceKind::Tau0;
      pos += 5;
    } else {
      kind = TraceKind::Dixmier;
      size_t close = text.find(']', pos);
      p = std::stoi(text.substr(pos + 4, close - pos - 4));
      pos = close + 1;
      if (pos >= text.size() || text[pos] != '{') throw std::invalid_argument("trace parse: expected {");
      ++pos;
    }
    int depth = 1;
    size_t start = pos;
    while (pos < text.size() && depth > 0) {
      if (text[pos] == '{') ++depth;
      if (text[pos] == '}') --depth;
      ++pos;
    }
    if (depth != 0) throw std::invalid_argument("trace parse: unbalanced braces");
    out.add(kind, p, Expr::parse(text.substr(start, pos - 1 - start)), sign * scalar);
    skip();
  }
  return out;
}

// ---------------------------------------------------------------------------------------

namespace {

GroupVec group_part(const Word& w) {
  GroupVec g;
  for (const auto& a : w)
    if (a.kind == AtomKind::Group) g = group_add(g, {{a.id, a.k}});
  return g;
}

Coeff mu_power(const GroupVec& g, int scale) {
  Coeff c = 1;
  for (auto [id, p] : g)
    if (p * scale != 0) c *= Coeff::mu(id, p * scale);
  return c;
}

bool selberg_kills(const Word& w, const Context& ctx) {
  GroupVec g = group_part(w);
  if (g.empty()) return false;
  return !ctx.character_is_one(g);
}

// Remove the conjugation prefix of the first letter: trace(c|>W) = mu_c^{-deg W} trace(W).
void canonical_conjugation(Coeff& c, Word& w) {
  const Atom* first = nullptr;
  for (const auto& a : w)
    if (a.is_letter()) {
      first = &a;
      break;
    }
  if (!first || first->conj.empty()) return;
  GroupVec g = first->conj;
  c *= mu_power(g, -word_degree(w));
  for (auto& a : w)
    if (a.is_letter()) a.conj = group_add(a.conj, g, -1);
}

// trace(W) = chi^{-k} trace(shift_k W) with k chosen to clear the first letter's outer sigma.
void canonical_sigma(Coeff& c, Word& w) {
  const Atom* first = nullptr;
  for (const auto& a : w)
    if (a.is_letter()) {
      first = &a;
      break;
    }
  if (!first) return;
  int k = -first->sigma_slot();
  if (k == 0) return;
  for (auto& a : w) {
    if (a.is_letter()) a = a.with_op('s', k);
    if (a.kind == AtomKind::Group) c *= Coeff::mu(a.id, -a.k * k);
  }
}

// Tail of degree -p made of D-powers, as [start, end) indices, or nullopt.
std::optional<size_t> dix_tail(const Word& w, int p) {
  size_t j = w.size();
  int deg = 0;
  while (j > 0 && w[j - 1].is_dpower()) {
    --j;
    deg += w[j].k;
  }
  if (j == w.size() || deg != -p) return std::nullopt;
  return j;
}

std::pair<Coeff, Word> canonical_residue(const Word& w0, Coeff c, const Context&,
                                         const TraceRules& rules) {
  bool hasGamma = !w0.empty() && w0[0].kind == AtomKind::Grading;
  Word body(w0.begin() + (hasGamma ? 1 : 0), w0.end());
  std::vector<std::pair<Coeff, Word>> candidates;
  auto finish = [&](Coeff cc, Word nw) {
    if (rules.conjugationInvariance) canonical_conjugation(cc, nw);
    if (rules.sigmaInvariance) canonical_sigma(cc, nw);
    candidates.push_back({cc, nw});
  };
  bool anyLetter = false;
  if (rules.cyclic) {
    for (size_t i = 0; i < body.size(); ++i) {
      if (!body[i].is_letter()) continue;
      anyLetter = true;
      Word rot(body.begin() + i, body.end());
      rot.insert(rot.end(), body.begin(), body.begin() + i);
      int sign = 1;
      if (hasGamma) {
        Word moved(body.begin() + i, body.end());
        if (word_parity(moved)) sign = -1;
        rot.insert(rot.begin(), Atom::grading());
      }
      auto [f, nw] = normalize_word(rot);
      finish(c * f * Coeff(sign), nw);
    }
  }
  if (!anyLetter) finish(c, w0);
  auto best = std::min_element(candidates.begin(), candidates.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; });
  return *best;
}

std::pair<Coeff, Word> canonical_dixmier(const Word& w0, Coeff c, int p, const TraceRules& rules) {
  if (!rules.hypertrace) return {c, w0};
  bool hasGamma = !w0.empty() && w0[0].kind == AtomKind::Grading;
  size_t lo = hasGamma ? 1 : 0;
  auto tail = dix_tail(w0, p);
  if (!tail) return {c, w0};
  // Push plain letters sitting right before the tail to the front: trace(T x |D|^-p) =
  // trace(sigma^p(x) T |D|^-p). The result has no plain letter before the tail unless the
  // whole body is plain, in which case the minimal rotation is used.
  Word w = w0;
  size_t t = *tail;
  size_t bodyLen = t - lo;
  bool allPlain = true;
  for (size_t j = lo; j < t; ++j) allPlain = allPlain && w[j].plain();
  if (bodyLen == 0) return {c, w};
  if (!allPlain) {
    while (w[t - 1].plain()) {
      Atom x = w[t - 1].with_op('s', p);
      w.erase(w.begin() + static_cast<long>(t - 1));
      w.insert(w.begin() + static_cast<long>(lo), x);
    }
    return {c, w};
  }
  Word best = w;
  Word cur = w;
  for (size_t r = 1; r < bodyLen; ++r) {
    Atom x = cur[t - 1].with_op('s', p);
    cur.erase(cur.begin() + static_cast<long>(t - 1));
    cur.insert(cur.begin() + static_cast<long>(lo), x);
    if (cur < best) best = cur;
  }
  return {c, best};
}

}  // namespace

std::pair<Coeff, Word> canonical_trace_word(TraceKind kind, int p, const Word& w,
                                            const Context& ctx, const TraceRules& rules) {
  auto [c, nw] = normalize_word(w);
  if (rules.selberg && selberg_kills(nw, ctx)) return {Coeff(), {}};
  bool hasGamma = !nw.empty() && nw[0].kind == AtomKind::Grading;
  if (hasGamma && word_parity(nw)) return {Coeff(), {}};
  switch (kind) {
    case TraceKind::Residue: return canonical_residue(nw, c, ctx, rules);
    case TraceKind::Dixmier: return canonical_dixmier(nw, c, p, rules);
    case TraceKind::Tau0: return {c, nw};
  }
  return {c, nw};
}

TraceExpr trace_normal_form(const TraceExpr& t, const Context& ctx, const TraceRules& rules) {
  std::map<std::tuple<int, int, Word>, Coeff> acc;
  for (const auto& s : t.summands()) {
    for (const auto& [w, c] : s.argument.terms()) {
      auto [f, nw] = canonical_trace_word(s.kind, s.p, w, ctx, rules);
      if (f.is_zero()) continue;
      auto key = std::make_tuple(static_cast<int>(s.kind), s.p, nw);
      Coeff& slot = acc[key];
      slot += f * c * s.scalar;
    }
  }
  TraceExpr out;
  for (const auto& [key, c] : acc) {
    if (c.is_zero()) continue;
    out.add(static_cast<TraceKind>(std::get<0>(key)), std::get<1>(key), Expr(std::get<2>(key)), c);
  }
  return out;
}

bool trace_equal(const TraceExpr& a, const TraceExpr& b, const Context& ctx,
                 const TraceRules& rules) {
  return trace_normal_form(a - b, ctx, rules).is_zero();
}

}  // namespace twist::ncalg
