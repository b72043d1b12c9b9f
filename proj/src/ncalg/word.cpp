#include "twist/ncalg.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace twist::ncalg {

GroupVec group_add(const GroupVec& a, const GroupVec& b, int scale) {
  std::map<int, int> acc;
  for (auto [id, p] : a) acc[id] += p;
  for (auto [id, p] : b) acc[id] += scale * p;
  GroupVec out;
  for (auto [id, p] : acc)
    if (p != 0) out.push_back({id, p});
  return out;
}

// ---------------------------------------------------------------------------------------
// Atom

Atom Atom::alg(const std::string& name, int sigma, bool adjoint) {
  Atom a;
  a.kind = AtomKind::Alg;
  a.name = name;
  a.adjoint = adjoint;
  if (sigma != 0) a.ops.push_back({'s', sigma});
  return a;
}

Atom Atom::group(int id, int power) {
  Atom a;
  a.kind = AtomKind::Group;
  a.id = id;
  a.k = power;
  return a;
}

Atom Atom::dpow(int k) {
  Atom a;
  a.kind = AtomKind::DPow;
  a.k = k;
  return a;
}

Atom Atom::absd(int k) {
  Atom a;
  a.kind = AtomKind::AbsDPow;
  a.k = k;
  return a;
}

Atom Atom::grading() {
  Atom a;
  a.kind = AtomKind::Grading;
  return a;
}

int Atom::count(char op) const {
  int c = 0;
  for (const auto& o : ops)
    if (o.kind == op) c += o.k;
  return c;
}

int Atom::parity() const {
  switch (kind) {
    case AtomKind::DPow: return ((k % 2) + 2) % 2;
    case AtomKind::Alg: return count('d') % 2;
    default: return 0;
  }
}

int Atom::degree() const {
  switch (kind) {
    case AtomKind::DPow:
    case AtomKind::AbsDPow: return k;
    case AtomKind::Alg: return count('d') + count('t') + 2 * count('n');
    default: return 0;
  }
}

int Atom::order() const {
  switch (kind) {
    case AtomKind::DPow:
    case AtomKind::AbsDPow: return k;
    case AtomKind::Alg: return count('n');
    default: return 0;
  }
}

int Atom::sigma_slot() const {
  if (ops.empty() || ops.back().kind != 's') return 0;
  return ops.back().k;
}

Atom Atom::with_op(char op, int kk) const {
  Atom a = *this;
  if (kk == 0) return a;
  if (!a.ops.empty() && a.ops.back().kind == op) {
    a.ops.back().k += kk;
    if (a.ops.back().k == 0) a.ops.pop_back();
  } else {
    a.ops.push_back({op, kk});
  }
  return a;
}

Atom Atom::without_outer_sigma() const {
  Atom a = *this;
  if (!a.ops.empty() && a.ops.back().kind == 's') a.ops.pop_back();
  return a;
}

static std::string group_token(int id, int p) {
  std::string s = "U" + std::to_string(id);
  if (p != 1) s += "^" + std::to_string(p);
  return s;
}

std::string Atom::str() const {
  switch (kind) {
    case AtomKind::Grading: return "g";
    case AtomKind::DPow: return k == 1 ? "D" : "D^" + std::to_string(k);
    case AtomKind::AbsDPow: return k == 1 ? "|D|" : "|D|^" + std::to_string(k);
    case AtomKind::Group: return group_token(id, k);
    case AtomKind::Alg: break;
  }
  std::string s;
  for (size_t j = 0; j < conj.size(); ++j) s += (j ? "." : "") + group_token(conj[j].first, conj[j].second);
  if (!conj.empty()) s += ">";
  s += name;
  if (adjoint) s += "*";
  for (const auto& o : ops) {
    std::string head(1, o.kind);
    if (o.k != 1) head += "^" + std::to_string(o.k);
    s = head + "(" + s + ")";
  }
  return s;
}

namespace {

bool reserved_name(const std::string& n) {
  if (n == "g" || n == "i" || n == "d" || n == "t" || n == "n" || n == "s") return true;
  if (n.rfind("sqrt", 0) == 0 || n.rfind("mu", 0) == 0) return true;
  return false;
}

int parse_int(const std::string& s, size_t& pos) {
  size_t start = pos;
  if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos == start || (pos == start + 1 && !std::isdigit(static_cast<unsigned char>(s[start]))))
    throw std::invalid_argument("expected integer in '" + s + "'");
  return std::stoi(s.substr(start, pos - start));
}

// letter := op ['^' int] '(' letter ')' | [conj '>'] name ['*']
Atom parse_letter(const std::string& s, size_t& pos) {
  if (pos + 1 < s.size() && std::string("sdtn").find(s[pos]) != std::string::npos &&
      (s[pos + 1] == '(' || s[pos + 1] == '^')) {
    char op = s[pos++];
    int k = 1;
    if (s[pos] == '^') {
      ++pos;
      k = parse_int(s, pos);
    }
    if (pos >= s.size() || s[pos] != '(') throw std::invalid_argument("expected ( in '" + s + "'");
    ++pos;
    Atom inner = parse_letter(s, pos);
    if (pos >= s.size() || s[pos] != ')') throw std::invalid_argument("expected ) in '" + s + "'");
    ++pos;
    return inner.with_op(op, k);
  }
  Atom a;
  a.kind = AtomKind::Alg;
  size_t gt = s.find('>', pos);
  size_t close = s.find(')', pos);
  if (gt != std::string::npos && (close == std::string::npos || gt < close)) {
    std::string c = s.substr(pos, gt - pos);
    std::stringstream ss(c);
    std::string item;
    GroupVec g;
    while (std::getline(ss, item, '.')) {
      if (item.size() < 2 || item[0] != 'U') throw std::invalid_argument("bad conjugation '" + c + "'");
      size_t q = 1;
      int id = parse_int(item, q);
      int p = 1;
      if (q < item.size() && item[q] == '^') {
        ++q;
        p = parse_int(item, q);
      }
      g = group_add(g, {{id, p}});
    }
    a.conj = g;
    pos = gt + 1;
  }
  size_t start = pos;
  if (pos >= s.size() || !std::islower(static_cast<unsigned char>(s[pos])))
    throw std::invalid_argument("expected letter name in '" + s + "'");
  while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
  a.name = s.substr(start, pos - start);
  if (reserved_name(a.name)) throw std::invalid_argument("reserved letter name '" + a.name + "'");
  if (pos < s.size() && s[pos] == '*') {
    a.adjoint = true;
    ++pos;
  }
  return a;
}

}  // namespace

Atom Atom::parse(const std::string& t) {
  if (t == "g") return grading();
  if (t == "D") return dpow(1);
  if (t == "|D|") return absd(1);
  if (t.rfind("D^", 0) == 0) return dpow(std::stoi(t.substr(2)));
  if (t.rfind("|D|^", 0) == 0) return absd(std::stoi(t.substr(4)));
  if (t.size() >= 2 && t[0] == 'U' && std::isdigit(static_cast<unsigned char>(t[1])) &&
      t.find('>') == std::string::npos) {
    size_t pos = 1;
    int id = parse_int(t, pos);
    int p = 1;
    if (pos < t.size() && t[pos] == '^') {
      ++pos;
      p = parse_int(t, pos);
    } else if (pos < t.size() && t[pos] == '*') {
      p = -1;
      ++pos;
    }
    if (pos != t.size()) throw std::invalid_argument("bad group token '" + t + "'");
    return group(id, p);
  }
  size_t pos = 0;
  Atom a = parse_letter(t, pos);
  if (pos != t.size()) throw std::invalid_argument("trailing characters in atom '" + t + "'");
  return a;
}

std::string word_str(const Word& w) {
  if (w.empty()) return "1";
  std::string s;
  for (size_t j = 0; j < w.size(); ++j) s += (j ? " " : "") + w[j].str();
  return s;
}

int word_parity(const Word& w) {
  int p = 0;
  for (const auto& a : w) p += a.parity();
  return p % 2;
}

int word_degree(const Word& w) {
  int d = 0;
  for (const auto& a : w) d += a.degree();
  return d;
}

int word_order(const Word& w) {
  int d = 0;
  for (const auto& a : w) d += a.order();
  return d;
}

// ---------------------------------------------------------------------------------------
// Context

std::optional<double> Context::character(const GroupVec& g) const {
  double v = 1;
  for (auto [id, p] : g) {
    auto it = concreteMu.find(id);
    if (it == concreteMu.end()) return std::nullopt;
    v *= std::pow(it->second, p);
  }
  return v;
}

bool Context::character_is_one(const GroupVec& g) const {
  if (g.empty()) return true;
  auto c = character(g);
  return c && std::abs(*c - 1.0) < 1e-14;
}

// ---------------------------------------------------------------------------------------
// Normal form

namespace {

Coeff mu_power(const GroupVec& g, int scale) {
  Coeff c = 1;
  for (auto [id, p] : g)
    if (p * scale != 0) c *= Coeff::mu(id, p * scale);
  return c;
}

// D^e |D|^{n-e} in canonical atoms.
void emit_run(Word& out, int e, int n) {
  if (e == 0) {
    if (n == 0) return;
    out.push_back(n % 2 == 0 ? Atom::dpow(n) : Atom::absd(n));
  } else if (n % 2 != 0) {
    out.push_back(Atom::dpow(n));
  } else {
    out.push_back(Atom::dpow(1));
    out.push_back(Atom::absd(n - 1));
  }
}

}  // namespace

std::pair<Coeff, Word> normalize_word(const Word& w) {
  Coeff c = 1;
  // grading to the front
  int gammas = 0, parityBefore = 0, sign = 0;
  Word rest;
  for (const auto& a : w) {
    if (a.kind == AtomKind::Grading) {
      ++gammas;
      sign += parityBefore;
    } else {
      parityBefore += a.parity();
      rest.push_back(a);
    }
  }
  if (sign % 2) c = -c;

  // group letters to the right: g x = mu_g^{deg x} (g|>x) g
  GroupVec g;
  Word moved;
  for (const auto& a : rest) {
    if (a.kind == AtomKind::Group) {
      g = group_add(g, {{a.id, a.k}});
      continue;
    }
    if (!g.empty()) {
      int deg = a.degree();
      if (deg != 0) c *= mu_power(g, deg);
      if (a.kind == AtomKind::Alg) {
        Atom b = a;
        b.conj = group_add(b.conj, g);
        moved.push_back(b);
        continue;
      }
    }
    moved.push_back(a);
  }

  Word out;
  if (gammas % 2) out.push_back(Atom::grading());
  int e = 0, n = 0;
  bool inRun = false;
  for (const auto& a : moved) {
    if (a.is_dpower()) {
      inRun = true;
      n += a.k;
      if (a.kind == AtomKind::DPow) e = (e + ((a.k % 2) + 2) % 2) % 2;
      continue;
    }
    if (inRun) {
      emit_run(out, e, n);
      e = n = 0;
      inRun = false;
    }
    out.push_back(a);
  }
  if (inRun) emit_run(out, e, n);
  for (auto [id, p] : g) out.push_back(Atom::group(id, p));
  return {c, out};
}

Expr normalize(const Expr& e) {
  Expr out;
  for (const auto& [w, c] : e.terms()) {
    auto [f, nw] = normalize_word(w);
    out.add(nw, c * f);
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Expr

Expr::Expr(const Word& w, const Coeff& c) {
  auto [f, nw] = normalize_word(w);
  add(nw, c * f);
}

Expr Expr::letter(const std::string& name, int sigma) { return atom(Atom::alg(name, sigma)); }

void Expr::add(const Word& w, const Coeff& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = terms_.try_emplace(w, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

Expr Expr::operator+(const Expr& o) const {
  Expr r = *this;
  r += o;
  return r;
}

Expr Expr::operator-(const Expr& o) const {
  Expr r = *this;
  r -= o;
  return r;
}

Expr Expr::operator-() const {
  Expr r;
  for (const auto& [w, c] : terms_) r.terms_[w] = -c;
  return r;
}

Expr& Expr::operator+=(const Expr& o) {
  for (const auto& [w, c] : o.terms_) add(w, c);
  return *this;
}

Expr& Expr::operator-=(const Expr& o) {
  for (const auto& [w, c] : o.terms_) add(w, -c);
  return *this;
}

Expr Expr::operator*(const Expr& o) const {
  Expr r;
  for (const auto& [wa, ca] : terms_) {
    for (const auto& [wb, cb] : o.terms_) {
      Word w = wa;
      w.insert(w.end(), wb.begin(), wb.end());
      auto [f, nw] = normalize_word(w);
      r.add(nw, ca * cb * f);
    }
  }
  return r;
}

Expr Expr::operator*(const Coeff& c) const {
  Expr r;
  for (const auto& [w, v] : terms_) r.add(w, v * c);
  return r;
}

std::string Expr::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [w, c] : terms_) {
    Coeff shown = c;
    bool neg = false;
    if (c.terms().size() == 1 && c.terms().begin()->second < 0) {
      neg = true;
      shown = -c;
    }
    if (first) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    first = false;
    bool unit = shown == Coeff(1);
    if (w.empty()) {
      out += shown.str();
    } else {
      if (!unit) out += shown.str() + " ";
      out += word_str(w);
    }
  }
  return out;
}

Expr Expr::parse(const std::string& text) {
  std::stringstream ss(text);
  std::vector<std::string> tokens;
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  Expr out;
  Coeff coeff = 1;
  Word word;
  bool haveTerm = false;
  auto flush = [&]() {
    if (haveTerm) out.add(word, coeff);
    coeff = 1;
    word.clear();
    haveTerm = false;
  };
  for (size_t j = 0; j < tokens.size(); ++j) {
    std::string t = tokens[j];
    if (t == "+" || t == "-") {
      if (haveTerm) flush();
      if (t == "-") coeff = -coeff;
      continue;
    }
    if (t == "0" && tokens.size() == 1) return Expr();
    if (word.empty() && t != "1") {
      // coefficient tokens precede atoms; a leading "-" may be glued to a letter
      try {
        coeff *= Coeff::parse(t);
        haveTerm = true;
        continue;
      } catch (const std::invalid_argument&) {
      }
      if (t.size() > 1 && t[0] == '-') {
        coeff = -coeff;
        t = t.substr(1);
      }
    }
    haveTerm = true;
    if (t == "1") continue;
    word.push_back(Atom::parse(t));
  }
  flush();
  return normalize(out);
}

}  // namespace twist::ncalg
