#include "twist/coeff.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace twist {

std::string rational_str(const Rational& r) {
  auto num = boost::multiprecision::numerator(r);
  auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  using boost::multiprecision::cpp_int;
  if (slash == std::string::npos) return Rational(cpp_int(s));
  return Rational(cpp_int(s.substr(0, slash)), cpp_int(s.substr(slash + 1)));
}

Rational factorial(long n) {
  Rational r = 1;
  for (long k = 2; k <= n; ++k) r *= k;
  return r;
}

Rational binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  Rational r = 1;
  for (long j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

Rational binomial_q(const Rational& x, long k) {
  if (k < 0) return 0;
  Rational r = 1;
  for (long j = 0; j < k; ++j) r = r * (x - j) / (j + 1);
  return r;
}

bool Monomial::operator<(const Monomial& o) const {
  if (i != o.i) return i < o.i;
  if (s2i != o.s2i) return s2i < o.s2i;
  if (sqrtpi != o.sqrtpi) return sqrtpi < o.sqrtpi;
  return mu < o.mu;
}

bool Monomial::operator==(const Monomial& o) const {
  return i == o.i && s2i == o.s2i && sqrtpi == o.sqrtpi && mu == o.mu;
}

Coeff::Coeff(long v) {
  if (v != 0) terms_[Monomial{}] = Rational(v);
}

Coeff::Coeff(const Rational& r) {
  if (r != 0) terms_[Monomial{}] = r;
}

Coeff Coeff::imag() {
  Coeff c;
  Monomial m;
  m.i = 1;
  c.terms_[m] = 1;
  return c;
}

Coeff Coeff::sqrt2i() {
  Coeff c;
  Monomial m;
  m.s2i = 1;
  c.terms_[m] = 1;
  return c;
}

Coeff Coeff::sqrtpi(int power) {
  Coeff c;
  Monomial m;
  m.sqrtpi = power;
  c.terms_[m] = 1;
  return c;
}

Coeff Coeff::mu(int id, int power) {
  Coeff c;
  Monomial m;
  if (power != 0) m.mu.push_back({id, power});
  c.terms_[m] = 1;
  return c;
}

Coeff Coeff::gamma_half(int n) {
  if (n <= 0) throw std::invalid_argument("gamma_half: argument must be positive");
  // Gamma(n/2): n even -> (n/2 - 1)!, n odd -> (n-2)!!/2^{(n-1)/2} sqrt(pi)
  if (n % 2 == 0) return Coeff(factorial(n / 2 - 1));
  Rational r = 1;
  for (int k = 1; k < n; k += 2) r = r * k / 2;
  return Coeff(r) * sqrtpi(1);
}

bool Coeff::is_rational() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_one());
}

Rational Coeff::rational_part() const {
  auto it = terms_.find(Monomial{});
  return it == terms_.end() ? Rational(0) : it->second;
}

void Coeff::add_term(const Monomial& m, const Rational& r) {
  if (r == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, r);
  if (!inserted) {
    it->second += r;
    if (it->second == 0) terms_.erase(it);
  }
}

Coeff Coeff::operator+(const Coeff& o) const {
  Coeff r = *this;
  r += o;
  return r;
}

Coeff Coeff::operator-(const Coeff& o) const {
  Coeff r = *this;
  r -= o;
  return r;
}

Coeff Coeff::operator-() const {
  Coeff r = *this;
  for (auto& [m, v] : r.terms_) v = -v;
  return r;
}

Coeff& Coeff::operator+=(const Coeff& o) {
  for (const auto& [m, v] : o.terms_) add_term(m, v);
  return *this;
}

Coeff& Coeff::operator-=(const Coeff& o) {
  for (const auto& [m, v] : o.terms_) add_term(m, -v);
  return *this;
}

static std::vector<std::pair<int, int>> merge_mu(const std::vector<std::pair<int, int>>& a,
                                                 const std::vector<std::pair<int, int>>& b) {
  std::vector<std::pair<int, int>> out;
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      int e = a[i].second + b[j].second;
      if (e != 0) out.push_back({a[i].first, e});
      ++i;
      ++j;
    }
  }
  return out;
}

Coeff Coeff::operator*(const Coeff& o) const {
  Coeff r;
  for (const auto& [ma, va] : terms_) {
    for (const auto& [mb, vb] : o.terms_) {
      Monomial m;
      Rational v = va * vb;
      m.sqrtpi = ma.sqrtpi + mb.sqrtpi;
      m.mu = merge_mu(ma.mu, mb.mu);
      int i = ma.i + mb.i;
      int s = ma.s2i + mb.s2i;
      if (s == 2) {  // sqrt(2i)^2 = 2i
        s = 0;
        v *= 2;
        i += 1;
      }
      while (i >= 2) {
        i -= 2;
        v = -v;
      }
      m.i = i;
      m.s2i = s;
      r.add_term(m, v);
    }
  }
  return r;
}

Coeff& Coeff::operator*=(const Coeff& o) {
  *this = *this * o;
  return *this;
}

Coeff Coeff::without_sqrt2i() const {
  Coeff r;
  for (const auto& [m, v] : terms_) {
    Monomial mm = m;
    mm.s2i = 0;
    r.add_term(mm, v);
  }
  return r;
}

Coeff Coeff::with_unit_characters() const {
  Coeff r;
  for (const auto& [m, v] : terms_) {
    Monomial mm = m;
    mm.mu.clear();
    r.add_term(mm, v);
  }
  return r;
}

std::complex<double> Coeff::evaluate(const std::map<int, double>& muValues) const {
  std::complex<double> total = 0;
  const std::complex<double> s2i(1.0, 1.0);  // principal square root of 2i
  for (const auto& [m, v] : terms_) {
    std::complex<double> t = v.convert_to<double>();
    if (m.i) t *= std::complex<double>(0, 1);
    if (m.s2i) t *= s2i;
    t *= std::pow(std::sqrt(std::numbers::pi), m.sqrtpi);
    for (auto [id, e] : m.mu) {
      auto it = muValues.find(id);
      if (it == muValues.end())
        throw std::invalid_argument("Coeff::evaluate: no value for mu" + std::to_string(id));
      t *= std::pow(it->second, e);
    }
    total += t;
  }
  return total;
}

static std::string monomial_str(const Monomial& m) {
  std::vector<std::string> parts;
  if (m.i) parts.push_back("i");
  if (m.s2i) parts.push_back("sqrt2i");
  if (m.sqrtpi == 1) parts.push_back("sqrtpi");
  else if (m.sqrtpi != 0) parts.push_back("sqrtpi^" + std::to_string(m.sqrtpi));
  for (auto [id, e] : m.mu) {
    std::string s = "mu" + std::to_string(id);
    if (e != 1) s += "^" + std::to_string(e);
    parts.push_back(s);
  }
  std::string out;
  for (size_t k = 0; k < parts.size(); ++k) out += (k ? "*" : "") + parts[k];
  return out;
}

std::string Coeff::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, v] : terms_) {
    std::string mono = monomial_str(m);
    std::string r = rational_str(v);
    std::string term;
    if (mono.empty()) {
      term = r.find('/') != std::string::npos ? "(" + r + ")" : r;
      if (term[0] == '(' && v < 0) term = "-(" + rational_str(-v) + ")";
    } else if (v == 1) {
      term = mono;
    } else if (v == -1) {
      term = "-" + mono;
    } else if (v < 0) {
      term = "-(" + rational_str(-v) + ")*" + mono;
    } else {
      term = "(" + r + ")*" + mono;
    }
    if (!first && term[0] != '-') out += "+";
    out += term;
    first = false;
  }
  if (terms_.size() > 1) out = "(" + out + ")";
  return out;
}

std::ostream& operator<<(std::ostream& os, const Coeff& c) { return os << c.str(); }

namespace {

// sum := ['-'] product (('+'|'-') product)*
// product := factor ('*' factor)*
// factor := number ['/' number] | '(' sum ')' | ident ['^' int]
class CoeffParser {
 public:
  explicit CoeffParser(const std::string& t) : s_(t) {}
  Coeff parse() {
    Coeff c = sum();
    skip();
    if (pos_ != s_.size()) fail("trailing characters");
    return c;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
  }
  [[noreturn]] void fail(const std::string& why) {
    throw std::invalid_argument("coefficient parse error (" + why + ") in '" + s_ + "'");
  }
  Coeff sum() {
    skip();
    bool neg = false;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      neg = s_[pos_] == '-';
      ++pos_;
    }
    Coeff acc = product();
    if (neg) acc = -acc;
    for (;;) {
      skip();
      if (pos_ >= s_.size() || (s_[pos_] != '+' && s_[pos_] != '-')) break;
      bool minus = s_[pos_] == '-';
      ++pos_;
      Coeff p = product();
      acc += minus ? -p : p;
    }
    return acc;
  }
  Coeff product() {
    Coeff acc = factor();
    for (;;) {
      skip();
      if (pos_ >= s_.size() || s_[pos_] != '*') break;
      ++pos_;
      acc *= factor();
    }
    return acc;
  }
  int integer() {
    skip();
    size_t start = pos_;
    if (pos_ < s_.size() && s_[pos_] == '-') ++pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_ || (pos_ == start + 1 && s_[start] == '-')) fail("expected integer");
    return std::stoi(s_.substr(start, pos_ - start));
  }
  int power() {
    skip();
    if (pos_ < s_.size() && s_[pos_] == '^') {
      ++pos_;
      return integer();
    }
    return 1;
  }
  static Coeff pow(const Coeff& base, int e) {
    if (e < 0) {
      if (!base.is_rational()) throw std::invalid_argument("negative power of non-rational");
      return Coeff(pow(Coeff(Rational(1) / base.rational_part()), -e));
    }
    Coeff r = 1;
    for (int k = 0; k < e; ++k) r *= base;
    return r;
  }
  Coeff factor() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char ch = s_[pos_];
    if (ch == '(') {
      ++pos_;
      Coeff inner = sum();
      skip();
      if (pos_ >= s_.size() || s_[pos_] != ')') fail("missing )");
      ++pos_;
      return pow(inner, power());
    }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      size_t start = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '/'))
        ++pos_;
      Coeff v(parse_rational(s_.substr(start, pos_ - start)));
      return pow(v, power());
    }
    size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    std::string id = s_.substr(start, pos_ - start);
    if (id == "i") {
      int e = power();
      int r = ((e % 4) + 4) % 4;
      return pow(Coeff::imag(), r);
    }
    if (id == "sqrt2i") {
      int e = power();
      if (e < 0) fail("negative power of sqrt2i");
      return pow(Coeff::sqrt2i(), e);
    }
    if (id == "sqrtpi") return Coeff::sqrtpi(power());
    if (id.rfind("mu", 0) == 0 && id.size() > 2) return Coeff::mu(std::stoi(id.substr(2)), power());
    fail("unknown symbol '" + id + "'");
  }
  std::string s_;
  size_t pos_ = 0;
};

}  // namespace

Coeff Coeff::parse(const std::string& text) { return CoeffParser(text).parse(); }

}  // namespace twist
