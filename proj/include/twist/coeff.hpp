#pragma once
// Exact coefficients in Q[i, sqrt(pi), sqrt(2i), mu_id^{+-1}].

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace twist {

using Rational = boost::multiprecision::cpp_rational;

std::string rational_str(const Rational& r);
Rational parse_rational(const std::string& s);
Rational binomial(long n, long k);
// binom(x, k) for rational x
Rational binomial_q(const Rational& x, long k);
Rational factorial(long n);

// Basis monomial. Reduced: i in {0,1}, s2i in {0,1}; i^2 = -1 and sqrt(2i)^2 = 2i are
// folded into the rational part by Coeff arithmetic.
struct Monomial {
  int i = 0;
  int s2i = 0;
  int sqrtpi = 0;
  std::vector<std::pair<int, int>> mu;  // (group id, exponent), sorted, nonzero

  bool operator<(const Monomial& o) const;
  bool operator==(const Monomial& o) const;
  bool is_one() const { return i == 0 && s2i == 0 && sqrtpi == 0 && mu.empty(); }
};

class Coeff {
 public:
  Coeff() = default;
  Coeff(long v);  // NOLINT
  Coeff(const Rational& r);  // NOLINT
  static Coeff imag();
  static Coeff sqrt2i();
  static Coeff sqrtpi(int power = 1);
  static Coeff mu(int id, int power);
  // Gamma(n/2) for positive integer n, as rational * sqrt(pi)^{0|1}
  static Coeff gamma_half(int n);

  bool is_zero() const { return terms_.empty(); }
  bool is_rational() const;
  Rational rational_part() const;  // coefficient of monomial 1

  Coeff operator+(const Coeff& o) const;
  Coeff operator-(const Coeff& o) const;
  Coeff operator-() const;
  Coeff operator*(const Coeff& o) const;
  Coeff& operator+=(const Coeff& o);
  Coeff& operator-=(const Coeff& o);
  Coeff& operator*=(const Coeff& o);
  bool operator==(const Coeff& o) const { return terms_ == o.terms_; }
  bool operator!=(const Coeff& o) const { return !(*this == o); }
  bool operator<(const Coeff& o) const { return terms_ < o.terms_; }

  // Drop the sqrt(2i) factor (set monomials with s2i=1 to s2i=0); used to compare
  // values reported with and without the odd normalization.
  Coeff without_sqrt2i() const;
  // Replace every mu_id by 1.
  Coeff with_unit_characters() const;

  std::complex<double> evaluate(const std::map<int, double>& muValues = {}) const;

  const std::map<Monomial, Rational>& terms() const { return terms_; }
  std::string str() const;
  static Coeff parse(const std::string& text);

 private:
  void add_term(const Monomial& m, const Rational& r);
  std::map<Monomial, Rational> terms_;
};

std::ostream& operator<<(std::ostream& os, const Coeff& c);

}  // namespace twist
