#include "twist/models.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace twist::models {

namespace {

Mat hermitian_function(const Mat& H, double (*f)(double)) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  RVec v = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * v.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

Mat kron2(const Mat& A, const Eigen::Matrix2cd& B) {
  Mat out = Eigen::kroneckerProduct(A, Mat(B)).eval();
  return out;
}

std::vector<int> double_indices(const std::vector<int>& idx) {
  std::vector<int> out;
  for (int i : idx) {
    out.push_back(2 * i);
    out.push_back(2 * i + 1);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------------------

bool ModelTriple::diagonal_D() const {
  Mat off = D;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff() == 0.0;
}

RVec ModelTriple::d_diag() const { return D.diagonal().real(); }

Mat ModelTriple::sigma_power(const Mat& X, int k, double g) const {
  switch (sigma) {
    case SigmaKind::Identity: return X;
    case SigmaKind::Character: return X * std::pow(g, k);
    case SigmaKind::Inner: {
      Mat Y = X;
      for (int j = 0; j < std::abs(k); ++j) Y = k > 0 ? Mat(E2 * Y * E2inv) : Mat(E2inv * Y * E2);
      return Y;
    }
  }
  return X;
}

Mat ModelTriple::twisted_commutator(const Mat& X, double g) const {
  return D * X - sigma_power(X, 1, g) * D;
}

Mat ModelTriple::gamma_matrix() const {
  if (!grading) return identity();
  return grading->cast<cplx>().asDiagonal();
}

Mat ModelTriple::inner_block(const Mat& X) const {
  const int n = static_cast<int>(inner.size());
  Mat B(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) B(r, c) = X(inner[r], inner[c]);
  return B;
}

double ModelTriple::inner_norm(const Mat& X) const {
  Mat B = inner_block(X);
  if (B.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(B);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------------------
// Circle

ModelTriple build_circle(int N, double innerFraction) {
  if (N < 4) throw std::invalid_argument("build_circle: N must be at least 4");
  if (!(innerFraction > 0 && innerFraction <= 1)) throw std::invalid_argument("build_circle: innerFraction must lie in (0,1]");
  ModelTriple m;
  m.kind = "circle";
  m.cutoff = N;
  m.outerDim = 2 * N + 1;
  m.baseDim = m.outerDim;
  m.D = Mat::Zero(m.outerDim, m.outerDim);
  m.dsq.resize(m.outerDim);
  int half = static_cast<int>(std::floor(innerFraction * N));
  for (int n = -N; n <= N; ++n) {
    int i = n + N;
    m.labels.push_back(n);
    m.D(i, i) = n + 0.5;
    m.dsq(i) = (n + 0.5) * (n + 0.5);
    if (std::abs(n) <= half) m.inner.push_back(i);
  }
  m.algebra["u"] = shift(m, 1);
  m.algebra["u*"] = shift(m, -1);
  return m;
}

Mat shift(const ModelTriple& c, int k) {
  Mat S = Mat::Zero(c.outerDim, c.outerDim);
  for (int i = 0; i < c.outerDim; ++i)
    if (i + k >= 0 && i + k < c.outerDim) S(i + k, i) = 1.0;
  return S;
}

Mat trig_poly(const ModelTriple& c, const std::map<int, cplx>& coeffs) {
  Mat A = Mat::Zero(c.outerDim, c.outerDim);
  for (const auto& [k, v] : coeffs) A += v * shift(c, k);
  return A;
}

Mat phase(const ModelTriple& m) {
  if (m.diagonal_D()) return m.d_diag().unaryExpr(&sgn).cast<cplx>().asDiagonal();
  return hermitian_function(m.D, &sgn);
}

Mat ConformalCircle::sigma_half(const Mat& a) const { return E * a * Einv; }

double ConformalCircle::bound_residual(const Mat& a) const {
  Mat lhs = twisted.D * a - twisted.sigma_power(a, 1) * twisted.D;
  Mat b = sigma_half(a);
  Mat rhs = E * (base.D * b - b * base.D) * E;
  return twisted.inner_norm(lhs - rhs);
}

double ConformalCircle::clue_residual(const Mat& a) const {
  Mat Dhinv = Einv * base.D.inverse() * Einv;
  Mat lhs = Dhinv * (twisted.D * a - twisted.sigma_power(a, 1) * twisted.D);
  Mat b = sigma_half(a);
  Mat rhs = Einv * base.D.inverse() * (base.D * b - b * base.D) * E;
  return twisted.inner_norm(lhs - rhs);
}

ConformalCircle conformal_perturb(const ModelTriple& circle, const std::map<int, cplx>& hCoeffs) {
  if (circle.kind != "circle") throw std::invalid_argument("conformal_perturb: expects the circle triple");
  for (const auto& [k, v] : hCoeffs) {
    auto it = hCoeffs.find(-k);
    cplx partner = it == hCoeffs.end() ? cplx(0) : it->second;
    if (std::abs(partner - std::conj(v)) > 1e-14)
      throw std::invalid_argument("conformal_perturb: h is not self-adjoint (coefficient " + std::to_string(k) + ")");
  }
  ConformalCircle c;
  c.base = circle;
  Mat H = trig_poly(circle, hCoeffs);
  c.E = hermitian_function(H, [](double x) { return std::exp(x); });
  c.Einv = hermitian_function(H, [](double x) { return std::exp(-x); });
  c.twisted = circle;
  c.twisted.kind = "conformal-circle";
  c.twisted.D = c.E * circle.D * c.E;
  c.twisted.dsq = RVec();  // D_h^2 is not diagonal
  c.twisted.sigma = hCoeffs.empty() ? SigmaKind::Identity : SigmaKind::Inner;
  c.twisted.E2 = c.E * c.E;
  c.twisted.E2inv = c.Einv * c.Einv;
  return c;
}

// ---------------------------------------------------------------------------------------
// Scaling

ModelTriple build_scaling(int lo, int hi, double mu, int collar) {
  if (!(mu > 1)) throw std::invalid_argument("build_scaling: mu must exceed 1");
  if (hi - lo < 8) throw std::invalid_argument("build_scaling: window narrower than 8");
  if (collar < 1 || 2 * collar >= hi - lo) throw std::invalid_argument("build_scaling: bad collar");
  ModelTriple m;
  m.kind = "scaling";
  m.mu = mu;
  m.outerDim = hi - lo + 1;
  m.baseDim = m.outerDim;
  m.D = Mat::Zero(m.outerDim, m.outerDim);
  m.dsq.resize(m.outerDim);
  for (int k = lo; k <= hi; ++k) {
    int i = k - lo;
    m.labels.push_back(k);
    m.D(i, i) = std::pow(mu, k);
    m.dsq(i) = std::pow(mu, 2 * k);
    if (k >= lo + collar && k <= hi - collar) m.inner.push_back(i);
  }
  // U e_k = e_{k-1}, wrapping e_lo to e_hi on the collar
  Mat U = Mat::Zero(m.outerDim, m.outerDim);
  for (int i = 1; i < m.outerDim; ++i) U(i - 1, i) = 1.0;
  U(m.outerDim - 1, 0) = 1.0;
  m.unitaries.push_back({"U", U, mu});
  m.sigma = SigmaKind::Character;
  m.algebra["U"] = U;
  m.algebra["U*"] = U.adjoint();
  double res = scaling_relation_residual(m);
  if (res > 1e-14) throw std::logic_error("build_scaling: U D U* = mu D fails on the inner window");
  return m;
}

Mat scaling_function(const ModelTriple& s, const std::map<int, cplx>& values) {
  if (s.kind.rfind("scaling", 0) != 0) throw std::invalid_argument("scaling_function: not a scaling model");
  Mat f = Mat::Zero(s.baseDim, s.baseDim);
  int lo = s.labels.front();
  for (const auto& [k, v] : values) {
    int i = k - lo;
    if (std::find(s.inner.begin(), s.inner.end(), i) == s.inner.end())
      throw std::invalid_argument("scaling_function: support point " + std::to_string(k) + " outside the inner window");
    f(i, i) = v;
  }
  return f;
}

Mat scaling_power(const ModelTriple& s, int p) {
  const Mat& U = s.unitaries.at(0).op;
  Mat base = p >= 0 ? U : Mat(U.adjoint());
  Mat out = Mat::Identity(U.rows(), U.cols());
  for (int j = 0; j < std::abs(p); ++j) out = out * base;
  return out;
}

double scaling_relation_residual(const ModelTriple& s) {
  double worst = 0;
  for (const auto& U : s.unitaries) {
    Mat r = U.op * s.D * U.op.adjoint() - U.mu * s.D;
    Mat ri = s.inner_block(r);
    double scale = s.inner_block(s.D).cwiseAbs().maxCoeff();
    worst = std::max(worst, ri.cwiseAbs().maxCoeff() / scale);
    Mat u = s.inner_block(U.op.adjoint() * U.op) - Mat::Identity(s.inner.size(), s.inner.size());
    if (u.cwiseAbs().maxCoeff() > 1e-12) throw std::logic_error("scaling unitary not unitary on the inner window");
  }
  return worst;
}

// ---------------------------------------------------------------------------------------
// Doubles

ModelTriple graded_double(const ModelTriple& m) {
  if (m.graded()) throw std::invalid_argument("graded_double: input is already graded");
  Eigen::Matrix2cd P1, g1, I2, eps;
  P1 << 0, cplx(0, 1), cplx(0, -1), 0;
  g1 << 1, 0, 0, -1;
  I2.setIdentity();
  eps << 0, 1, 1, 0;
  ModelTriple g = m;
  g.kind = m.kind + "+graded";
  g.outerDim = 2 * m.outerDim;
  g.doublings = m.doublings + 1;
  g.D = kron2(m.D, P1);
  if (m.dsq.size() == m.outerDim) {
    g.dsq.resize(g.outerDim);
    for (int i = 0; i < m.outerDim; ++i) g.dsq(2 * i) = g.dsq(2 * i + 1) = m.dsq(i);
  } else {
    g.dsq = RVec();
  }
  RVec gr(g.outerDim);
  for (int i = 0; i < m.outerDim; ++i) {
    gr(2 * i) = 1;
    gr(2 * i + 1) = -1;
  }
  g.grading = gr;
  g.inner = double_indices(m.inner);
  g.algebra.clear();
  for (const auto& [name, a] : m.algebra) g.algebra[name] = kron2(a, I2);
  g.algebra["eps"] = kron2(Mat::Identity(m.outerDim, m.outerDim), eps);
  g.unitaries.clear();
  for (const auto& U : m.unitaries) g.unitaries.push_back({U.name, kron2(U.op, I2), U.mu});
  if (m.sigma == SigmaKind::Inner) {
    g.E2 = kron2(m.E2, I2);
    g.E2inv = kron2(m.E2inv, I2);
  }
  return g;
}

double InvertibleDouble::psim_residual(const ScalingUnitary& U) const {
  const Mat& Dt = model.D;
  Mat r = U.op * Dt * U.op.adjoint() - (U.mu * Dt + (1 - U.mu) * massTerm);
  return model.inner_norm(r) / model.inner_norm(Dt);
}

InvertibleDouble invertible_double(const ModelTriple& m, const MassSpec& mass) {
  if (!m.graded()) throw std::invalid_argument("invertible_double: input must be graded");
  if (m.dsq.size() != m.outerDim) throw std::invalid_argument("invertible_double: D^2 must be diagonal");
  Eigen::Matrix2cd F1, g1, I2, e1;
  F1 << 0, 1, 1, 0;
  g1 << 1, 0, 0, -1;
  I2.setIdentity();
  e1 << 1, 0, 0, 0;
  const int n = m.outerDim;
  RVec K = RVec::Ones(n);
  if (!mass.unit) {
    if (mass.K.size() == n) {
      K = mass.K;
    } else if (m.doublings > 0 && mass.K.size() * 2 == n) {
      for (int i = 0; i < mass.K.size(); ++i) K(2 * i) = K(2 * i + 1) = mass.K(i);
    } else {
      throw std::invalid_argument("invertible_double: mass vector has the wrong size");
    }
  }
  Mat Km = K.cast<cplx>().asDiagonal();
  Mat gam = m.gamma_matrix();
  double dn = std::max(1.0, m.D.cwiseAbs().maxCoeff());
  if ((Km * m.D - m.D * Km).cwiseAbs().maxCoeff() > 1e-12 * dn)
    throw std::invalid_argument("invertible_double: mass does not commute with D");
  if ((Km * gam - gam * Km).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("invertible_double: mass does not commute with the grading");
  RVec d2k = m.dsq + K.cwiseProduct(K);
  if (d2k.minCoeff() <= 1e-12) throw std::invalid_argument("invertible_double: D^2 + K^2 is not invertible");

  InvertibleDouble out;
  ModelTriple& t = out.model;
  t = m;
  t.kind = m.kind + "+invertible";
  t.outerDim = 2 * n;
  t.doublings = m.doublings + 1;
  out.massTerm = kron2(gam * Km, F1);
  t.D = kron2(m.D, I2) + out.massTerm;
  t.dsq.resize(t.outerDim);
  for (int i = 0; i < n; ++i) t.dsq(2 * i) = t.dsq(2 * i + 1) = d2k(i);
  RVec gr(t.outerDim);
  for (int i = 0; i < n; ++i) {
    gr(2 * i) = (*m.grading)(i);
    gr(2 * i + 1) = -(*m.grading)(i);
  }
  t.grading = gr;
  t.inner = double_indices(m.inner);
  t.algebra.clear();
  for (const auto& [name, a] : m.algebra) t.algebra[name] = kron2(a, e1);
  t.unitaries.clear();
  for (const auto& U : m.unitaries) t.unitaries.push_back({U.name, kron2(U.op, I2), U.mu});
  if (m.sigma == SigmaKind::Inner) {
    t.E2 = kron2(m.E2, I2);
    t.E2inv = kron2(m.E2inv, I2);
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Regularity

DecayReport lipschitz_probe(const ModelTriple& m, const Mat& a) {
  if (m.dsq.size() != m.outerDim) throw std::invalid_argument("lipschitz_probe: D^2 must be diagonal");
  RVec w = (m.dsq.array() + 1.0).rsqrt();
  Mat G = m.D * w.cast<cplx>().asDiagonal();
  Mat C = m.inner_block(G * a - a * G);
  Eigen::JacobiSVD<Mat> svd(C);
  DecayReport r;
  RVec s = svd.singularValues();
  for (int j = 0; j < s.size(); ++j) r.singularValues.push_back(s(j));
  if (s.size() == 0 || s(0) == 0.0) return r;
  // fit log s_n = log C - p log n over the range where s_n sits well above rounding
  int last = 0;
  while (last + 1 < s.size() && s(last + 1) > 1e-11 * s(0)) ++last;
  int first = std::min(2, last);
  r.fitFrom = first + 1;
  r.fitTo = last + 1;
  int cnt = last - first + 1;
  if (cnt < 3) return r;
  Eigen::MatrixXd A(cnt, 2);
  Eigen::VectorXd y(cnt);
  for (int j = 0; j < cnt; ++j) {
    A(j, 0) = 1;
    A(j, 1) = -std::log(first + j + 1.0);
    y(j) = std::log(s(first + j));
  }
  Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
  r.constant = std::exp(coef(0));
  r.exponent = coef(1);
  r.fitResidual = (A * coef - y).norm() / std::sqrt(double(cnt));
  r.summability = r.exponent > 0 ? 1.0 / r.exponent : INFINITY;
  return r;
}

double twisted_lipschitz_norm(const ConformalCircle& c, const Mat& a) {
  Mat absDh = hermitian_function(c.twisted.D, [](double x) { return std::abs(x); });
  Mat X = absDh * a - c.twisted.sigma_power(a, 1) * absDh;
  return c.twisted.inner_norm(X);
}

// ---------------------------------------------------------------------------------------
// Config and export

namespace {

template <class T>
T get_or(const nlohmann::json& j, const std::string& key, const std::string& path, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + "/" + key + ": " + e.what());
  }
}

}  // namespace

ModelConfig parse_model_config(const nlohmann::json& j) {
  const std::string path = "/model";
  if (!j.is_object()) throw std::invalid_argument(path + ": expected an object");
  static const std::vector<std::string> known = {"kind", "cutoff", "innerFraction", "h", "windowLo", "windowHi",
                                                 "mu", "collar", "gradedDouble", "invertibleDouble", "boundaryTol"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument(path + "/" + it.key() + ": unknown key");
  ModelConfig c;
  c.kind = get_or<std::string>(j, "kind", path, c.kind);
  if (c.kind != "circle" && c.kind != "conformal" && c.kind != "scaling")
    throw std::invalid_argument(path + "/kind: unknown model kind '" + c.kind + "'");
  c.cutoff = get_or<int>(j, "cutoff", path, c.cutoff);
  c.innerFraction = get_or<double>(j, "innerFraction", path, c.innerFraction);
  c.windowLo = get_or<int>(j, "windowLo", path, c.windowLo);
  c.windowHi = get_or<int>(j, "windowHi", path, c.windowHi);
  c.mu = get_or<double>(j, "mu", path, c.mu);
  c.collar = get_or<int>(j, "collar", path, c.collar);
  c.gradedDouble = get_or<bool>(j, "gradedDouble", path, c.gradedDouble);
  c.invertibleDouble = get_or<bool>(j, "invertibleDouble", path, c.invertibleDouble);
  c.boundaryTol = get_or<double>(j, "boundaryTol", path, c.boundaryTol);
  if (j.contains("h")) {
    const auto& h = j.at("h");
    if (!h.is_object()) throw std::invalid_argument(path + "/h: expected an object of Fourier coefficients");
    for (auto it = h.begin(); it != h.end(); ++it) {
      int k = 0;
      try {
        k = std::stoi(it.key());
      } catch (...) {
        throw std::invalid_argument(path + "/h/" + it.key() + ": Fourier index must be an integer");
      }
      if (it->is_number()) {
        c.h[k] = it->get<double>();
      } else if (it->is_array() && it->size() == 2) {
        c.h[k] = cplx((*it)[0].get<double>(), (*it)[1].get<double>());
      } else {
        throw std::invalid_argument(path + "/h/" + it.key() + ": expected a number or [re, im]");
      }
    }
  }
  if (c.kind == "scaling") {
    if (!(c.mu > 1)) throw std::invalid_argument(path + "/mu: scaling model needs mu > 1");
    if (c.windowHi - c.windowLo < 8) throw std::invalid_argument(path + "/windowHi: window narrower than 8");
  } else {
    if (c.cutoff < 4) throw std::invalid_argument(path + "/cutoff: must be at least 4");
    if (!(c.innerFraction > 0 && c.innerFraction <= 1))
      throw std::invalid_argument(path + "/innerFraction: must lie in (0,1]");
  }
  if (!(c.boundaryTol > 0)) throw std::invalid_argument(path + "/boundaryTol: must be positive");
  if (c.invertibleDouble) c.gradedDouble = true;  // the invertible double needs a graded input
  return c;
}

ModelTriple build_model(const ModelConfig& c) {
  ModelTriple m;
  if (c.kind == "scaling") {
    m = build_scaling(c.windowLo, c.windowHi, c.mu, c.collar);
  } else {
    m = build_circle(c.cutoff, c.innerFraction);
    if (c.kind == "conformal") m = conformal_perturb(m, c.h).twisted;
  }
  m.boundaryTol = c.boundaryTol;
  if (c.gradedDouble) m = graded_double(m);
  if (c.invertibleDouble) m = invertible_double(m).model;
  return m;
}

void write_npy(const std::string& path, const Mat& X) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  std::ostringstream h;
  h << "{'descr': '<c16', 'fortran_order': False, 'shape': (" << X.rows() << ", " << X.cols() << "), }";
  std::string header = h.str();
  size_t total = 10 + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header.push_back('\n');
  const char magic[] = "\x93NUMPY";
  f.write(magic, 6);
  char ver[2] = {1, 0};
  f.write(ver, 2);
  uint16_t len = static_cast<uint16_t>(header.size());
  char lb[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  f.write(lb, 2);
  f.write(header.data(), header.size());
  for (int r = 0; r < X.rows(); ++r)
    for (int c = 0; c < X.cols(); ++c) {
      double v[2] = {X(r, c).real(), X(r, c).imag()};
      f.write(reinterpret_cast<const char*>(v), sizeof v);
    }
}

Mat read_npy(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, "\x93NUMPY", 6) != 0) throw std::runtime_error(path + ": not an npy file");
  unsigned char lb[2];
  f.read(reinterpret_cast<char*>(lb), 2);
  size_t len = lb[0] | (lb[1] << 8);
  std::string header(len, ' ');
  f.read(header.data(), len);
  if (header.find("'<c16'") == std::string::npos || header.find("'fortran_order': False") == std::string::npos)
    throw std::runtime_error(path + ": unsupported npy layout");
  auto p = header.find("'shape': (");
  long rows = 0, cols = 0;
  if (std::sscanf(header.c_str() + p, "'shape': (%ld, %ld)", &rows, &cols) != 2)
    throw std::runtime_error(path + ": cannot parse shape");
  Mat X(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      double v[2];
      f.read(reinterpret_cast<char*>(v), sizeof v);
      X(r, c) = cplx(v[0], v[1]);
    }
  return X;
}

std::vector<std::string> export_model(const ModelTriple& m, const std::string& prefix) {
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const Mat& X) {
    std::string p = prefix + "_" + name + ".npy";
    write_npy(p, X);
    files.push_back(p);
  };
  put("D", m.D);
  if (m.grading) put("gamma", m.gamma_matrix());
  for (const auto& [name, a] : m.algebra) {
    std::string safe = name;
    std::replace(safe.begin(), safe.end(), '*', 's');
    put("alg_" + safe, a);
  }
  for (const auto& U : m.unitaries) put("unitary_" + U.name, U.op);
  std::string csv = prefix + "_spectrum.csv";
  std::ofstream f(csv);
  f << "# kind=" << m.kind << " outerDim=" << m.outerDim << " innerDim=" << m.inner.size() << "\n";
  f << "index,D_re,D_im,Dsq,grading,inner\n";
  std::vector<bool> in(m.outerDim, false);
  for (int i : m.inner) in[i] = true;
  f.precision(17);
  for (int i = 0; i < m.outerDim; ++i) {
    f << i << "," << m.D(i, i).real() << "," << m.D(i, i).imag() << ","
      << (m.dsq.size() == m.outerDim ? m.dsq(i) : NAN) << "," << (m.grading ? (*m.grading)(i) : 1.0) << ","
      << (in[i] ? 1 : 0) << "\n";
  }
  files.push_back(csv);
  return files;
}

}  // namespace twist::models
