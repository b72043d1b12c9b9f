#pragma once
// Finite truncations of the model triples: circle (with conformal perturbation) and the
// geometric scaling crossed product, plus graded/invertible doubles and a regularity probe.

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace twist::models {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

enum class SigmaKind { Identity, Inner, Character };

struct ScalingUnitary {
  std::string name;
  Mat op;
  double mu = 1;  // U D U* = mu D on the inner window
};

struct ModelTriple {
  std::string kind;          // circle, conformal-circle, scaling, with "+graded" / "+invertible"
  int outerDim = 0;
  std::vector<int> labels;   // spectral label of each basis vector of the base model
  Mat D;
  RVec dsq;                  // diagonal of D^2; empty when D^2 is not diagonal (conformal)
  std::optional<RVec> grading;
  std::vector<int> inner;    // inner-window basis indices
  std::map<std::string, Mat> algebra;
  std::vector<ScalingUnitary> unitaries;
  SigmaKind sigma = SigmaKind::Identity;
  Mat E2, E2inv;             // inner twist: sigma(X) = E2 X E2inv
  double boundaryTol = 1e-10;
  double mu = 1;             // scaling character of the generator, 1 otherwise
  int cutoff = 0;            // circle N
  int baseDim = 0;           // dimension before doubling
  int doublings = 0;         // tensor factor C^2 count

  bool graded() const { return grading.has_value(); }
  bool diagonal_D2() const { return dsq.size() == outerDim; }
  bool diagonal_D() const;
  RVec d_diag() const;       // diagonal of D (meaningful when diagonal_D)
  // sigma^k of X; in character mode X is alpha U^p with character factor g = mu^{-p}.
  Mat sigma_power(const Mat& X, int k, double g = 1.0) const;
  // [D, X]_sigma = D X - sigma(X) D
  Mat twisted_commutator(const Mat& X, double g = 1.0) const;
  Mat gamma_matrix() const;  // grading or identity
  Mat inner_block(const Mat& X) const;
  double inner_norm(const Mat& X) const;  // operator norm of the inner block
  Mat identity() const { return Mat::Identity(outerDim, outerDim); }
};

// ---- circle ----
ModelTriple build_circle(int N, double innerFraction = 0.5);
// Multiplication by sum_k c_k e^{ik theta} as a truncated band matrix.
Mat trig_poly(const ModelTriple& circle, const std::map<int, cplx>& coeffs);
Mat shift(const ModelTriple& circle, int k);
// F = sign(D) for diagonal D
Mat phase(const ModelTriple& m);

struct ConformalCircle {
  ModelTriple twisted;  // D_h, sigma_h
  ModelTriple base;
  Mat E, Einv;          // e^h, e^{-h}
  Mat sigma_half(const Mat& a) const;  // sigma_{h/2}(a) = E a E^{-1}
  // e^h [D, sigma_{h/2}(a)] e^h against D_h a - sigma_h(a) D_h, inner-window norm
  double bound_residual(const Mat& a) const;
  // D_h^{-1}[D_h,a]_sigma against e^{-h} D^{-1} [D, sigma_{h/2}(a)] e^h
  double clue_residual(const Mat& a) const;
};
ConformalCircle conformal_perturb(const ModelTriple& circle, const std::map<int, cplx>& hCoeffs);

// ---- scaling ----
ModelTriple build_scaling(int windowLo, int windowHi, double mu, int collar = 2);
// Diagonal function f on the window; support must lie in the inner window.
Mat scaling_function(const ModelTriple& s, const std::map<int, cplx>& values);
// U^p for the declared generator (p may be negative)
Mat scaling_power(const ModelTriple& s, int p);
double scaling_relation_residual(const ModelTriple& s);

// ---- doubles ----
ModelTriple graded_double(const ModelTriple& m);

struct MassSpec {
  bool unit = true;
  RVec K;  // diagonal smoothing mass on the base space when unit == false
};
struct InvertibleDouble {
  ModelTriple model;
  Mat massTerm;  // Id (x)^ F_1 part, i.e. gamma K (x) F_1
  // || U D~ U* - (mu D~ + (1 - mu) massTerm) || on the inner window, relative
  double psim_residual(const ScalingUnitary& U) const;
};
InvertibleDouble invertible_double(const ModelTriple& graded, const MassSpec& mass = {});

// ---- regularity ----
struct DecayReport {
  std::vector<double> singularValues;
  double exponent = 0;   // s_n ~ C n^{-exponent}
  double constant = 0;
  double fitResidual = 0;
  double summability = 0;  // 1 / exponent: membership in L^(p, infinity) for p >= this
  int fitFrom = 0, fitTo = 0;
};
DecayReport lipschitz_probe(const ModelTriple& m, const Mat& a);
// || |D_h| a - sigma_h(a) |D_h| || on the inner window
double twisted_lipschitz_norm(const ConformalCircle& c, const Mat& a);

// ---- configuration and export ----
struct ModelConfig {
  std::string kind = "circle";  // circle | conformal | scaling
  int cutoff = 64;
  double innerFraction = 0.5;
  std::map<int, cplx> h;
  int windowLo = -12, windowHi = 12;
  double mu = 2.0;
  int collar = 2;
  bool gradedDouble = false;
  bool invertibleDouble = false;
  double boundaryTol = 1e-10;
};
// Throws std::invalid_argument with the JSON path of the offending key.
ModelConfig parse_model_config(const nlohmann::json& j);
ModelTriple build_model(const ModelConfig& c);

// Writes <prefix>_D.npy, <prefix>_<name>.npy for each matrix and a CSV of the spectrum.
std::vector<std::string> export_model(const ModelTriple& m, const std::string& prefix);
void write_npy(const std::string& path, const Mat& X);
Mat read_npy(const std::string& path);

}  // namespace twist::models
