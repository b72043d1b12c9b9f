#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "twist/models.hpp"

#include <unsupported/Eigen/KroneckerProduct>

using namespace twist::models;

namespace {

int numerical_rank(const Mat& X, double tol = 1e-10) {
  Eigen::JacobiSVD<Mat> svd(X);
  int r = 0;
  for (int j = 0; j < svd.singularValues().size(); ++j) r += svd.singularValues()(j) > tol;
  return r;
}

}  // namespace

TEST_CASE("circle basics") {
  auto c = build_circle(4);
  CHECK(c.outerDim == 9);
  RVec expect(9);
  expect << -3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5, 4.5;
  CHECK((c.d_diag() - expect).norm() == 0.0);
  CHECK_THROWS_AS(build_circle(3), std::invalid_argument);

  auto m = build_circle(16);
  Mat u = shift(m, 1);
  Mat comm = m.D * u - u * m.D;
  CHECK(m.inner_norm(comm - u) == doctest::Approx(0).epsilon(1e-15));
  Mat F = phase(m);
  CHECK(numerical_rank(F * u - u * F) == 1);
  for (int k = -4; k <= 4; ++k) {
    Mat e = shift(m, k);
    CHECK(numerical_rank(F * e - e * F) == std::abs(k));
  }
  Mat p = trig_poly(m, {{1, 2.0}, {-1, 2.0}});
  CHECK((p - p.adjoint()).norm() == 0.0);
}

TEST_CASE("conformal perturbation") {
  auto c = build_circle(128, 0.5);
  auto cc = conformal_perturb(c, {{1, 0.15}, {-1, 0.15}});
  Mat a = trig_poly(c, {{1, cplx(0.3, 0.1)}, {0, 1.0}, {-2, cplx(0, -0.4)}});
  CHECK(cc.clue_residual(a) <= 1e-8);
  CHECK(cc.bound_residual(a) <= 1e-8 * c.inner_norm(c.D));
  auto flat = conformal_perturb(c, {});
  CHECK((flat.twisted.D - c.D).norm() == 0.0);
  CHECK_THROWS_AS(conformal_perturb(c, {{1, 0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(conformal_perturb(c, {{1, 0.1}, {-1, cplx(0, 0.1)}}), std::invalid_argument);

  // the twisted Lipschitz norm does not grow with the cutoff
  auto c2 = build_circle(256, 0.25);
  auto cc2 = conformal_perturb(c2, {{1, 0.15}, {-1, 0.15}});
  double n1 = twisted_lipschitz_norm(cc, shift(c, 1));
  double n2 = twisted_lipschitz_norm(cc2, shift(c2, 1));
  CHECK(n2 / n1 <= 1.05);
}

TEST_CASE("scaling model") {
  auto s = build_scaling(-12, 12, 2.0);
  CHECK(s.outerDim == 25);
  CHECK(scaling_relation_residual(s) <= 1e-14);
  Mat f = scaling_function(s, {{0, 1.0}, {3, cplx(0, 2)}});
  Mat U = scaling_power(s, 1);
  CHECK((f * U).trace() == cplx(0));
  CHECK((scaling_power(s, 2) - U * U).norm() == 0.0);
  CHECK((scaling_power(s, -1) - U.adjoint()).norm() == 0.0);
  CHECK_THROWS_AS(scaling_function(s, {{12, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(build_scaling(-12, 12, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_scaling(0, 5, 2.0), std::invalid_argument);
}

TEST_CASE("graded and invertible doubles") {
  auto c = build_circle(8);
  auto g = graded_double(c);
  CHECK(g.outerDim == 34);
  Mat D2 = g.D * g.D;
  Mat expect = Eigen::kroneckerProduct(Mat(c.D * c.D), Mat::Identity(2, 2)).eval();
  CHECK((D2 - expect).norm() == doctest::Approx(0));
  Mat gam = g.gamma_matrix();
  CHECK((gam * g.D + g.D * gam).norm() == 0.0);
  CHECK(g.algebra.count("eps"));
  CHECK_THROWS_AS(graded_double(g), std::invalid_argument);
  CHECK_THROWS_AS(invertible_double(c), std::invalid_argument);

  auto inv = invertible_double(g);
  Mat Dt2 = inv.model.D * inv.model.D;
  RVec target(inv.model.outerDim);
  for (int i = 0; i < inv.model.outerDim; ++i) target(i) = inv.model.dsq(i);
  CHECK((Dt2 - Mat(target.cast<cplx>().asDiagonal())).cwiseAbs().maxCoeff() <= 1e-14 * target.maxCoeff());
  for (int i = 0; i < g.outerDim; ++i) CHECK(inv.model.dsq(2 * i) == g.dsq(i) + 1.0);

  auto sg = graded_double(build_scaling(-12, 12, 2.0));
  auto sinv = invertible_double(sg);
  CHECK(sinv.psim_residual(sinv.model.unitaries.at(0)) <= 1e-12);

  MassSpec bad;
  bad.unit = false;
  bad.K = RVec::Zero(c.outerDim);
  bad.K(0) = 1;  // D^2 + K^2 stays invertible on the circle, but check commuting and sizes
  CHECK_NOTHROW(invertible_double(g, bad));
  bad.K = RVec::Zero(3);
  CHECK_THROWS_AS(invertible_double(g, bad), std::invalid_argument);
}

TEST_CASE("Lipschitz probe") {
  auto c = build_circle(64);
  auto r = lipschitz_probe(c, shift(c, 1));
  CHECK(r.exponent >= 0.9);
  CHECK(r.singularValues.front() > 0);
  auto z = lipschitz_probe(c, c.identity());
  CHECK(z.singularValues.front() == 0.0);
}

TEST_CASE("configuration") {
  auto cfg = parse_model_config(nlohmann::json::parse(R"({"kind":"scaling","mu":2,"windowLo":-12,"windowHi":12})"));
  CHECK(cfg.kind == "scaling");
  CHECK(build_model(cfg).outerDim == 25);
  CHECK_THROWS_WITH_AS(parse_model_config(nlohmann::json::parse(R"({"kind":"scaling","mu":0.5})")),
                       doctest::Contains("/model/mu"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_model_config(nlohmann::json::parse(R"({"kind":"circle","cutof":4})")),
                       doctest::Contains("/model/cutof"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model_config(nlohmann::json::parse(R"({"kind":"torus"})")), std::invalid_argument);
  auto conf = parse_model_config(nlohmann::json::parse(R"({"kind":"conformal","cutoff":16,"h":{"1":0.1,"-1":0.1}})"));
  auto m = build_model(conf);
  CHECK(m.sigma == SigmaKind::Inner);
  CHECK_FALSE(m.diagonal_D2());
  auto dbl = parse_model_config(nlohmann::json::parse(R"({"kind":"circle","cutoff":8,"invertibleDouble":true})"));
  CHECK(build_model(dbl).outerDim == 4 * 17);
}

TEST_CASE("npy round trip and export") {
  auto dir = std::filesystem::temp_directory_path() / "twist_models_test";
  std::filesystem::create_directories(dir);
  Mat X = Mat::Random(5, 3);
  auto path = (dir / "x.npy").string();
  write_npy(path, X);
  CHECK((read_npy(path) - X).norm() == 0.0);
  CHECK(std::filesystem::file_size(path) == 128 + 15 * 16);
  auto files = export_model(build_circle(4), (dir / "circle").string());
  CHECK(files.size() >= 4);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));
  std::filesystem::remove_all(dir);
}
