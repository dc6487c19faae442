#include "common.hpp"
#include "doctest.h"

#include "mtdc/errors.hpp"
#include "mtdc/linearization.hpp"
#include "mtdc/modal.hpp"
#include "mtdc/operating_point.hpp"
#include "mtdc/params.hpp"
#include "mtdc/sensitivity.hpp"
#include "mtdc/sweep.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

using namespace mtdc;

namespace {

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Eigenvalues at q, operating point re-solved, computed in extended precision.
Eigen::VectorXcd eigenvalues_at(const ValidatedGridSpec& vs, const ParameterRef& q, double v) {
  const auto w = with_parameter(vs, q, v);
  const auto m = linearize(w, compute_operating_point(w));
  const MatL A = m.A_pu().cast<long double>();
  Eigen::EigenSolver<MatL> es(A, false);
  return es.eigenvalues().cast<std::complex<double>>();
}

cplx nearest(const Eigen::VectorXcd& ev, cplx z) {
  cplx best = ev[0];
  for (int i = 1; i < ev.size(); ++i)
    if (std::abs(ev[i] - z) < std::abs(best - z)) best = ev[i];
  return best;
}

struct Base {
  ValidatedGridSpec vs = testing::paper_case();
  OperatingPoint op = compute_operating_point(vs);
  LinearModel m = linearize(vs, op);
  ModeSet ms = eigen_decompose(m);
  std::vector<int> dom = dominant_modes(ms);
};

const Base& base() {
  static const Base b;
  return b;
}

} // namespace

TEST_CASE("dA/dq at a frozen operating point matches finite differences") {
  const auto& b = base();
  for (const char* path : {"T4.k_p_pll", "T4.k_i_pll", "T4.l_g", "T4.r_g", "T3.k_p_P", "T2.k_i_Q", "T1.k_p_dc",
                           "T4.t_mvd", "T2.c_f", "dc.3.r_per_km", "dc.5.l_per_km"}) {
    const std::string name = path;
    CAPTURE(name);
    const auto q = ParameterRef::parse(path);
    const double v = get_parameter(b.vs.spec, q);
    const double h = 1e-6 * std::abs(v);
    const Eigen::MatrixXd Ap = linearize(with_parameter(b.vs, q, v + h), b.op).A;
    const Eigen::MatrixXd Am = linearize(with_parameter(b.vs, q, v - h), b.op).A;
    const Eigen::MatrixXd fd = (Ap - Am) / (2 * h);
    const Eigen::MatrixXd an = dA_dq(b.vs, b.op, q, OpDependence::Frozen);
    const Eigen::VectorXd xb = b.m.x_base;
    const Eigen::MatrixXd d = xb.cwiseInverse().asDiagonal() * (an - fd) * xb.asDiagonal();
    const Eigen::MatrixXd s = xb.cwiseInverse().asDiagonal() * an * xb.asDiagonal();
    CHECK(d.cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, s.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("PLL gain derivative is confined to the PLL rows of its terminal") {
  const auto& b = base();
  const auto dA = dA_dq(b.vs, b.op, ParameterRef::parse("T4.k_p_pll"), OpDependence::Frozen);
  const int t4 = b.vs.terminal_index("T4");
  for (int i = 0; i < dA.rows(); ++i)
    for (int j = 0; j < dA.cols(); ++j) {
      if (dA(i, j) == 0.0) continue;
      CHECK(b.m.index.group_of(i) == t4);
      CHECK(b.m.index.local_state(i) == THETA);
    }
  // the integral gain enters the omega row linearly: dA/dk_i = A_row / k_i
  const auto dAi = dA_dq(b.vs, b.op, ParameterRef::parse("T4.k_i_pll"), OpDependence::Frozen);
  const int w = b.m.index.terminal_state(t4, OMEGA);
  const double ki = b.vs.terminal(t4).gains.k_i_pll;
  CHECK((dAi.row(w) - b.m.A.row(w) / ki).cwiseAbs().maxCoeff() < 1e-12 * b.m.A.row(w).cwiseAbs().maxCoeff());
  CHECK(dAi.norm() == doctest::Approx(dAi.row(w).norm()));
}

TEST_CASE("unsupported parameter is reported") {
  const auto& b = base();
  CHECK_THROWS_AS(dA_dq(b.vs, b.op, ParameterRef::parse("T4.p_ref"), OpDependence::Frozen), ConfigError);
  CHECK(supported_parameters().find("k_p_pll") != std::string::npos);
}

TEST_CASE("diagonal matrix: sensitivity to a diagonal entry") {
  LinearModel m;
  m.A = Eigen::Vector3d(-1, -2, -3).asDiagonal();
  m.x_base = Eigen::VectorXd::Ones(3);
  const auto ms = eigen_decompose(m);
  Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(3, 3);
  dA(1, 1) = 1.0;
  const auto s = eigen_sensitivity(m, ms, dA, {0, 1, 2});
  for (int k = 0; k < 3; ++k) CHECK(std::abs(s[k] - cplx(ms.lambda[k].real() == -2.0 ? 1.0 : 0.0)) < 1e-14);
}

TEST_CASE("repeated eigenvalue is refused") {
  LinearModel m;
  m.A = Eigen::Vector3d(-1, -1, -3).asDiagonal();
  m.x_base = Eigen::VectorXd::Ones(3);
  const auto ms = eigen_decompose(m);
  CHECK_THROWS_AS(eigen_sensitivity(m, ms, Eigen::MatrixXd::Identity(3, 3), {0}), DegenerateModeError);
}

TEST_CASE("sensitivity to a diagonal entry equals the participation factor") {
  std::mt19937 rng(21);
  std::normal_distribution<double> g;
  LinearModel m;
  m.A.resize(8, 8);
  for (int i = 0; i < 64; ++i) m.A(i) = g(rng);
  m.x_base = Eigen::VectorXd::Ones(8);
  const auto ms = eigen_decompose(m);
  const auto P = participation_matrix(ms);
  std::vector<int> all(8);
  for (int k = 0; k < 8; ++k) all[k] = k;
  for (int i = 0; i < 8; ++i) {
    Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(8, 8);
    dA(i, i) = 1.0;
    const auto s = eigen_sensitivity(m, ms, dA, all);
    for (int k = 0; k < 8; ++k) CHECK(std::abs(s[k] - P(i, k)) < 1e-9);
  }
}

TEST_CASE("eigenvalue sensitivity matches central differences of recomputed eigenvalues") {
  const auto& b = base();
  for (const char* path : {"T4.k_p_pll", "T4.l_g", "T3.k_p_P"}) {
    const auto q = ParameterRef::parse(path);
    const double v = get_parameter(b.vs.spec, q);
    const auto s = eigen_sensitivity(b.m, b.ms, dA_dq(b.vs, b.m, q, OpDependence::Total), b.dom);
    const double h = 1e-4 * std::abs(v);
    const auto ep = eigenvalues_at(b.vs, q, v + h), em = eigenvalues_at(b.vs, q, v - h);
    for (size_t i = 0; i < b.dom.size(); ++i) {
      const cplx l = b.ms.lambda[b.dom[i]];
      const cplx fd = (nearest(ep, l) - nearest(em, l)) / (2 * h);
      const std::string name = path;
      CAPTURE(name);
      CAPTURE(l);
      CHECK(std::abs(fd - s[i]) < 1e-3 * std::abs(s[i]));
    }
  }
}

TEST_CASE("conjugate modes have conjugate sensitivities") {
  const auto& b = base();
  const auto dA = dA_dq(b.vs, b.m, ParameterRef::parse("T4.l_g"), OpDependence::Total);
  for (int k : b.dom) {
    int kc = -1;
    for (int j = 0; j < b.ms.size(); ++j)
      if (std::abs(b.ms.lambda[j] - std::conj(b.ms.lambda[k])) < 1e-9 * std::abs(b.ms.lambda[k])) kc = j;
    REQUIRE(kc >= 0);
    const auto s = eigen_sensitivity(b.m, b.ms, dA, {k, kc});
    CHECK(std::abs(s[1] - std::conj(s[0])) < 1e-9 * std::abs(s[0]));
  }
}

TEST_CASE("reduced PLL index has the sign of the full sensitivity for the T4 mode") {
  const auto& b = base();
  const int t4 = b.vs.terminal_index("T4");
  const auto r = analyze_modes(b.m);
  int k = -1;
  for (int d : r.dominant)
    if (r.classes[d].dominant_terminals == std::vector<int>{t4}) k = d;
  REQUIRE(k >= 0);
  const auto s = eigen_sensitivity(b.m, b.ms, dA_dq(b.vs, b.m, ParameterRef::parse("T4.k_p_pll")), {k});
  const auto red = reduced_pll_sensitivity(b.vs, b.m, b.ms, t4, k, s[0]);
  CHECK(std::isfinite(red.reduced.real()));
  CHECK((red.reduced.real() > 0) == (s[0].real() > 0));
  CHECK(red.ratio == red.reduced / red.full);
  // a terminal with negligible share in the mode gives a negligible index
  const int t1 = b.vs.terminal_index("T1");
  const auto red1 = reduced_pll_sensitivity(b.vs, b.m, b.ms, t1, k, s[0]);
  CHECK(std::abs(red1.reduced) < 0.05 * std::abs(red.reduced));
}

TEST_CASE("first-order prediction") {
  CHECK(predict_eigenvalue({-10, 75}, {{0.5, -0.2}}, {2.0}) == cplx(-9, 74.6));
  CHECK(predict_eigenvalue({-10, 75}, {{0.5, -0.2}}, {0.0}) == cplx(-10, 75));
  CHECK(predict_eigenvalue({-10, 75}, {{0.5, -0.2}, {1.0, 1.0}}, {2.0, -1.0}) == cplx(-10, 73.6));
}

TEST_CASE("prediction error is second order in the step") {
  const auto& b = base();
  const auto q = ParameterRef::parse("T4.k_p_pll");
  const double v = get_parameter(b.vs.spec, q);
  const auto s = eigen_sensitivity(b.m, b.ms, dA_dq(b.vs, b.m, q, OpDependence::Total), b.dom);
  for (size_t i = 0; i < b.dom.size(); ++i) {
    const cplx l = b.ms.lambda[b.dom[i]];
    if (std::abs(s[i]) < 1e-3) continue; // mode barely moves: both errors sit at round-off
    const cplx t1 = nearest(eigenvalues_at(b.vs, q, v + 1.0), l);
    const cplx t2 = nearest(eigenvalues_at(b.vs, q, v + 0.5), l);
    const double e1 = std::abs(predict_eigenvalue(l, {s[i]}, {1.0}) - t1);
    const double e2 = std::abs(predict_eigenvalue(l, {s[i]}, {0.5}) - t2);
    CAPTURE(l);
    CHECK(e1 < 0.1 * std::abs(t1 - l));
    CHECK(e1 / e2 >= 3.5);
  }
}

TEST_CASE("stability margin") {
  const auto r = stability_margin({-12, 80}, [](double) { return cplx(0.5, 0.0); }, 0.0, 0.0, 100.0);
  REQUIRE(r.found);
  CHECK(r.dq == doctest::Approx(24.0));
  const auto none = stability_margin({-12, 80}, [](double) { return cplx(-0.5, 0.0); }, 0.0, 0.0, 100.0);
  CHECK_FALSE(none.found);
}

TEST_CASE("first-order instability estimates for T4") {
  const auto& b = base();
  for (auto [path, lo, hi] : {std::tuple{"T4.k_p_pll", 32.0, 42.0}, std::tuple{"T4.l_g", 0.267, 0.327}}) {
    const auto q = ParameterRef::parse(path);
    const double v = get_parameter(b.vs.spec, q);
    const auto s = eigen_sensitivity(b.m, b.ms, dA_dq(b.vs, b.m, q, OpDependence::Total), b.dom);
    double best = INFINITY;
    for (size_t i = 0; i < b.dom.size(); ++i) {
      const auto r = stability_margin(b.ms.lambda[b.dom[i]], [&](double) { return s[i]; }, v, v, 100.0 * v);
      if (r.found) best = std::min(best, r.q_crit);
    }
    const std::string name = path;
    CAPTURE(name);
    CHECK(best >= lo);
    CHECK(best <= hi);
  }
}

TEST_CASE("interaction distance") {
  const auto a = interaction_distance({-5, 75}, {-9, 72}, 0.0, 0.0, 0.0);
  CHECK(a.distance == doctest::Approx(5.0));
  CHECK(a.re_distance == doctest::Approx(4.0));
  CHECK_FALSE(a.interacting);
  CHECK(interaction_distance({-5, 75}, {-9, 72}, 0.0, 0.0, 0.0, 6.0).interacting);
  const auto x = interaction_distance({-5, 75}, {-9, 72}, {0.3, 1}, {-0.2, 2}, 1.5);
  const auto y = interaction_distance({-9, 72}, {-5, 75}, {-0.2, 2}, {0.3, 1}, 1.5);
  CHECK(x.distance == y.distance);
  CHECK(x.re_distance == y.re_distance);
}
