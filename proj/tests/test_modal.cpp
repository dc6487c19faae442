#include "common.hpp"
#include "doctest.h"

#include "mtdc/errors.hpp"
#include "mtdc/linearization.hpp"
#include "mtdc/modal.hpp"
#include "mtdc/operating_point.hpp"
#include "mtdc/params.hpp"

#include <cmath>
#include <random>

using namespace mtdc;

namespace {

LinearModel base_model() {
  const auto vs = testing::paper_case();
  return linearize(vs, compute_operating_point(vs));
}

// Model with every coupling between different groups removed.
LinearModel decoupled(LinearModel m) {
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j)
      if (m.index.group_of(i) != m.index.group_of(j)) m.A(i, j) = 0.0;
  return m;
}

} // namespace

TEST_CASE("diagonal matrix") {
  Eigen::MatrixXd A = Eigen::Vector2d(-1, -2).asDiagonal();
  const auto ms = eigen_decompose(A);
  REQUIRE(ms.size() == 2);
  CHECK(ms.lambda[0].real() == doctest::Approx(-1));
  CHECK(ms.lambda[1].real() == doctest::Approx(-2));
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(ms.X(k, k)) == doctest::Approx(1.0));
    CHECK(std::abs(ms.X(1 - k, k)) < 1e-15);
  }
  const auto P = participation_matrix(ms);
  CHECK((P - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("companion matrix of s^2 + 2s + 5") {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, -5, -2;
  const auto ms = eigen_decompose(A);
  // quadratic formula: (-2 +- sqrt(4 - 20)) / 2
  CHECK(ms.lambda[0].real() == doctest::Approx(-1));
  CHECK(std::abs(ms.lambda[0].imag()) == doctest::Approx(2));
  CHECK(ms.lambda[1] == std::conj(ms.lambda[0]));
}

TEST_CASE("ordering is by real part, then |Im|") {
  Eigen::MatrixXd A = Eigen::Vector4d(-3, -1, -2, -1.5).asDiagonal();
  const auto ms = eigen_decompose(A);
  for (int k = 1; k < ms.size(); ++k) CHECK(ms.lambda[k - 1].real() >= ms.lambda[k].real());
}

TEST_CASE("base case: 77 stable modes with small residuals") {
  const auto m = base_model();
  const auto ms = eigen_decompose(m);
  CHECK(ms.size() == 77);
  for (int k = 0; k < ms.size(); ++k) CHECK(ms.lambda[k].real() < 0.0);
  CHECK(eigen_residual(m.A_pu(), ms) < 1e-8);
  // biorthonormal: Y^T X = I
  CHECK((ms.Y.transpose() * ms.X - Eigen::MatrixXcd::Identity(77, 77)).cwiseAbs().maxCoeff() < 1e-8);
  // conjugate pairs
  for (int k = 0; k < ms.size(); ++k) {
    if (ms.lambda[k].imag() == 0.0) continue;
    double best = 1e300;
    for (int j = 0; j < ms.size(); ++j) best = std::min(best, std::abs(ms.lambda[j] - std::conj(ms.lambda[k])));
    CHECK(best < 1e-9 * std::abs(ms.lambda[k]));
  }
}

TEST_CASE("participation columns sum to one") {
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(10, 10);
  for (int i = 0; i < 100; ++i) A(i) = g(rng);
  const auto P = participation_matrix(eigen_decompose(A));
  for (int k = 0; k < 10; ++k) CHECK(std::abs(P.col(k).sum() - 1.0) < 1e-9);

  const auto m = base_model();
  const auto r = analyze_modes(m);
  for (int k = 0; k < r.modes.size(); ++k) {
    CHECK(std::abs(r.P.col(k).sum() - 1.0) < 1e-9);
    CHECK(std::abs(r.agg.col(k).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("display view scales each column's peak to one") {
  const auto r = analyze_modes(base_model());
  const auto D = participation_display(r.P);
  for (int k = 0; k < D.cols(); ++k) CHECK(D.col(k).maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("block-diagonal matrix has no cross-block participation") {
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(8, 8);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      A(i, j) = g(rng);
      A(4 + i, 4 + j) = g(rng);
    }
  const auto ms = eigen_decompose(A);
  const auto P = participation_matrix(ms);
  for (int k = 0; k < 8; ++k) {
    const double top = P.col(k).head(4).cwiseAbs().sum(), bottom = P.col(k).tail(4).cwiseAbs().sum();
    CHECK(std::min(top, bottom) < 1e-12);
  }
}

TEST_CASE("decoupled terminals: own-terminal aggregation, never inter-area") {
  const auto vs = testing::two_terminal(200.0);
  const auto m = decoupled(linearize(vs, compute_operating_point(vs)));
  const auto r = analyze_modes(m);
  for (int k = 0; k < r.modes.size(); ++k) {
    CHECK(r.classes[k].kind == ModeKind::Local);
    double mx = 0.0;
    for (int g = 0; g < r.agg.rows(); ++g) mx = std::max(mx, std::abs(r.agg(g, k)));
    CHECK(mx == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("participation is invariant under diagonal similarity") {
  const auto m = base_model();
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXd d(m.size());
  for (int i = 0; i < m.size(); ++i) d[i] = std::pow(10.0, u(rng));
  const Eigen::MatrixXd A = m.A_pu();
  const Eigen::MatrixXd B = d.cwiseInverse().asDiagonal() * A * d.asDiagonal();
  const auto ma = eigen_decompose(A), mb = eigen_decompose(B);
  const auto Pa = participation_matrix(ma), Pb = participation_matrix(mb);
  // pair modes by eigenvalue; repeated eigenvalues have no unique participation and are skipped
  double err = 0.0;
  for (int k = 0; k < ma.size(); ++k) {
    bool repeated = false;
    for (int i = 0; i < ma.size(); ++i)
      repeated |= i != k && std::abs(ma.lambda[i] - ma.lambda[k]) < 1e-6 * std::abs(ma.lambda[k]);
    if (repeated) continue;
    int j = 0;
    for (int i = 1; i < mb.size(); ++i)
      if (std::abs(mb.lambda[i] - ma.lambda[k]) < std::abs(mb.lambda[j] - ma.lambda[k])) j = i;
    err = std::max(err, (Pa.col(k) - Pb.col(j)).cwiseAbs().maxCoeff());
  }
  CHECK(err < 1e-7);
}

TEST_CASE("damping factor") {
  CHECK(damping_factor({-3, 4}) == doctest::Approx(0.6));
  CHECK(damping_factor({-1, 0}) == doctest::Approx(1.0));
  CHECK(damping_factor({2, 2}) == doctest::Approx(-std::sqrt(0.5)));
  CHECK_THROWS_AS(damping_factor({0, 0}), NumericalError);
}

TEST_CASE("dominance criteria") {
  CHECK_FALSE(is_dominant({-3, 4}));
  CHECK(is_dominant({-5, 75}));
  CHECK_FALSE(is_dominant({-250, 4000}));
  CHECK_FALSE(is_dominant({-0.1, 6})); // below 2 Hz
}

TEST_CASE("base case: six dominant modes, all local, one terminal each") {
  const auto r = analyze_modes(base_model());
  REQUIRE(r.dominant.size() == 6);
  for (int k : r.dominant) {
    CHECK(r.classes[k].kind == ModeKind::Local);
    CHECK(r.classes[k].dominant_terminals.size() <= 1);
    CHECK(r.modes.lambda[k].imag() > 0);
  }
}

TEST_CASE("classification follows the threshold rule") {
  const auto r = analyze_modes(base_model());
  const int N = r.index.n_terminals();
  for (int k = 0; k < r.modes.size(); ++k) {
    int above = 0;
    for (int n = 0; n < N; ++n) above += r.agg(n, k).real() >= 0.3;
    CHECK((r.classes[k].kind == ModeKind::InterArea) == (above >= 2));
  }
}
