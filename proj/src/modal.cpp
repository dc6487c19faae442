#include "mtdc/modal.hpp"
#include "mtdc/errors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace mtdc {

double ModeSet::zeta(int k) const { return damping_factor(lambda[k]); }
double ModeSet::freq_hz(int k) const { return std::abs(lambda[k].imag()) / (2.0 * std::numbers::pi); }

double damping_factor(cplx lambda) {
  const double m = std::abs(lambda);
  if (m == 0.0) throw NumericalError("damping factor undefined for a zero eigenvalue");
  return -lambda.real() / m;
}

ModeSet eigen_decompose(const Eigen::MatrixXd& A) {
  if (!A.allFinite()) throw NumericalError("state matrix has non-finite entries");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigensolver failed (n = " << A.rows() << ", ||A||_F = " << A.norm() << ")";
    throw NumericalError(os.str());
  }
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXcd ev = es.eigenvalues();
  Eigen::MatrixXcd V = es.eigenvectors();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const cplx la = ev[a], lb = ev[b];
    if (la.real() != lb.real()) return la.real() > lb.real();
    if (std::abs(la.imag()) != std::abs(lb.imag())) return std::abs(la.imag()) < std::abs(lb.imag());
    return la.imag() > lb.imag();
  });
  // conjugate partners come out with bit-identical real parts, so the pair stays adjacent

  ModeSet m;
  m.lambda.resize(n);
  m.X.resize(n, n);
  for (int k = 0; k < n; ++k) {
    m.lambda[k] = ev[order[k]];
    Eigen::VectorXcd x = V.col(order[k]);
    Eigen::Index imax;
    x.cwiseAbs().maxCoeff(&imax);
    x *= std::conj(x[imax]) / std::abs(x[imax]);
    x /= x.norm();
    m.X.col(k) = x;
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m.X);
  Eigen::MatrixXcd Xi = lu.inverse();
  if (!Xi.allFinite()) throw NumericalError("eigenvector matrix is singular (defective state matrix)");
  m.Y = Xi.transpose();
  return m;
}

ModeSet eigen_decompose(const LinearModel& model) { return eigen_decompose(model.A_pu()); }

Eigen::MatrixXcd participation_matrix(const ModeSet& modes) { return modes.Y.cwiseProduct(modes.X); }

Eigen::MatrixXd participation_display(const Eigen::MatrixXcd& P) {
  Eigen::MatrixXd M = P.cwiseAbs();
  for (int k = 0; k < M.cols(); ++k) {
    double mx = M.col(k).maxCoeff();
    if (mx > 0) M.col(k) /= mx;
  }
  return M;
}

Eigen::MatrixXcd aggregate_by_terminal(const Eigen::MatrixXcd& P, const StateIndex& index) {
  const int N = index.n_terminals();
  Eigen::MatrixXcd agg = Eigen::MatrixXcd::Zero(N + 1, P.cols());
  for (int i = 0; i < P.rows(); ++i) agg.row(index.group_of(i)) += P.row(i);
  return agg;
}

namespace {

bool alike(double a, double b, double tol) {
  const double m = std::max(std::abs(a), std::abs(b));
  return m == 0.0 || std::abs(a - b) <= tol * m;
}

} // namespace

ModeClassification classify_mode(const Eigen::MatrixXcd& P, const Eigen::MatrixXcd& agg, const StateIndex& index,
                                 int k, double threshold, double tol) {
  const int N = index.n_terminals();
  ModeClassification c;
  for (int n = 0; n < N; ++n)
    if (agg(n, k).real() >= threshold) c.dominant_terminals.push_back(n);
  c.kind = c.dominant_terminals.size() >= 2 ? ModeKind::InterArea : ModeKind::Local;

  // nature from the terminals that carry the mode; fall back to the largest one
  std::vector<int> terms = c.dominant_terminals;
  if (terms.empty()) {
    Eigen::Index best;
    agg.col(k).head(N).real().maxCoeff(&best);
    terms.push_back(static_cast<int>(best));
  }
  double ctrl = 0.0, elec = 0.0;
  for (int n : terms)
    for (int s = 0; s < kTerminalStates; ++s) {
      double v = std::abs(P(index.terminal_state(n, s), k));
      (is_controller_state(s) ? ctrl : elec) += v;
    }
  c.nature = ctrl > elec ? ModeNature::Control : ModeNature::Electrical;

  const int lead = terms.front();
  auto p = [&](int s) { return std::abs(P(index.terminal_state(lead, s), k)); };
  c.lcm_condition = alike(p(GAMMA_P), p(OMEGA), tol) && alike(p(GAMMA_P), p(THETA), tol) &&
                    alike(p(GAMMA_Q), p(OMEGA), tol) && alike(p(GAMMA_Q), p(THETA), tol);
  if (c.dominant_terminals.size() >= 2) {
    c.icm_condition = true;
    for (size_t a = 0; a < c.dominant_terminals.size(); ++a)
      for (size_t b = a + 1; b < c.dominant_terminals.size(); ++b)
        c.icm_condition = c.icm_condition && alike(agg(c.dominant_terminals[a], k).real(),
                                                   agg(c.dominant_terminals[b], k).real(), tol);
  }
  const bool control = c.nature == ModeNature::Control;
  if (c.kind == ModeKind::Local) c.label = control ? "LCM" : "LEM";
  else c.label = control ? "ICM" : "IEM";
  return c;
}

std::vector<ModeClassification> classify_modes(const ModeSet& modes, const Eigen::MatrixXcd& agg,
                                               const Eigen::MatrixXcd& P, const StateIndex& index, double threshold,
                                               double tol) {
  std::vector<ModeClassification> out;
  out.reserve(modes.size());
  for (int k = 0; k < modes.size(); ++k) out.push_back(classify_mode(P, agg, index, k, threshold, tol));
  return out;
}

bool is_dominant(cplx lambda, const DominantCriteria& c) {
  if (lambda == cplx(0.0)) return false;
  const double f = std::abs(lambda.imag()) / (2.0 * std::numbers::pi);
  return damping_factor(lambda) < c.zeta_max && std::abs(lambda.real()) < c.re_max && f >= c.f_min;
}

std::vector<int> dominant_modes(const ModeSet& modes, const DominantCriteria& c) {
  std::vector<int> out;
  for (int k = 0; k < modes.size(); ++k)
    if (modes.lambda[k].imag() > 0 && is_dominant(modes.lambda[k], c)) out.push_back(k);
  return out;
}

double eigen_residual(const Eigen::MatrixXd& A, const ModeSet& modes) {
  const double na = A.norm();
  Eigen::MatrixXcd Ac = A.cast<cplx>();
  Eigen::MatrixXcd R = Ac * modes.X - modes.X * modes.lambda.asDiagonal();
  Eigen::MatrixXcd L = Ac.transpose() * modes.Y - modes.Y * modes.lambda.asDiagonal();
  double r = 0.0;
  for (int k = 0; k < modes.size(); ++k) {
    r = std::max(r, R.col(k).norm() / modes.X.col(k).norm());
    r = std::max(r, L.col(k).norm() / modes.Y.col(k).norm());
  }
  return na > 0 ? r / na : r;
}

ModalReport analyze_modes(const LinearModel& model, const DominantCriteria& c, double threshold, double tol) {
  ModalReport r;
  r.modes = eigen_decompose(model);
  r.P = participation_matrix(r.modes);
  r.agg = aggregate_by_terminal(r.P, model.index);
  r.classes = classify_modes(r.modes, r.agg, r.P, model.index, threshold, tol);
  r.dominant = dominant_modes(r.modes, c);
  r.index = model.index;
  return r;
}

const char* to_string(ModeKind k) { return k == ModeKind::Local ? "LOCAL" : "INTER_AREA"; }
const char* to_string(ModeNature n) { return n == ModeNature::Control ? "CONTROL" : "ELECTRICAL"; }

} // namespace mtdc
