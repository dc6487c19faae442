#include "mtdc/linearization.hpp"
#include "mtdc/errors.hpp"
#include "mtdc/model.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace mtdc {

Eigen::MatrixXd LinearModel::A_pu() const {
  return x_base.cwiseInverse().asDiagonal() * A * x_base.asDiagonal();
}

Eigen::VectorXd nonlinear_residual(const ValidatedGridSpec& vs, const std::vector<double>& phi,
                                   const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  auto sp = build_params<double>(vs, phi);
  if (x.size() != sp.n_states() || u.size() != kTerminalInputs * vs.n_terminals())
    throw NumericalError("state or input vector has the wrong dimension");
  Eigen::VectorXd dx;
  system_rhs<double>(sp, x, u, dx);
  return dx;
}

TerminalBlock build_terminal_block(const ValidatedGridSpec& vs, int terminal, const OperatingPoint& op) {
  auto sp = build_params<double>(vs, op.phi);
  TerminalJac<double> J;
  terminal_jacobian(sp.term[terminal], op.x.data() + kTerminalStates * terminal,
                    op.u.data() + kTerminalInputs * terminal, J);
  TerminalBlock b;
  b.A = J.leftCols<kTerminalStates>();
  b.B = J.middleCols<kTerminalInputs>(kTerminalStates);
  b.E = J.col(kColInj);
  return b;
}

DcNetworkBlock build_dc_network_block(const ValidatedGridSpec& vs, const OperatingPoint& op) {
  auto sp = build_params<double>(vs, op.phi);
  const int N = vs.n_terminals(), M = vs.n_cables();
  DcNetworkBlock d;
  d.F = Eigen::MatrixXd::Zero(M, N);
  d.G = Eigen::MatrixXd::Zero(N, M);
  d.R = Eigen::MatrixXd::Zero(M, M);
  d.self = Eigen::VectorXd::Zero(N);
  for (int k = 0; k < M; ++k) {
    const auto& c = sp.cab[k];
    d.F(k, c.from) = 1.0 / c.L;
    d.F(k, c.to) = -1.0 / c.L;
    d.R(k, k) = -c.R / c.L;
    d.G(c.from, k) = -1.0 / sp.term[c.from].Ceq;
    d.G(c.to, k) = 1.0 / sp.term[c.to].Ceq;
  }
  for (int n = 0; n < N; ++n) {
    const double v = op.x[kTerminalStates * n + V_DC];
    const auto s = terminal_signals(sp.term[n], op.x.data() + kTerminalStates * n, op.u.data() + kTerminalInputs * n);
    d.self[n] = -s.p_dc / (sp.term[n].Ceq * v * v);
  }
  return d;
}

LinearModel augment(const ValidatedGridSpec& vs, const std::vector<TerminalBlock>& blocks, const DcNetworkBlock& dc,
                    const StateIndex& index, const OperatingPoint& op) {
  const int N = vs.n_terminals(), M = vs.n_cables();
  if (static_cast<int>(blocks.size()) != N || index.n_terminals() != N || index.n_cables() != M ||
      dc.F.rows() != M || dc.F.cols() != N || dc.G.rows() != N || dc.G.cols() != M)
    throw NumericalError("augment: block dimensions do not match the state index");
  const int n = index.size();
  LinearModel m;
  m.A = Eigen::MatrixXd::Zero(n, n);
  m.B = Eigen::MatrixXd::Zero(n, kTerminalInputs * N);
  for (int t = 0; t < N; ++t) {
    const int o = index.terminal_state(t, 0);
    m.A.block<kTerminalStates, kTerminalStates>(o, o) = blocks[t].A;
    m.B.block<kTerminalStates, kTerminalInputs>(o, kTerminalInputs * t) = blocks[t].B;
    // E maps the net injected current; G distributes it over the node's cables with the C_eq scaling already applied
    for (int k = 0; k < M; ++k)
      if (dc.G(t, k) != 0.0) m.A(o + V_DC, index.cable_state(k)) = dc.G(t, k);
  }
  for (int k = 0; k < M; ++k) {
    for (int t = 0; t < N; ++t)
      if (dc.F(k, t) != 0.0) m.A(index.cable_state(k), index.terminal_state(t, V_DC)) = dc.F(k, t);
    m.A(index.cable_state(k), index.cable_state(k)) = dc.R(k, k);
  }
  m.index = index;
  m.x_base = state_bases(vs);
  m.x0 = op.x;
  m.u0 = op.u;
  m.phi = op.phi;
  m.op = op;
  for (const auto& t : vs.spec.terminals)
    for (const char* name : kTerminalInputNames) m.inputs.push_back(t.id + "." + name);
  return m;
}

LinearModel linearize(const ValidatedGridSpec& vs, const OperatingPoint& op, bool parallel) {
  const int N = vs.n_terminals();
  std::vector<TerminalBlock> blocks(N);
#pragma omp parallel for schedule(static) if (parallel)
  for (int t = 0; t < N; ++t) blocks[t] = build_terminal_block(vs, t, op);
  return augment(vs, blocks, build_dc_network_block(vs, op), make_state_index(vs), op);
}

namespace {

double step_for(double x, double rel) {
  double h = rel * std::max(1.0, std::abs(x));
  if (!(h > 0) || !std::isfinite(h)) throw NumericalError("numeric_jacobian: step must be positive");
  return h;
}

void jacobian_column(const VectorField& f, const Eigen::VectorXd& x0, double rel, int j, Eigen::MatrixXd& J) {
  const double h = step_for(x0[j], rel);
  Eigen::VectorXd xp = x0, xm = x0;
  xp[j] += h;
  xm[j] -= h;
  J.col(j) = (f(xp) - f(xm)) / (xp[j] - xm[j]);
}

} // namespace

Eigen::MatrixXd numeric_jacobian(const VectorField& f, const Eigen::VectorXd& x0, double rel_step) {
  if (!(rel_step > 0)) throw NumericalError("numeric_jacobian: step must be positive");
  const int n = static_cast<int>(x0.size());
  Eigen::MatrixXd J(f(x0).size(), n);
  for (int j = 0; j < n; ++j) jacobian_column(f, x0, rel_step, j, J);
  return J;
}

Eigen::MatrixXd numeric_jacobian_parallel(const VectorField& f, const Eigen::VectorXd& x0, double rel_step) {
  if (!(rel_step > 0)) throw NumericalError("numeric_jacobian: step must be positive");
  const int n = static_cast<int>(x0.size());
  Eigen::MatrixXd J(f(x0).size(), n);
  std::string err;
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < n; ++j) {
    try {
      jacobian_column(f, x0, rel_step, j, J);
    } catch (const std::exception& e) {
#pragma omp critical
      err = e.what();
    }
  }
  if (!err.empty()) throw NumericalError(err);
  return J;
}

Eigen::MatrixXd numeric_jacobian(const ValidatedGridSpec& vs, const OperatingPoint& op, double rel_step,
                                 bool parallel) {
  // differentiate in per-unit coordinates so the step is relative to each state's base
  auto sp = build_params<double>(vs, op.phi);
  const Eigen::VectorXd D = state_bases(vs);
  VectorField f = [&sp, &op, &D](const Eigen::VectorXd& xi) {
    Eigen::VectorXd dx;
    system_rhs<double>(sp, Eigen::VectorXd(xi.cwiseProduct(D)), op.u, dx);
    return Eigen::VectorXd(dx.cwiseQuotient(D));
  };
  Eigen::VectorXd xi0 = op.x.cwiseQuotient(D);
  Eigen::MatrixXd J = parallel ? numeric_jacobian_parallel(f, xi0, rel_step) : numeric_jacobian(f, xi0, rel_step);
  return D.asDiagonal() * J * D.cwiseInverse().asDiagonal();
}

double scaled_max_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& x_base) {
  Eigen::MatrixXd Ap = x_base.cwiseInverse().asDiagonal() * A * x_base.asDiagonal();
  Eigen::MatrixXd Bp = x_base.cwiseInverse().asDiagonal() * B * x_base.asDiagonal();
  return ((Ap - Bp).array().abs() / Ap.array().abs().max(1.0)).maxCoeff();
}

std::string matrix_csv(const Eigen::MatrixXd& A, const StateIndex& index) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "state";
  for (int j = 0; j < A.cols(); ++j) os << ',' << index.label(j);
  os << '\n';
  for (int i = 0; i < A.rows(); ++i) {
    os << index.label(i);
    for (int j = 0; j < A.cols(); ++j) os << ',' << A(i, j);
    os << '\n';
  }
  return os.str();
}

} // namespace mtdc
