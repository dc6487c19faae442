#include "mtdc/operating_point.hpp"
#include "mtdc/errors.hpp"
#include "mtdc/model.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

namespace mtdc {

namespace {

Eigen::MatrixXd conductance_matrix(const ValidatedGridSpec& vs) {
  const int N = vs.n_terminals();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k < vs.n_cables(); ++k) {
    const auto& c = vs.spec.cables[k];
    double y = 1.0 / (c.r_per_km * c.length);
    int a = vs.cable_from[k], b = vs.cable_to[k];
    G(a, a) += y;
    G(b, b) += y;
    G(a, b) -= y;
    G(b, a) -= y;
  }
  return G;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

} // namespace

DcPowerFlow solve_dc_power_flow(const ValidatedGridSpec& vs, const std::vector<double>& p_inj, const SolverOptions& opt) {
  const int N = vs.n_terminals();
  const int s = vs.slack;
  const auto& slack = vs.terminal(s);
  const double vref = *slack.v_dc_ref * 1e3;
  const double ibase = slack.s_rated * 1e6 / (slack.v_dc_base * 1e3);
  Eigen::MatrixXd G = conductance_matrix(vs);

  std::vector<int> idx;
  for (int n = 0; n < N; ++n)
    if (n != s) idx.push_back(n);
  const int m = static_cast<int>(idx.size());

  Eigen::VectorXd V = Eigen::VectorXd::Constant(N, vref);
  DcPowerFlow out;
  double res = 0.0;
  int it = 0;
  auto residual = [&](Eigen::VectorXd& r) {
    Eigen::VectorXd I = G * V;
    for (int a = 0; a < m; ++a) r[a] = p_inj[idx[a]] / V[idx[a]] - I[idx[a]];
    return r.cwiseAbs().maxCoeff() / ibase;
  };
  Eigen::VectorXd r(m);
  for (it = 0; it <= opt.max_iter; ++it) {
    res = m ? residual(r) : 0.0;
    if (res < opt.tol || it == opt.max_iter) break;
    Eigen::MatrixXd J(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        J(a, b) = -G(idx[a], idx[b]) - (a == b ? p_inj[idx[a]] / (V[idx[a]] * V[idx[a]]) : 0.0);
    Eigen::VectorXd dV = J.partialPivLu().solve(-r);
    for (int a = 0; a < m; ++a) V[idx[a]] += dV[a];
    if (!V.allFinite() || V.minCoeff() <= 0)
      throw InfeasibleError("DC power flow diverged (non-positive node voltage)", res);
  }
  if (res >= opt.tol)
    throw InfeasibleError("DC power flow did not converge in " + std::to_string(opt.max_iter) +
                              " iterations, residual " + num(res) + " pu",
                          res);
  // one polishing step keeps the residual near round-off for the equilibrium check
  if (m) {
    Eigen::MatrixXd J(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        J(a, b) = -G(idx[a], idx[b]) - (a == b ? p_inj[idx[a]] / (V[idx[a]] * V[idx[a]]) : 0.0);
    Eigen::VectorXd dV = J.partialPivLu().solve(-r);
    for (int a = 0; a < m; ++a) V[idx[a]] += dV[a];
    res = residual(r);
  }

  out.iterations = it;
  out.residual_pu = res;
  out.v_dc.assign(V.data(), V.data() + N);
  Eigen::VectorXd I = G * V;
  out.p_dc.resize(N);
  for (int n = 0; n < N; ++n) out.p_dc[n] = V[n] * I[n];
  for (int k = 0; k < vs.n_cables(); ++k) {
    const auto& c = vs.spec.cables[k];
    out.i_dc.push_back((V[vs.cable_from[k]] - V[vs.cable_to[k]]) / (c.r_per_km * c.length));
  }
  return out;
}

DcPowerFlow solve_dc_power_flow(const ValidatedGridSpec& vs, const SolverOptions& opt) {
  std::vector<double> p(vs.n_terminals());
  for (int n = 0; n < vs.n_terminals(); ++n) p[n] = vs.terminal(n).p_ref * 1e6;
  return solve_dc_power_flow(vs, p, opt);
}

TerminalOperatingPoint solve_terminal_ac_side(const TerminalSpec& t, double f, double p_pcc, double q_ref) {
  const auto b = terminal_bases(t, f);
  const double w0 = b.w0;
  const cplx Zg(t.r_g.value_or(0.0), w0 * t.l_g.value_or(0.0));
  const double Vg = t.v_grid_mag * b.Vb;
  // i_o = k / V with V the real PCC voltage; |V - Zg i_o| = Vg gives a quadratic in V^2
  const cplx k = cplx(-p_pcc, -q_ref) / 1.5;
  const cplx zk = Zg * k;
  const double bq = 2.0 * zk.real() + Vg * Vg;
  const double disc = bq * bq - 4.0 * std::norm(zk);
  if (disc < 0 || bq <= 0)
    throw InfeasibleError("terminal " + t.id + ": P = " + num(p_pcc / b.S) + " pu, Q = " + num(q_ref / b.S) +
                              " pu exceeds the transfer capability of the AC grid",
                          -disc / (Vg * Vg * Vg * Vg));
  const double w = 0.5 * (bq + std::sqrt(disc));
  TerminalOperatingPoint op;
  const double V = std::sqrt(w);
  op.v_o = V;
  op.i_o = k / V;
  op.v_g = op.v_o - Zg * op.i_o;
  op.i_l = op.i_o + cplx(0, w0 * t.c_f) * op.v_o;
  op.v_c = op.v_o + cplx(t.r_c, w0 * t.l_c) * op.i_l;
  op.phi = std::arg(op.v_g);
  op.delta = -op.phi;
  op.p_pcc = p_pcc;
  op.q_pcc = q_ref;
  op.p_dc = -1.5 * (op.v_c * std::conj(op.i_l)).real();
  return op;
}

void set_controller_states(const TerminalSpec& t, double f, TerminalOperatingPoint& op) {
  const auto b = terminal_bases(t, f);
  const auto& g = t.gains;
  const bool dvc = t.control_mode == ControlMode::DcVoltageQ;
  const double ki = dvc ? g.k_i_dc : g.k_i_P;
  if (!(ki > 0) || !(g.k_i_Q > 0) || !(g.k_i_i > 0))
    throw NumericalError("terminal " + t.id + ": zero integral gain, equilibrium controller states undefined");
  const double V = op.v_o.real();
  auto& z = op.z;
  z.setZero();
  z[X1] = V;
  z[X2] = op.v_o.imag();
  z[X3] = op.i_o.real();
  z[X4] = op.i_o.imag();
  z[GAMMA_P] = -op.i_l.real() / (b.Ib * ki);
  z[GAMMA_Q] = -op.i_l.imag() / (b.Ib * g.k_i_Q);
  z[GAMMA_LD] = (op.v_c.real() - V + b.w0 * t.l_c * op.i_l.imag()) / g.k_i_i;
  z[GAMMA_LQ] = (op.v_c.imag() - op.v_o.imag() - b.w0 * t.l_c * op.i_l.real()) / g.k_i_i;
  z[THETA] = 0.0;
  z[OMEGA] = b.w0;
  z[I_LD] = op.i_l.real();
  z[I_LQ] = op.i_l.imag();
  z[V_OD] = V;
  z[V_OQ] = op.v_o.imag();
  z[I_OD] = op.i_o.real();
  z[I_OQ] = op.i_o.imag();
  z[V_DC] = op.v_dc;
  z[X5] = op.v_dc;
}

TerminalOperatingPoint solve_terminal_steady_state(const TerminalSpec& t, double p_dc, double v_dc, double q_ref,
                                                   double f, const SolverOptions& opt) {
  const double S = t.s_rated * 1e6;
  auto fn = [&](double p) { return solve_terminal_ac_side(t, f, p, q_ref).p_dc - p_dc; };
  // p_dc = p_pcc - reactor loss, so the root lies at or above p_dc
  double lo = p_dc, hi = p_dc + 0.01 * S;
  double flo = fn(lo), fhi = fn(hi);
  int grow = 0;
  while (fhi < 0 && grow < 20) {
    lo = hi;
    flo = fhi;
    hi += 0.05 * S * (1 << std::min(grow, 4));
    fhi = fn(hi);
    ++grow;
  }
  double p = lo;
  if (flo != 0.0) {
    if (fhi < 0) throw InfeasibleError("terminal " + t.id + ": no AC operating point delivers the requested DC power", -fhi / S);
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(opt.max_iter);
    auto r = boost::math::tools::toms748_solve(fn, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
    p = 0.5 * (r.first + r.second);
  }
  auto op = solve_terminal_ac_side(t, f, p, q_ref);
  op.v_dc = v_dc;
  set_controller_states(t, f, op);
  return op;
}

OperatingPoint assemble_operating_point(const ValidatedGridSpec& vs, const DcPowerFlow& dc,
                                        const std::vector<TerminalOperatingPoint>& ac, const SolverOptions& opt) {
  const int N = vs.n_terminals();
  OperatingPoint op;
  op.terminals = ac;
  op.dc = dc;
  op.x.resize(kTerminalStates * N + vs.n_cables());
  for (int n = 0; n < N; ++n) {
    op.x.segment<kTerminalStates>(kTerminalStates * n) = ac[n].z;
    op.phi.push_back(ac[n].phi);
  }
  for (int k = 0; k < vs.n_cables(); ++k) op.x[kTerminalStates * N + k] = dc.i_dc[k];
  op.u = input_vector(vs);
  op.residual_pu = residual_norm_pu(vs, op);
  if (!(op.residual_pu < opt.residual_limit))
    throw NumericalError("operating point residual " + num(op.residual_pu) + " pu/s exceeds " + num(opt.residual_limit));
  return op;
}

OperatingPoint compute_operating_point(const ValidatedGridSpec& vs, const SolverOptions& opt) {
  const int N = vs.n_terminals();
  const double f = vs.spec.system_frequency;
  std::vector<TerminalOperatingPoint> ac(N);
  std::vector<double> p_inj(N, 0.0);
  for (int n = 0; n < N; ++n) {
    if (n == vs.slack) continue;
    const auto& t = vs.terminal(n);
    ac[n] = solve_terminal_ac_side(t, f, t.p_ref * 1e6, t.q_ref * 1e6);
    p_inj[n] = ac[n].p_dc;
  }
  auto dc = solve_dc_power_flow(vs, p_inj, opt);
  for (int n = 0; n < N; ++n) {
    const auto& t = vs.terminal(n);
    if (n == vs.slack) {
      ac[n] = solve_terminal_steady_state(t, dc.p_dc[n], dc.v_dc[n], t.q_ref * 1e6, f, opt);
    } else {
      ac[n].v_dc = dc.v_dc[n];
      set_controller_states(t, f, ac[n]);
    }
  }
  return assemble_operating_point(vs, dc, ac, opt);
}

OperatingPoint rotate_to_source_angles(const ValidatedGridSpec& vs, OperatingPoint op, const std::vector<double>& phi) {
  const int N = vs.n_terminals();
  if (static_cast<int>(phi.size()) != N || static_cast<int>(op.phi.size()) != N)
    throw NumericalError("rotate_to_source_angles: one angle per terminal expected");
  for (int n = 0; n < N; ++n) {
    const double a = phi[n] - op.phi[n];
    const cplx r = std::polar(1.0, a);
    auto& t = op.terminals[n];
    for (cplx* v : {&t.v_o, &t.i_o, &t.i_l, &t.v_c, &t.v_g}) *v *= r;
    t.phi = phi[n];
    auto turn = [&](int d, int q) {
      const cplx v = cplx(t.z[d], t.z[q]) * r;
      t.z[d] = v.real();
      t.z[q] = v.imag();
    };
    turn(I_LD, I_LQ);
    turn(V_OD, V_OQ);
    turn(I_OD, I_OQ);
    t.z[THETA] += a;
    op.x.segment<kTerminalStates>(kTerminalStates * n) = t.z;
    op.phi[n] = phi[n];
  }
  op.residual_pu = residual_norm_pu(vs, op);
  return op;
}

double residual_norm_pu(const ValidatedGridSpec& vs, const OperatingPoint& op) {
  auto sp = build_params<double>(vs, op.phi);
  Eigen::VectorXd dx;
  system_rhs<double>(sp, op.x, op.u, dx);
  return dx.cwiseQuotient(state_bases(vs)).cwiseAbs().maxCoeff();
}

void check_operating_point(const ValidatedGridSpec& vs, const OperatingPoint& op, double limit) {
  double r = residual_norm_pu(vs, op);
  if (!(r < limit)) throw NumericalError("operating point residual " + num(r) + " pu/s exceeds " + num(limit));
}

} // namespace mtdc
