#pragma once
// Averaged nonlinear model of the VSC-HVDC grid and its closed-form Jacobian.
// Electrical states of a terminal are in a frame rotating at w0; controllers see
// them rotated by theta_pll into the PLL frame.
#include "mtdc/errors.hpp"
#include "mtdc/params.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace mtdc {

inline double value_of(double v) { return v; }
template <class T>
double value_of(const T& v) {
  return v.value();
}

// Terminal-level quantities derived from the state, shared by the simulator channels.
template <class T>
struct TerminalSignals {
  T vpd, vpq;   // PCC voltage, PLL frame
  T vcd, vcq;   // converter voltage, grid frame
  T idr, iqr;   // current references, PLL frame
  T p_meas, q_meas;
  T p_dc;
};

template <class T>
TerminalSignals<T> terminal_signals(const TerminalParams<T>& p, const T* z, const T* u) {
  using std::cos;
  using std::sin;
  TerminalSignals<T> s;
  const T c = cos(z[THETA]), sn = sin(z[THETA]);
  s.vpd = c * z[V_OD] + sn * z[V_OQ];
  s.vpq = -sn * z[V_OD] + c * z[V_OQ];
  const T ipd = c * z[I_LD] + sn * z[I_LQ];
  const T ipq = -sn * z[I_LD] + c * z[I_LQ];

  s.p_meas = -1.5 * (z[X1] * z[X3] + z[X2] * z[X4]) / p.S;
  s.q_meas = 1.5 * (z[X2] * z[X3] - z[X1] * z[X4]) / p.S;
  T e = p.dvc ? T((u[V_DC_REF] - z[X5]) / p.Vdcb) : T(u[P_REF] / p.S - s.p_meas);
  T kp = p.dvc ? p.kpdc : p.kpP;
  T ki = p.dvc ? p.kidc : p.kiP;
  s.idr = -p.Ib * (kp * e + ki * z[GAMMA_P]);
  T eq = u[Q_REF] / p.S - s.q_meas;
  s.iqr = -p.Ib * (p.kpQ * eq + p.kiQ * z[GAMMA_Q]);

  T ud = p.kpi * (s.idr - ipd) + p.kii * z[GAMMA_LD] + z[X1] - z[OMEGA] * p.Lc * ipq;
  T uq = p.kpi * (s.iqr - ipq) + p.kii * z[GAMMA_LQ] + z[X2] + z[OMEGA] * p.Lc * ipd;
  if (!(value_of(z[X5]) > 0.0)) throw NumericalError("filtered DC voltage x5 <= 0: converter voltage undefined");
  T m = z[V_DC] / z[X5];
  T vpcd = m * ud, vpcq = m * uq;
  s.vcd = c * vpcd - sn * vpcq;
  s.vcq = sn * vpcd + c * vpcq;
  s.p_dc = -1.5 * (s.vcd * z[I_LD] + s.vcq * z[I_LQ]);
  return s;
}

// dz/dt for one terminal; inj is the net cable current flowing into its DC node.
template <class T>
void terminal_rhs(const TerminalParams<T>& p, const T* z, const T* u, const T& inj, T* dz) {
  using std::cos;
  using std::sin;
  const T c = cos(z[THETA]), sn = sin(z[THETA]);
  const double w0 = p.w0;
  auto s = terminal_signals(p, z, u);
  const T ipd = c * z[I_LD] + sn * z[I_LQ];
  const T ipq = -sn * z[I_LD] + c * z[I_LQ];
  const T iopd = c * z[I_OD] + sn * z[I_OQ];
  const T iopq = -sn * z[I_OD] + c * z[I_OQ];

  dz[X1] = (s.vpd - z[X1]) / p.Tmvd;
  dz[X2] = (s.vpq - z[X2]) / p.Tmvq;
  dz[X3] = (iopd - z[X3]) / p.Tmid;
  dz[X4] = (iopq - z[X4]) / p.Tmiq;
  dz[GAMMA_P] = p.dvc ? T((u[V_DC_REF] - z[X5]) / p.Vdcb) : T(u[P_REF] / p.S - s.p_meas);
  dz[GAMMA_Q] = u[Q_REF] / p.S - s.q_meas;
  dz[GAMMA_LD] = s.idr - ipd;
  dz[GAMMA_LQ] = s.iqr - ipq;
  dz[THETA] = z[OMEGA] - w0 + p.kp_pll * s.vpq / p.Vb;
  dz[OMEGA] = p.ki_pll * s.vpq / p.Vb;
  dz[I_LD] = (-p.Rc * z[I_LD] + w0 * p.Lc * z[I_LQ] + s.vcd - z[V_OD]) / p.Lc;
  dz[I_LQ] = (-p.Rc * z[I_LQ] - w0 * p.Lc * z[I_LD] + s.vcq - z[V_OQ]) / p.Lc;
  dz[V_OD] = (z[I_LD] - z[I_OD]) / p.Cf + w0 * z[V_OQ];
  dz[V_OQ] = (z[I_LQ] - z[I_OQ]) / p.Cf - w0 * z[V_OD];
  const T vgd = p.Vg * cos(p.phi), vgq = p.Vg * sin(p.phi);
  dz[I_OD] = (-p.Rg * z[I_OD] + w0 * p.Lg * z[I_OQ] + z[V_OD] - vgd) / p.Lg;
  dz[I_OQ] = (-p.Rg * z[I_OQ] - w0 * p.Lg * z[I_OD] + z[V_OQ] - vgq) / p.Lg;
  dz[V_DC] = (s.p_dc / z[V_DC] + inj) / p.Ceq;
  dz[X5] = (z[V_DC] - z[X5]) / p.Tvdc;
}

template <class T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
void system_rhs(const SystemParams<T>& sp, const VecX<T>& x, const VecX<T>& u, VecX<T>& dx) {
  const int N = static_cast<int>(sp.term.size());
  const int base = kTerminalStates * N;
  dx.resize(x.size());
  std::vector<T> inj(N, T(0));
  for (size_t k = 0; k < sp.cab.size(); ++k) {
    const auto& c = sp.cab[k];
    const T& i = x[base + k];
    dx[base + k] = (x[kTerminalStates * c.from + V_DC] - x[kTerminalStates * c.to + V_DC] - c.R * i) / c.L;
    inj[c.from] -= i;
    inj[c.to] += i;
  }
  for (int n = 0; n < N; ++n)
    terminal_rhs(sp.term[n], x.data() + kTerminalStates * n, u.data() + kTerminalInputs * n, inj[n],
                 dx.data() + kTerminalStates * n);
}

// Closed-form partials of one terminal's 18 derivatives. Columns: 18 states,
// then P_ref, V_dc_ref, Q_ref, then the net injected cable current.
constexpr int kTerminalJacCols = kTerminalStates + kTerminalInputs + 1;
constexpr int kColInj = kTerminalStates + kTerminalInputs;

template <class T>
using TerminalJac = Eigen::Matrix<T, kTerminalStates, kTerminalJacCols>;

template <class T>
void terminal_jacobian(const TerminalParams<T>& p, const T* z, const T* u, TerminalJac<T>& J) {
  using std::cos;
  using std::sin;
  using G = Eigen::Matrix<T, 1, kTerminalJacCols>;
  auto e = [](int k) {
    G g = G::Zero();
    g(k) = T(1);
    return g;
  };
  const int PR = kTerminalStates + P_REF, VR = kTerminalStates + V_DC_REF, QR = kTerminalStates + Q_REF;
  const double w0 = p.w0;
  const T c = cos(z[THETA]), sn = sin(z[THETA]);

  // rotation into the PLL frame: d/dtheta of (a_d, a_q)^pll = (a_q^pll, -a_d^pll)
  const T vpd = c * z[V_OD] + sn * z[V_OQ], vpq = -sn * z[V_OD] + c * z[V_OQ];
  const T ipd = c * z[I_LD] + sn * z[I_LQ], ipq = -sn * z[I_LD] + c * z[I_LQ];
  const T iopd = c * z[I_OD] + sn * z[I_OQ], iopq = -sn * z[I_OD] + c * z[I_OQ];
  const G g_vpd = c * e(V_OD) + sn * e(V_OQ) + vpq * e(THETA);
  const G g_vpq = -sn * e(V_OD) + c * e(V_OQ) - vpd * e(THETA);
  const G g_ipd = c * e(I_LD) + sn * e(I_LQ) + ipq * e(THETA);
  const G g_ipq = -sn * e(I_LD) + c * e(I_LQ) - ipd * e(THETA);
  const G g_iopd = c * e(I_OD) + sn * e(I_OQ) + iopq * e(THETA);
  const G g_iopq = -sn * e(I_OD) + c * e(I_OQ) - iopd * e(THETA);

  J.row(X1) = (g_vpd - e(X1)) / p.Tmvd;
  J.row(X2) = (g_vpq - e(X2)) / p.Tmvq;
  J.row(X3) = (g_iopd - e(X3)) / p.Tmid;
  J.row(X4) = (g_iopq - e(X4)) / p.Tmiq;

  // outer loops
  G g_e;
  T kp, ki;
  if (p.dvc) {
    g_e = (e(VR) - e(X5)) / p.Vdcb;
    kp = p.kpdc;
    ki = p.kidc;
  } else {
    g_e = e(PR) / p.S + 1.5 * (z[X3] * e(X1) + z[X1] * e(X3) + z[X4] * e(X2) + z[X2] * e(X4)) / p.S;
    kp = p.kpP;
    ki = p.kiP;
  }
  const G g_eq = e(QR) / p.S - 1.5 * (z[X3] * e(X2) + z[X2] * e(X3) - z[X4] * e(X1) - z[X1] * e(X4)) / p.S;
  const G g_idr = -p.Ib * (kp * g_e + ki * e(GAMMA_P));
  const G g_iqr = -p.Ib * (p.kpQ * g_eq + p.kiQ * e(GAMMA_Q));
  J.row(GAMMA_P) = g_e;
  J.row(GAMMA_Q) = g_eq;
  J.row(GAMMA_LD) = g_idr - g_ipd;
  J.row(GAMMA_LQ) = g_iqr - g_ipq;

  J.row(THETA) = e(OMEGA) + p.kp_pll / p.Vb * g_vpq;
  J.row(OMEGA) = p.ki_pll / p.Vb * g_vpq;

  // inner loop and converter voltage
  const auto sig = terminal_signals(p, z, u);
  const T ud = p.kpi * (sig.idr - ipd) + p.kii * z[GAMMA_LD] + z[X1] - z[OMEGA] * p.Lc * ipq;
  const T uq = p.kpi * (sig.iqr - ipq) + p.kii * z[GAMMA_LQ] + z[X2] + z[OMEGA] * p.Lc * ipd;
  const G g_ud = p.kpi * (g_idr - g_ipd) + p.kii * e(GAMMA_LD) + e(X1) - p.Lc * (ipq * e(OMEGA) + z[OMEGA] * g_ipq);
  const G g_uq = p.kpi * (g_iqr - g_ipq) + p.kii * e(GAMMA_LQ) + e(X2) + p.Lc * (ipd * e(OMEGA) + z[OMEGA] * g_ipd);
  const T m = z[V_DC] / z[X5];
  const G g_m = e(V_DC) / z[X5] - z[V_DC] / (z[X5] * z[X5]) * e(X5);
  const G g_vpcd = ud * g_m + m * g_ud;
  const G g_vpcq = uq * g_m + m * g_uq;
  const T vcd = sig.vcd, vcq = sig.vcq;
  const G g_vcd = c * g_vpcd - sn * g_vpcq - vcq * e(THETA);
  const G g_vcq = sn * g_vpcd + c * g_vpcq + vcd * e(THETA);

  // AC circuit
  J.row(I_LD) = (-p.Rc * e(I_LD) + w0 * p.Lc * e(I_LQ) + g_vcd - e(V_OD)) / p.Lc;
  J.row(I_LQ) = (-p.Rc * e(I_LQ) - w0 * p.Lc * e(I_LD) + g_vcq - e(V_OQ)) / p.Lc;
  J.row(V_OD) = (e(I_LD) - e(I_OD)) / p.Cf + w0 * e(V_OQ);
  J.row(V_OQ) = (e(I_LQ) - e(I_OQ)) / p.Cf - w0 * e(V_OD);
  J.row(I_OD) = (-p.Rg * e(I_OD) + w0 * p.Lg * e(I_OQ) + e(V_OD)) / p.Lg;
  J.row(I_OQ) = (-p.Rg * e(I_OQ) - w0 * p.Lg * e(I_OD) + e(V_OQ)) / p.Lg;

  // DC node
  const G g_pdc = -1.5 * (z[I_LD] * g_vcd + vcd * e(I_LD) + z[I_LQ] * g_vcq + vcq * e(I_LQ));
  J.row(V_DC) = (g_pdc / z[V_DC] - sig.p_dc / (z[V_DC] * z[V_DC]) * e(V_DC) + e(kColInj)) / p.Ceq;
  J.row(X5) = (e(V_DC) - e(X5)) / p.Tvdc;
}

// State matrix A and input matrix B (columns ordered per terminal: P_ref, V_dc_ref, Q_ref).
template <class T>
void system_jacobian(const SystemParams<T>& sp, const VecX<T>& x, const VecX<T>& u, MatX<T>& A, MatX<T>* B = nullptr) {
  const int N = static_cast<int>(sp.term.size());
  const int M = static_cast<int>(sp.cab.size());
  const int n = kTerminalStates * N + M;
  A.setZero(n, n);
  if (B) B->setZero(n, kTerminalInputs * N);
  TerminalJac<T> J;
  for (int t = 0; t < N; ++t) {
    const int o = kTerminalStates * t;
    terminal_jacobian(sp.term[t], x.data() + o, u.data() + kTerminalInputs * t, J);
    A.block(o, o, kTerminalStates, kTerminalStates) = J.leftCols(kTerminalStates);
    if (B) B->block(o, kTerminalInputs * t, kTerminalStates, kTerminalInputs) = J.middleCols(kTerminalStates, kTerminalInputs);
  }
  for (int k = 0; k < M; ++k) {
    const auto& c = sp.cab[k];
    const int ik = kTerminalStates * N + k;
    const int va = kTerminalStates * c.from + V_DC, vb = kTerminalStates * c.to + V_DC;
    A(ik, va) = T(1) / c.L;
    A(ik, vb) = -T(1) / c.L;
    A(ik, ik) = -c.R / c.L;
    A(va, ik) = -T(1) / sp.term[c.from].Ceq;
    A(vb, ik) = T(1) / sp.term[c.to].Ceq;
  }
}

} // namespace mtdc
