#include "mtdc/params.hpp"

#include <algorithm>

namespace mtdc {

TerminalBases terminal_bases(const TerminalSpec& t, double f) {
  TerminalBases b;
  b.S = t.s_rated * 1e6;
  b.Vb = std::sqrt(2.0 / 3.0) * t.v_ac_base * 1e3;
  b.Ib = 2.0 * b.S / (3.0 * b.Vb);
  b.Vdcb = t.v_dc_base * 1e3;
  b.w0 = 2.0 * std::numbers::pi * f;
  return b;
}

Eigen::VectorXd state_bases(const ValidatedGridSpec& vs) {
  const int N = vs.n_terminals();
  Eigen::VectorXd b(kTerminalStates * N + vs.n_cables());
  for (int n = 0; n < N; ++n) {
    auto tb = terminal_bases(vs.terminal(n), vs.spec.system_frequency);
    double* z = b.data() + kTerminalStates * n;
    z[X1] = z[X2] = z[V_OD] = z[V_OQ] = tb.Vb;
    z[X3] = z[X4] = z[I_LD] = z[I_LQ] = z[I_OD] = z[I_OQ] = tb.Ib;
    z[GAMMA_LD] = z[GAMMA_LQ] = tb.Ib;
    z[GAMMA_P] = z[GAMMA_Q] = z[THETA] = 1.0;
    z[OMEGA] = tb.w0;
    z[V_DC] = z[X5] = tb.Vdcb;
  }
  auto sb = terminal_bases(vs.terminal(vs.slack), vs.spec.system_frequency);
  for (int k = 0; k < vs.n_cables(); ++k) b[kTerminalStates * N + k] = sb.S / sb.Vdcb;
  return b;
}

Eigen::VectorXd input_vector(const ValidatedGridSpec& vs) {
  const int N = vs.n_terminals();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(kTerminalInputs * N);
  for (int n = 0; n < N; ++n) {
    const auto& t = vs.terminal(n);
    u[kTerminalInputs * n + P_REF] = t.p_ref * 1e6;
    u[kTerminalInputs * n + V_DC_REF] = t.v_dc_ref.value_or(0.0) * 1e3;
    u[kTerminalInputs * n + Q_REF] = t.q_ref * 1e6;
  }
  return u;
}

StateIndex make_state_index(const ValidatedGridSpec& vs) {
  std::vector<std::string> t, c;
  for (const auto& x : vs.spec.terminals) t.push_back(x.id);
  for (const auto& x : vs.spec.cables) c.push_back(x.id);
  return StateIndex(t, c);
}

bool differentiable_parameter(const ParameterRef& p) {
  static const std::vector<std::string> names = {
      "r_g",   "l_g",   "v_grid_mag", "r_c",     "l_c",   "c_f",   "c_vsc", "k_p_i", "k_i_i",
      "k_p_pll", "k_i_pll", "k_p_P", "k_i_P",  "k_p_Q", "k_i_Q", "k_p_dc", "k_i_dc", "t_mvd",
      "t_mvq", "t_mid", "t_miq",      "t_vdc"};
  if (p.owner == "dc") return true;
  return std::find(names.begin(), names.end(), p.name) != names.end();
}

} // namespace mtdc
