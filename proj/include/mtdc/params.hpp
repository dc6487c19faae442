#pragma once
#include "mtdc/errors.hpp"
#include "mtdc/spec.hpp"
#include "mtdc/state_index.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace mtdc {

// SI parameters of one terminal. T is double or a forward-mode AD scalar.
template <class T>
struct TerminalParams {
  bool dvc = false;
  double w0 = 0.0;
  T S, Vb, Ib, Vdcb;
  T Rc, Lc, Cf, Rg, Lg, Vg, phi, Ceq;
  T kpi, kii, kp_pll, ki_pll, kpP, kiP, kpQ, kiQ, kpdc, kidc;
  T Tmvd, Tmvq, Tmid, Tmiq, Tvdc;
};

template <class T>
struct CableParams {
  int from = 0, to = 0;
  T R, L, C;
};

template <class T>
struct SystemParams {
  double w0 = 0.0;
  std::vector<TerminalParams<T>> term;
  std::vector<CableParams<T>> cab;
  int n_states() const { return kTerminalStates * static_cast<int>(term.size()) + static_cast<int>(cab.size()); }
};

// Per-unit bases of a terminal (SI).
struct TerminalBases {
  double S, Vb, Ib, Vdcb, w0;
};

TerminalBases terminal_bases(const TerminalSpec& t, double f);

// Per-state base used for per-unit reporting of states and derivatives.
Eigen::VectorXd state_bases(const ValidatedGridSpec& vs);

// Setpoint vector u in SI: per terminal (P_ref [W], V_dc_ref [V], Q_ref [VAr]).
Eigen::VectorXd input_vector(const ValidatedGridSpec& vs);

StateIndex make_state_index(const ValidatedGridSpec& vs);

// Parameters a closed-form derivative is available for.
bool differentiable_parameter(const ParameterRef& p);

// Build SI parameters. `phi` holds each terminal's source EMF angle (from the operating point).
// When seed_path names a parameter, that scalar is replaced by `seed` (used to carry a derivative).
template <class T>
SystemParams<T> build_params(const ValidatedGridSpec& vs, const std::vector<double>& phi,
                             const std::string& seed_path = "", const T& seed = T(0)) {
  const auto& spec = vs.spec;
  SystemParams<T> sp;
  sp.w0 = 2.0 * std::numbers::pi * spec.system_frequency;
  auto pick = [&](const std::string& path, double v) -> T { return path == seed_path ? seed : T(v); };

  for (int k = 0; k < vs.n_cables(); ++k) {
    const auto& c = spec.cables[k];
    std::string base = "dc." + c.id + ".";
    T len = pick(base + "length", c.length);
    CableParams<T> cp;
    cp.from = vs.cable_from[k];
    cp.to = vs.cable_to[k];
    cp.R = pick(base + "r_per_km", c.r_per_km) * len;
    cp.L = pick(base + "l_per_km", c.l_per_km) * len;
    cp.C = pick(base + "c_per_km", c.c_per_km) * len;
    sp.cab.push_back(cp);
  }
  for (int n = 0; n < vs.n_terminals(); ++n) {
    const auto& t = spec.terminals[n];
    std::string id = t.id + ".";
    auto b = terminal_bases(t, spec.system_frequency);
    TerminalParams<T> p;
    p.dvc = t.control_mode == ControlMode::DcVoltageQ;
    p.w0 = sp.w0;
    p.S = T(b.S);
    p.Vb = T(b.Vb);
    p.Ib = T(b.Ib);
    p.Vdcb = T(b.Vdcb);
    p.Rc = pick(id + "r_c", t.r_c);
    p.Lc = pick(id + "l_c", t.l_c);
    p.Cf = pick(id + "c_f", t.c_f);
    p.Rg = pick(id + "r_g", t.r_g.value_or(0.0));
    p.Lg = pick(id + "l_g", t.l_g.value_or(0.0));
    p.Vg = pick(id + "v_grid_mag", t.v_grid_mag) * b.Vb;
    p.phi = T(n < static_cast<int>(phi.size()) ? phi[n] : 0.0);
    p.Ceq = pick(id + "c_vsc", t.c_vsc);
    for (const auto& c : sp.cab)
      if (c.from == n || c.to == n) p.Ceq += 0.5 * c.C;
    const auto& g = t.gains;
    p.kpi = pick(id + "k_p_i", g.k_p_i);
    p.kii = pick(id + "k_i_i", g.k_i_i);
    p.kp_pll = pick(id + "k_p_pll", g.k_p_pll);
    p.ki_pll = pick(id + "k_i_pll", g.k_i_pll);
    p.kpP = pick(id + "k_p_P", g.k_p_P);
    p.kiP = pick(id + "k_i_P", g.k_i_P);
    p.kpQ = pick(id + "k_p_Q", g.k_p_Q);
    p.kiQ = pick(id + "k_i_Q", g.k_i_Q);
    p.kpdc = pick(id + "k_p_dc", g.k_p_dc);
    p.kidc = pick(id + "k_i_dc", g.k_i_dc);
    const auto& f = t.meas_filters;
    p.Tmvd = pick(id + "t_mvd", f.t_mvd);
    p.Tmvq = pick(id + "t_mvq", f.t_mvq);
    p.Tmid = pick(id + "t_mid", f.t_mid);
    p.Tmiq = pick(id + "t_miq", f.t_miq);
    p.Tvdc = pick(id + "t_vdc", f.t_vdc);
    sp.term.push_back(p);
  }
  return sp;
}

} // namespace mtdc
