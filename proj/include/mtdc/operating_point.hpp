#pragma once
#include "mtdc/params.hpp"
#include "mtdc/spec.hpp"

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace mtdc {

using cplx = std::complex<double>;

// Steady state of one terminal in its own frame (PCC voltage on the d axis, theta_pll = 0).
struct TerminalOperatingPoint {
  cplx v_o, i_o, i_l, v_c, v_g;
  double phi = 0.0;   // source EMF angle in the terminal frame, rad
  double delta = 0.0; // PCC voltage angle relative to the source EMF, rad
  double p_pcc = 0.0; // W, from the AC grid into the converter
  double q_pcc = 0.0; // VAr, injected into the AC grid
  double p_dc = 0.0;  // W, into the DC network
  double v_dc = 0.0;  // V
  Eigen::Matrix<double, kTerminalStates, 1> z;
};

struct DcPowerFlow {
  std::vector<double> v_dc; // V per node
  std::vector<double> i_dc; // A per cable, from -> to
  std::vector<double> p_dc; // W injected per node
  int iterations = 0;
  double residual_pu = 0.0;
};

struct OperatingPoint {
  std::vector<TerminalOperatingPoint> terminals;
  DcPowerFlow dc;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  std::vector<double> phi;
  double residual_pu = 0.0;
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double residual_limit = 1e-8;
};

// DC power flow with the DVC terminal as slack at v_dc_ref. p_inj[n] is the power
// the converter delivers into node n (W); the slack entry is ignored.
DcPowerFlow solve_dc_power_flow(const ValidatedGridSpec& vs, const std::vector<double>& p_inj,
                                const SolverOptions& opt = {});
// Lossless-converter variant: injections taken directly from p_ref.
DcPowerFlow solve_dc_power_flow(const ValidatedGridSpec& vs, const SolverOptions& opt = {});

// AC side for a given PCC active power (into converter) and reactive injection. Closed form.
TerminalOperatingPoint solve_terminal_ac_side(const TerminalSpec& t, double f, double p_pcc, double q_ref);

// AC side such that the converter delivers p_dc into its DC node; sets v_dc and controller states.
TerminalOperatingPoint solve_terminal_steady_state(const TerminalSpec& t, double p_dc, double v_dc, double q_ref,
                                                   double f, const SolverOptions& opt = {});

// Fill controller, filter and PLL states so that controller outputs equal the equilibrium commands.
void set_controller_states(const TerminalSpec& t, double f, TerminalOperatingPoint& op);

OperatingPoint assemble_operating_point(const ValidatedGridSpec& vs, const DcPowerFlow& dc,
                                        const std::vector<TerminalOperatingPoint>& ac, const SolverOptions& opt = {});

// Full two-stage solve: PQ terminals' AC sides, DC flow, slack AC side, assembly and residual check.
OperatingPoint compute_operating_point(const ValidatedGridSpec& vs, const SolverOptions& opt = {});

// The same equilibrium with the AC sources at angles `phi`: every grid-frame vector of terminal n turns by
// phi[n] - op.phi[n] and theta_pll shifts by the same angle. The model is invariant under this rotation.
OperatingPoint rotate_to_source_angles(const ValidatedGridSpec& vs, OperatingPoint op, const std::vector<double>& phi);

// Nonlinear residual at the point in per unit per second (infinity norm).
double residual_norm_pu(const ValidatedGridSpec& vs, const OperatingPoint& op);
void check_operating_point(const ValidatedGridSpec& vs, const OperatingPoint& op, double limit = 1e-8);

} // namespace mtdc
