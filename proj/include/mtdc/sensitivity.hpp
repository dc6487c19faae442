#pragma once
#include "mtdc/linearization.hpp"
#include "mtdc/modal.hpp"
#include "mtdc/spec.hpp"

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace mtdc {

enum class OpDependence {
  Frozen, // operating point held fixed
  Total   // includes the equilibrium shift dx0/dq = -A^-1 df/dq
};

// Names accepted by dA_dq, for error messages and --help.
std::string supported_parameters();

// Closed-form dA/dq in SI state units (forward-mode AD through the analytic Jacobian).
Eigen::MatrixXd dA_dq(const ValidatedGridSpec& vs, const OperatingPoint& op, const ParameterRef& q,
                      OpDependence dep = OpDependence::Frozen);
// Same, reusing the state matrix of `model` for the equilibrium shift.
Eigen::MatrixXd dA_dq(const ValidatedGridSpec& vs, const LinearModel& model, const ParameterRef& q,
                      OpDependence dep = OpDependence::Frozen);

// Derivative of the equilibrium with respect to q with the source angles held fixed.
Eigen::VectorXd dx0_dq(const ValidatedGridSpec& vs, const LinearModel& model, const ParameterRef& q);

// y_k^T dA x_k for each listed mode; `modes` must come from eigen_decompose(model).
// Throws DegenerateModeError when a listed eigenvalue is repeated within 1e-6 ||A||.
std::vector<cplx> eigen_sensitivity(const LinearModel& model, const ModeSet& modes, const Eigen::MatrixXd& dA,
                                    const std::vector<int>& which);

struct ReducedPll {
  cplx reduced;
  cplx full;
  cplx ratio;
  bool in_range = false; // |ratio| within [0.5, 2]
};

// Three-term reduced PLL-gain index for one terminal: left entry of the theta row times
// [(x_ilq - x_ioq)/C_f - w0 x_vod] / (lambda V_b). It drops the v_od x_theta term of the full value.
ReducedPll reduced_pll_sensitivity(const ValidatedGridSpec& vs, const LinearModel& model, const ModeSet& modes,
                                   int terminal, int k, cplx full);

cplx predict_eigenvalue(cplx lambda, const std::vector<cplx>& s, const std::vector<double>& dq);

struct MarginResult {
  bool found = false;
  double dq = 0.0;     // q_crit - q0
  double q_crit = 0.0;
  std::string note;
};

// Smallest |dq| in [q_lo, q_hi] - q0 with Re(lambda) + Re(s(q)) dq >= 0.
// A constant sensitivity gives the closed form dq = -Re(lambda) / Re(s).
MarginResult stability_margin(cplx lambda, const std::function<cplx(double)>& sens, double q0, double q_lo,
                              double q_hi, int steps = 400);

struct InteractionResult {
  double distance = 0.0;    // complex-plane distance, rad/s
  double re_distance = 0.0; // real-part distance, rad/s
  bool interacting = false;
};

InteractionResult interaction_distance(cplx lk, cplx lK, cplx sk, cplx sK, double dq, double eps = 4.0);

} // namespace mtdc
