#pragma once
#include "mtdc/operating_point.hpp"
#include "mtdc/params.hpp"
#include "mtdc/state_index.hpp"

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace mtdc {

// Linearized terminal: 18 states, inputs (P_ref, V_dc_ref, Q_ref), and the column
// coupling the v_dc row to the net cable current injected into the node.
struct TerminalBlock {
  Eigen::Matrix<double, kTerminalStates, kTerminalStates> A;
  Eigen::Matrix<double, kTerminalStates, kTerminalInputs> B;
  Eigen::Matrix<double, kTerminalStates, 1> E;
};

// Linearized DC network. Cable rows: F (cable x node voltage), R (cable x cable).
// Node rows: G (node x cable) with the +-1/C_eq incidence entries. `self` holds
// the -P0/(C_eq V0^2) term of each node, already contained in the terminal block.
struct DcNetworkBlock {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::MatrixXd R;
  Eigen::VectorXd self;
};

struct LinearModel {
  Eigen::MatrixXd A;       // SI, 1/s in state units
  Eigen::MatrixXd B;       // SI
  StateIndex index;
  Eigen::VectorXd x_base;  // per-unit base of every state
  Eigen::VectorXd x0, u0;
  std::vector<double> phi;
  std::vector<std::string> inputs; // "T1.p_ref", ...
  OperatingPoint op;

  int size() const { return static_cast<int>(A.rows()); }
  // D^-1 A D with D = diag(x_base): same eigenvalues, per-unit states.
  Eigen::MatrixXd A_pu() const;
};

// dx/dt of the full averaged model, SI.
Eigen::VectorXd nonlinear_residual(const ValidatedGridSpec& vs, const std::vector<double>& phi,
                                   const Eigen::VectorXd& x, const Eigen::VectorXd& u);

TerminalBlock build_terminal_block(const ValidatedGridSpec& vs, int terminal, const OperatingPoint& op);
DcNetworkBlock build_dc_network_block(const ValidatedGridSpec& vs, const OperatingPoint& op);
LinearModel augment(const ValidatedGridSpec& vs, const std::vector<TerminalBlock>& blocks, const DcNetworkBlock& dc,
                    const StateIndex& index, const OperatingPoint& op);

// Terminal blocks are built in parallel when `parallel` is set and OpenMP is on.
LinearModel linearize(const ValidatedGridSpec& vs, const OperatingPoint& op, bool parallel = true);

// Central differences, h_i = rel_step * max(1, |x_i|).
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
Eigen::MatrixXd numeric_jacobian(const VectorField& f, const Eigen::VectorXd& x0, double rel_step = 1e-6);
// Column loop split over OpenMP threads; f must be safe to call concurrently.
Eigen::MatrixXd numeric_jacobian_parallel(const VectorField& f, const Eigen::VectorXd& x0, double rel_step = 1e-6);
// Full-model Jacobian (SI); steps are taken on per-unit states.
Eigen::MatrixXd numeric_jacobian(const ValidatedGridSpec& vs, const OperatingPoint& op, double rel_step = 1e-6,
                                 bool parallel = false);

// max_ij |a_ij - b_ij| / max(1, |a_ij|), both taken in per unit.
double scaled_max_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& x_base);

// Dense CSV with state labels on the header row and first column, 17 significant digits.
std::string matrix_csv(const Eigen::MatrixXd& A, const StateIndex& index);

} // namespace mtdc
