#pragma once
#include "mtdc/linearization.hpp"
#include "mtdc/state_index.hpp"

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace mtdc {

using cplx = std::complex<double>;

// Right eigenvectors are the columns of X, left eigenvectors the columns of Y,
// normalised so that Y.col(k)^T X.col(k) = 1.
struct ModeSet {
  Eigen::VectorXcd lambda;
  Eigen::MatrixXcd X;
  Eigen::MatrixXcd Y;

  int size() const { return static_cast<int>(lambda.size()); }
  double zeta(int k) const;
  double freq_hz(int k) const;
};

enum class ModeKind { Local, InterArea };
enum class ModeNature { Control, Electrical };

struct ModeClassification {
  ModeKind kind = ModeKind::Local;
  ModeNature nature = ModeNature::Electrical;
  std::vector<int> dominant_terminals; // indices; the DC pseudo-terminal is n_terminals()
  std::string label;                   // LCM, ICM, LEM or IEM
  bool lcm_condition = false;          // P_gammaP ~ P_omega ~ P_theta and same for gamma_Q
  bool icm_condition = false;          // aggregated participations of the dominant terminals alike
};

struct DominantCriteria {
  double zeta_max = 0.15;
  double re_max = 200.0; // rad/s
  double f_min = 2.0;    // Hz
};

// Sorted by Re descending, then |Im| ascending, positive Im first.
ModeSet eigen_decompose(const Eigen::MatrixXd& A);
// Decomposes the per-unit matrix; eigenvectors are in per-unit state coordinates.
ModeSet eigen_decompose(const LinearModel& model);

double damping_factor(cplx lambda);

// P(o, k) = Y(o, k) * X(o, k).
Eigen::MatrixXcd participation_matrix(const ModeSet& modes);
// |P| with every column scaled so its largest entry is 1.
Eigen::MatrixXd participation_display(const Eigen::MatrixXcd& P);
// Rows: terminals in index order, then the DC pseudo-terminal.
Eigen::MatrixXcd aggregate_by_terminal(const Eigen::MatrixXcd& P, const StateIndex& index);

ModeClassification classify_mode(const Eigen::MatrixXcd& P, const Eigen::MatrixXcd& agg, const StateIndex& index,
                                 int k, double threshold = 0.3, double tol = 0.3);
std::vector<ModeClassification> classify_modes(const ModeSet& modes, const Eigen::MatrixXcd& agg,
                                               const Eigen::MatrixXcd& P, const StateIndex& index,
                                               double threshold = 0.3, double tol = 0.3);

bool is_dominant(cplx lambda, const DominantCriteria& c = {});
// Indices of dominant modes, positive-Im member of each pair, in ModeSet order.
std::vector<int> dominant_modes(const ModeSet& modes, const DominantCriteria& c = {});

// max over k of ||A x_k - lambda_k x_k|| and ||y_k^T A - lambda_k y_k^T||, relative to ||A||.
double eigen_residual(const Eigen::MatrixXd& A, const ModeSet& modes);

struct ModalReport {
  ModeSet modes;
  Eigen::MatrixXcd P;
  Eigen::MatrixXcd agg;
  std::vector<ModeClassification> classes;
  std::vector<int> dominant;
  StateIndex index;
};

ModalReport analyze_modes(const LinearModel& model, const DominantCriteria& c = {}, double threshold = 0.3,
                          double tol = 0.3);

const char* to_string(ModeKind k);
const char* to_string(ModeNature n);

} // namespace mtdc
