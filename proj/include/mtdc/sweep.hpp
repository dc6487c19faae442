#pragma once
#include "mtdc/modal.hpp"
#include "mtdc/spec.hpp"

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace mtdc {

struct SweepPlan {
  ParameterRef param;
  double q_lo = 0.0;
  double q_hi = 1.0;
  int steps = 100;
  bool log_spacing = false;
  std::vector<double> values; // explicit list, overrides the range when non-empty
  bool resolve_op = true;
  double min_correlation = 0.9;
  double max_jump = 0.0; // rad/s per step, 0 disables the bound
  DominantCriteria dominant;
  double eps = 4.0; // interaction radius, rad/s
};

std::vector<double> sweep_values(const SweepPlan& plan);

// Bijective pairing prev -> next maximising eigenvector correlation |x^H y| / (|x||y|),
// with a small eigenvalue-distance term that breaks ties and keeps conjugates apart.
struct Pairing {
  std::vector<int> next_of;         // next_of[i] = index in `next` paired with prev mode i
  std::vector<double> correlation;  // per prev mode
};
Pairing track_modes(const ModeSet& prev, const ModeSet& next);

// Minimum-cost perfect assignment on a square cost matrix (Hungarian method).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

struct SweepStep {
  double q = 0.0;
  bool feasible = false;
  std::string error;
  Eigen::VectorXcd lambda;          // ordered by trace id
  std::vector<double> confidence;   // per trace, correlation with the previous feasible step
  std::vector<bool> dominant;       // per trace
  double max_re = 0.0;
};

struct InteractionInterval {
  int mode_a = 0, mode_b = 0; // mode ids as in the locus
  double q_start = 0.0, q_end = 0.0;
  double min_distance = 0.0;
  double q_at_min = 0.0;
};

struct RootLocus {
  ParameterRef param;
  std::vector<SweepStep> steps;
  // traces shown as modes (positive-Im member, dominant at some step); mode id k+1 is traces[k]
  std::vector<int> traces;
  std::optional<double> first_unstable_q;
  std::optional<double> last_stable_q;
  std::vector<InteractionInterval> interactions;
  int infeasible_steps = 0;

  int mode_id_of_trace(int trace) const;
};

// Steps run in parallel when `parallel` is set; tracking is a sequential pass afterwards.
RootLocus sweep_parameter(const ValidatedGridSpec& vs, const SweepPlan& plan, bool parallel = true);

std::vector<InteractionInterval> find_interaction_region(const RootLocus& locus, double eps = 4.0);

struct BoundaryOptions {
  double tol = 1e-3;    // rad/s on max Re
  int coarse_steps = 40;
  int max_iter = 200;
  bool parallel = true;
};

struct BoundaryResult {
  double q_crit = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double max_re = 0.0; // at q_crit
  int iterations = 0;
  bool feasibility_limit = false; // the unstable side is an infeasible operating point
};

// Max Re over all eigenvalues at q; +infinity when the operating point cannot be solved.
double max_real_part(const ValidatedGridSpec& vs, const ParameterRef& q, double value);

// First stable -> unstable transition in [lo, hi], refined by bisection.
BoundaryResult find_instability_boundary(const ValidatedGridSpec& vs, const ParameterRef& q, double lo, double hi,
                                         const BoundaryOptions& opt = {});

// columns: q, mode_id, re, im, zeta, freq_hz, confidence
std::string locus_csv(const RootLocus& locus);
std::string locus_annotations_json(const RootLocus& locus, int indent = 2);

ValidatedGridSpec with_parameter(const ValidatedGridSpec& vs, const ParameterRef& q, double value);

} // namespace mtdc
