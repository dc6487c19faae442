#include "mtdc/sweep.hpp"
#include "mtdc/errors.hpp"
#include "mtdc/linearization.hpp"
#include "mtdc/operating_point.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace mtdc {

ValidatedGridSpec with_parameter(const ValidatedGridSpec& vs, const ParameterRef& q, double value) {
  GridSpec g = vs.spec;
  set_parameter(g, q, value);
  return validate_spec(g);
}

std::vector<double> sweep_values(const SweepPlan& plan) {
  if (!plan.values.empty()) return plan.values;
  if (!(plan.q_lo < plan.q_hi)) throw ConfigError("sweep range must satisfy q_lo < q_hi");
  if (plan.steps < 2) throw ConfigError("sweep needs at least 2 steps");
  if (plan.log_spacing && !(plan.q_lo > 0)) throw ConfigError("log spacing needs q_lo > 0");
  std::vector<double> v(plan.steps);
  for (int i = 0; i < plan.steps; ++i) {
    double t = static_cast<double>(i) / (plan.steps - 1);
    v[i] = plan.log_spacing ? std::exp(std::log(plan.q_lo) + t * (std::log(plan.q_hi) - std::log(plan.q_lo)))
                            : plan.q_lo + t * (plan.q_hi - plan.q_lo);
  }
  v.back() = plan.q_hi;
  return v;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("assignment needs a square cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  // potentials u (rows), v (cols); p[j] = row matched to column j; 1-based with a dummy column 0
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

Pairing track_modes(const ModeSet& prev, const ModeSet& next) {
  const int n = prev.size();
  if (next.size() != n) throw NumericalError("track_modes: mode sets differ in size");
  Eigen::VectorXd np = prev.X.colwise().norm(), nn = next.X.colwise().norm();
  Eigen::MatrixXd mac = (prev.X.adjoint() * next.X).cwiseAbs();
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      mac(i, j) /= np[i] * nn[j];
      const double d = std::abs(prev.lambda[i] - next.lambda[j]);
      const double s = std::abs(prev.lambda[i]) + std::abs(next.lambda[j]) + 1.0;
      cost(i, j) = (1.0 - mac(i, j)) + 0.5 * d / s;
    }
  Pairing p;
  p.next_of = solve_assignment(cost);
  p.correlation.resize(n);
  for (int i = 0; i < n; ++i) p.correlation[i] = mac(i, p.next_of[i]);
  return p;
}

int RootLocus::mode_id_of_trace(int trace) const {
  auto it = std::find(traces.begin(), traces.end(), trace);
  return it == traces.end() ? -1 : static_cast<int>(it - traces.begin()) + 1;
}

namespace {

struct StepResult {
  bool ok = false;
  std::string error;
  ModeSet modes;
};

StepResult run_step(const ValidatedGridSpec& vs, const SweepPlan& plan, const OperatingPoint* base_op, double q) {
  StepResult r;
  try {
    auto v = with_parameter(vs, plan.param, q);
    OperatingPoint op = (plan.resolve_op || !base_op) ? compute_operating_point(v) : *base_op;
    r.modes = eigen_decompose(linearize(v, op, false));
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

} // namespace

RootLocus sweep_parameter(const ValidatedGridSpec& vs, const SweepPlan& plan, bool parallel) {
  const auto qs = sweep_values(plan);
  const int S = static_cast<int>(qs.size());
  std::optional<OperatingPoint> base_op;
  if (!plan.resolve_op) base_op = compute_operating_point(vs);

  std::vector<StepResult> res(S);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int s = 0; s < S; ++s) res[s] = run_step(vs, plan, base_op ? &*base_op : nullptr, qs[s]);

  RootLocus L;
  L.param = plan.param;
  L.steps.resize(S);
  int bad = 0;
  for (int s = 0; s < S; ++s)
    if (!res[s].ok) ++bad;
  L.infeasible_steps = bad;
  if (2 * bad > S)
    throw NumericalError("sweep aborted: " + std::to_string(bad) + " of " + std::to_string(S) +
                         " steps have no operating point");

  // tracking pass; trace t sits at position t of each step's lambda vector
  std::vector<int> pos; // pos[t] = index of trace t in the last feasible ModeSet
  const ModeSet* last = nullptr;
  for (int s = 0; s < S; ++s) {
    SweepStep& st = L.steps[s];
    st.q = qs[s];
    st.feasible = res[s].ok;
    st.error = res[s].error;
    if (!st.feasible) continue;
    const ModeSet& m = res[s].modes;
    const int n = m.size();
    st.lambda.resize(n);
    st.confidence.assign(n, 1.0);
    st.dominant.assign(n, false);
    if (!last) {
      pos.resize(n);
      for (int t = 0; t < n; ++t) pos[t] = t;
    } else {
      Pairing p = track_modes(*last, m);
      for (int t = 0; t < n; ++t) {
        const int prev_pos = pos[t];
        pos[t] = p.next_of[prev_pos];
        st.confidence[t] = p.correlation[prev_pos];
      }
    }
    st.max_re = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
      st.lambda[t] = m.lambda[pos[t]];
      st.dominant[t] = st.lambda[t].imag() > 0 && is_dominant(st.lambda[t], plan.dominant);
      st.max_re = std::max(st.max_re, st.lambda[t].real());
    }
    if (last && plan.max_jump > 0) {
      const SweepStep* prev = nullptr;
      for (int r = s - 1; r >= 0 && !prev; --r)
        if (L.steps[r].feasible) prev = &L.steps[r];
      for (int t = 0; t < n; ++t)
        if (std::abs(st.lambda[t] - prev->lambda[t]) > plan.max_jump) st.confidence[t] = std::min(st.confidence[t], 0.0);
    }
    last = &res[s].modes;
  }

  // mode ids: traces dominant at the first feasible step in their order, then later arrivals
  for (const auto& st : L.steps) {
    if (!st.feasible) continue;
    for (int t = 0; t < st.lambda.size(); ++t)
      if (st.dominant[t] && std::find(L.traces.begin(), L.traces.end(), t) == L.traces.end()) L.traces.push_back(t);
  }

  for (const auto& st : L.steps) {
    if (!st.feasible) continue;
    if (st.max_re > 0) {
      L.first_unstable_q = st.q;
      break;
    }
    L.last_stable_q = st.q;
  }
  if (!L.first_unstable_q) L.last_stable_q.reset();
  L.interactions = find_interaction_region(L, plan.eps);
  return L;
}

std::vector<InteractionInterval> find_interaction_region(const RootLocus& L, double eps) {
  std::vector<InteractionInterval> out;
  const int S = static_cast<int>(L.steps.size());
  for (size_t a = 0; a < L.traces.size(); ++a)
    for (size_t b = a + 1; b < L.traces.size(); ++b) {
      const int ta = L.traces[a], tb = L.traces[b];
      std::optional<InteractionInterval> cur;
      int gap = 0;
      auto close = [&] {
        if (cur) out.push_back(*cur);
        cur.reset();
      };
      for (int s = 0; s < S; ++s) {
        const auto& st = L.steps[s];
        if (!st.feasible) {
          if (++gap > 2) close();
          continue;
        }
        gap = 0;
        const cplx la = st.lambda[ta], lb = st.lambda[tb];
        const double d = std::abs(la - lb);
        if (la.imag() > 0 && lb.imag() > 0 && d <= eps) {
          if (!cur) {
            cur = InteractionInterval{static_cast<int>(a) + 1, static_cast<int>(b) + 1, st.q, st.q, d, st.q};
          }
          cur->q_end = st.q;
          if (d < cur->min_distance) {
            cur->min_distance = d;
            cur->q_at_min = st.q;
          }
        } else {
          close();
        }
      }
      close();
    }
  return out;
}

double max_real_part(const ValidatedGridSpec& vs, const ParameterRef& q, double value) {
  try {
    auto v = with_parameter(vs, q, value);
    auto m = linearize(v, compute_operating_point(v), false);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.A_pu(), false);
    return es.eigenvalues().real().maxCoeff();
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  }
}

BoundaryResult find_instability_boundary(const ValidatedGridSpec& vs, const ParameterRef& q, double lo, double hi,
                                         const BoundaryOptions& opt) {
  if (!(lo < hi)) throw ConfigError("boundary range must satisfy lo < hi");
  const int n = std::max(2, opt.coarse_steps);
  std::vector<double> qs(n + 1), re(n + 1);
  for (int i = 0; i <= n; ++i) qs[i] = lo + (hi - lo) * i / n;
#pragma omp parallel for schedule(dynamic) if (opt.parallel)
  for (int i = 0; i <= n; ++i) re[i] = max_real_part(vs, q, qs[i]);
  if (!(re[0] < 0)) throw NumericalError("system is not stable at the lower end of the range (" + q.path() + " = " +
                                         std::to_string(lo) + ")");
  int k = -1;
  for (int i = 1; i <= n && k < 0; ++i)
    if (!(re[i] < 0)) k = i;
  if (k < 0) throw NumericalError("no boundary in range: stable for all " + q.path() + " in [" + std::to_string(lo) +
                                  ", " + std::to_string(hi) + "]");
  BoundaryResult r;
  double a = qs[k - 1], b = qs[k], fb = re[k];
  double mid = b, fm = fb;
  for (r.iterations = 0; r.iterations < opt.max_iter; ++r.iterations) {
    mid = 0.5 * (a + b);
    fm = max_real_part(vs, q, mid);
    if (std::isfinite(fm) && std::abs(fm) < opt.tol) break;
    if (fm < 0) a = mid;
    else {
      b = mid;
      fb = fm;
    }
    if (b - a <= 1e-12 * std::max(1.0, std::abs(b))) {
      mid = b;
      fm = fb;
      break;
    }
  }
  r.q_crit = mid;
  r.max_re = fm;
  r.bracket_lo = a;
  r.bracket_hi = b;
  r.feasibility_limit = !std::isfinite(fm);
  return r;
}

std::string locus_csv(const RootLocus& L) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "q,mode_id,re,im,zeta,freq_hz,confidence\n";
  for (const auto& st : L.steps) {
    if (!st.feasible) continue;
    for (size_t k = 0; k < L.traces.size(); ++k) {
      const cplx l = st.lambda[L.traces[k]];
      if (!(l.imag() > 0)) continue;
      os << st.q << ',' << k + 1 << ',' << l.real() << ',' << l.imag() << ',' << damping_factor(l) << ','
         << l.imag() / (2.0 * std::numbers::pi) << ',' << st.confidence[L.traces[k]] << '\n';
    }
  }
  return os.str();
}

std::string locus_annotations_json(const RootLocus& L, int indent) {
  nlohmann::ordered_json j;
  j["param"] = L.param.path();
  j["steps"] = L.steps.size();
  j["infeasible_steps"] = L.infeasible_steps;
  if (L.first_unstable_q) {
    j["first_unstable_q"] = *L.first_unstable_q;
    j["last_stable_q"] = L.last_stable_q ? nlohmann::ordered_json(*L.last_stable_q) : nlohmann::ordered_json();
  } else {
    j["first_unstable_q"] = nullptr;
  }
  auto& iv = j["interactions"] = nlohmann::ordered_json::array();
  for (const auto& x : L.interactions)
    iv.push_back({{"mode_a", x.mode_a},
                  {"mode_b", x.mode_b},
                  {"q_start", x.q_start},
                  {"q_end", x.q_end},
                  {"min_distance", x.min_distance},
                  {"q_at_min", x.q_at_min}});
  auto& gaps = j["gaps"] = nlohmann::ordered_json::array();
  auto& low = j["low_confidence"] = nlohmann::ordered_json::array();
  for (const auto& st : L.steps) {
    if (!st.feasible) {
      gaps.push_back({{"q", st.q}, {"error", st.error}});
      continue;
    }
    for (size_t k = 0; k < L.traces.size(); ++k)
      if (st.confidence[L.traces[k]] < 0.9) low.push_back({{"q", st.q}, {"mode_id", k + 1}});
  }
  return j.dump(indent);
}

} // namespace mtdc
