#include "mtdc/sensitivity.hpp"
#include "mtdc/errors.hpp"
#include "mtdc/model.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <optional>
#include <sstream>

namespace mtdc {

namespace {

using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 1, 1>>;

AD seeded(double v, double d) {
  AD a(v);
  a.derivatives()(0) = d;
  return a;
}

void check_parameter(const ValidatedGridSpec& vs, const ParameterRef& q) {
  if (q.owner == "dc") {
    if (vs.cable_index(q.cable) < 0) throw ConfigError("unknown cable '" + q.cable + "' in " + q.path());
  } else if (vs.terminal_index(q.owner) < 0) {
    throw ConfigError("unknown terminal '" + q.owner + "' in " + q.path());
  }
  if (!differentiable_parameter(q))
    throw ConfigError("no closed-form derivative for '" + q.path() + "'; supported: " + supported_parameters());
}

VecX<AD> lift(const Eigen::VectorXd& v, const Eigen::VectorXd* d = nullptr) {
  VecX<AD> out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = seeded(v[i], d ? (*d)[i] : 0.0);
  return out;
}

Eigen::MatrixXd derivative_part(const MatX<AD>& M) {
  Eigen::MatrixXd D(M.rows(), M.cols());
  for (int j = 0; j < M.cols(); ++j)
    for (int i = 0; i < M.rows(); ++i) D(i, j) = M(i, j).derivatives()(0);
  return D;
}

Eigen::VectorXd df_dq(const ValidatedGridSpec& vs, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                      const std::vector<double>& phi, const ParameterRef& q) {
  auto sp = build_params<AD>(vs, phi, q.path(), seeded(get_parameter(vs.spec, q), 1.0));
  VecX<AD> dx;
  system_rhs<AD>(sp, lift(x), lift(u), dx);
  Eigen::VectorXd out(dx.size());
  for (int i = 0; i < dx.size(); ++i) out[i] = dx[i].derivatives()(0);
  return out;
}

Eigen::MatrixXd jacobian_derivative(const ValidatedGridSpec& vs, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    const std::vector<double>& phi, const ParameterRef& q,
                                    const Eigen::VectorXd* dx) {
  auto sp = build_params<AD>(vs, phi, q.path(), seeded(get_parameter(vs.spec, q), 1.0));
  MatX<AD> A;
  system_jacobian<AD>(sp, lift(x, dx), lift(u), A);
  return derivative_part(A);
}

} // namespace

std::string supported_parameters() {
  return "<T>.{r_g, l_g, v_grid_mag, r_c, l_c, c_f, c_vsc, k_p_i, k_i_i, k_p_pll, k_i_pll, k_p_P, k_i_P, k_p_Q, "
         "k_i_Q, k_p_dc, k_i_dc, t_mvd, t_mvq, t_mid, t_miq, t_vdc}, dc.<cable>.{length, r_per_km, l_per_km, "
         "c_per_km}";
}

Eigen::VectorXd dx0_dq(const ValidatedGridSpec& vs, const LinearModel& model, const ParameterRef& q) {
  check_parameter(vs, q);
  Eigen::VectorXd f = df_dq(vs, model.x0, model.u0, model.phi, q);
  // solve in per unit: the SI matrix spans too many orders of magnitude for a clean LU
  const Eigen::VectorXd& D = model.x_base;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(model.A_pu());
  Eigen::VectorXd dxi = lu.solve(-f.cwiseQuotient(D));
  if (!dxi.allFinite()) throw NumericalError("state matrix is singular; equilibrium shift undefined");
  return dxi.cwiseProduct(D);
}

Eigen::MatrixXd dA_dq(const ValidatedGridSpec& vs, const LinearModel& model, const ParameterRef& q,
                      OpDependence dep) {
  check_parameter(vs, q);
  if (dep == OpDependence::Frozen) return jacobian_derivative(vs, model.x0, model.u0, model.phi, q, nullptr);
  Eigen::VectorXd dx = dx0_dq(vs, model, q);
  return jacobian_derivative(vs, model.x0, model.u0, model.phi, q, &dx);
}

Eigen::MatrixXd dA_dq(const ValidatedGridSpec& vs, const OperatingPoint& op, const ParameterRef& q, OpDependence dep) {
  check_parameter(vs, q);
  if (dep == OpDependence::Frozen) return jacobian_derivative(vs, op.x, op.u, op.phi, q, nullptr);
  return dA_dq(vs, linearize(vs, op, false), q, dep);
}

std::vector<cplx> eigen_sensitivity(const LinearModel& model, const ModeSet& modes, const Eigen::MatrixXd& dA,
                                    const std::vector<int>& which) {
  Eigen::MatrixXd Apu = model.A_pu();
  const double tol = 1e-6 * Apu.operatorNorm();
  const Eigen::VectorXd& D = model.x_base;
  Eigen::MatrixXcd dApu = (D.cwiseInverse().asDiagonal() * dA * D.asDiagonal()).cast<cplx>();
  std::vector<cplx> out;
  for (int k : which) {
    if (k < 0 || k >= modes.size()) throw NumericalError("mode index out of range");
    for (int j = 0; j < modes.size(); ++j)
      if (j != k && std::abs(modes.lambda[j] - modes.lambda[k]) < tol) {
        std::ostringstream os;
        os << "eigenvalue " << modes.lambda[k] << " is repeated within " << tol
           << " rad/s; first-order sensitivity undefined";
        throw DegenerateModeError(os.str());
      }
    out.push_back((modes.Y.col(k).transpose() * dApu * modes.X.col(k))(0, 0));
  }
  return out;
}

ReducedPll reduced_pll_sensitivity(const ValidatedGridSpec& vs, const LinearModel& model, const ModeSet& modes,
                                   int terminal, int k, cplx full) {
  const auto& t = vs.terminal(terminal);
  const auto b = terminal_bases(t, vs.spec.system_frequency);
  const auto& D = model.x_base;
  auto xr = [&](int s) {
    int i = model.index.terminal_state(terminal, s);
    return modes.X(i, k) * D[i];
  };
  const int ith = model.index.terminal_state(terminal, THETA);
  const cplx yth = modes.Y(ith, k) / D[ith];
  ReducedPll r;
  r.full = full;
  r.reduced = yth * ((xr(I_LQ) - xr(I_OQ)) / t.c_f - b.w0 * xr(V_OD)) / (modes.lambda[k] * b.Vb);
  r.ratio = std::abs(full) > 0 ? r.reduced / full : cplx(INFINITY, 0);
  r.in_range = std::abs(r.ratio) >= 0.5 && std::abs(r.ratio) <= 2.0;
  return r;
}

cplx predict_eigenvalue(cplx lambda, const std::vector<cplx>& s, const std::vector<double>& dq) {
  if (s.size() != dq.size()) throw std::invalid_argument("predict_eigenvalue: sensitivity and step counts differ");
  for (size_t j = 0; j < s.size(); ++j) lambda += s[j] * dq[j];
  return lambda;
}

MarginResult stability_margin(cplx lambda, const std::function<cplx(double)>& sens, double q0, double q_lo,
                              double q_hi, int steps) {
  MarginResult r;
  if (!(lambda.real() < 0)) {
    r.note = "mode is not stable at q0";
    return r;
  }
  auto g = [&](double q) { return lambda.real() + sens(q).real() * (q - q0); };
  // search outward from q0 on both sides, keep the closest crossing
  auto search = [&](double end) -> std::optional<double> {
    if (end == q0) return std::nullopt;
    double prev = q0;
    for (int i = 1; i <= steps; ++i) {
      double q = q0 + (end - q0) * i / steps;
      if (g(q) >= 0) {
        double lo = prev, hi = q;
        for (int it = 0; it < 100 && std::abs(hi - lo) > 1e-12 * std::max(1.0, std::abs(q)); ++it) {
          double mid = 0.5 * (lo + hi);
          (g(mid) >= 0 ? hi : lo) = mid;
        }
        return hi;
      }
      prev = q;
    }
    return std::nullopt;
  };
  auto up = search(q_hi), down = search(q_lo);
  if (!up && !down) {
    r.note = "no predicted crossing in range";
    return r;
  }
  double q = up && (!down || std::abs(*up - q0) <= std::abs(*down - q0)) ? *up : *down;
  r.found = true;
  r.q_crit = q;
  r.dq = q - q0;
  return r;
}

InteractionResult interaction_distance(cplx lk, cplx lK, cplx sk, cplx sK, double dq, double eps) {
  InteractionResult r;
  const cplx a = lk + sk * dq, b = lK + sK * dq;
  r.distance = std::abs(a - b);
  r.re_distance = std::abs(a.real() - b.real());
  r.interacting = r.distance <= eps;
  return r;
}

} // namespace mtdc
