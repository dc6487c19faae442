#include "mtdc/errors.hpp"
#include "mtdc/timesim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mtdc {

const char* to_string(CrossStatus s) {
  switch (s) {
  case CrossStatus::Pass: return "PASS";
  case CrossStatus::Fail: return "FAIL";
  default: return "INCONCLUSIVE";
  }
}

namespace {

double max_re(const LinearModel& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m.A_pu(), false);
  return es.eigenvalues().real().maxCoeff();
}

} // namespace

CrossValidation cross_validate(const ValidatedGridSpec& vs, const ParameterRef& target, double value,
                               const CrossValidationOptions& opt) {
  const auto op0 = compute_operating_point(vs);
  if (!(max_re(linearize(vs, op0, false)) < 0)) throw NumericalError("base case unstable; validation undefined");

  GridSpec g = vs.spec;
  set_parameter(g, target, value);
  const auto vs1 = validate_spec(g);
  const auto op1 = rotate_to_source_angles(vs1, compute_operating_point(vs1), op0.phi);
  const auto lm = linearize(vs1, op1, false);
  if (!(max_re(lm) < 0)) throw NumericalError("post-event case unstable; validation undefined");
  const ModeSet ms = eigen_decompose(lm);
  const auto dom = dominant_modes(ms, opt.dominant);

  const Eigen::VectorXd& D = lm.x_base;
  const Eigen::VectorXcd c = ms.Y.transpose() * (op0.x - op1.x).cwiseQuotient(D).cast<cplx>();

  CrossValidation cv;
  std::ostringstream sc;
  sc << "step " << target.path() << " " << get_parameter(vs.spec, target) << " -> " << value << " at t = "
     << opt.t_event << " s";
  cv.scenario = sc.str();

  double amax = 0.0;
  for (int k : dom) amax = std::max(amax, std::abs(c[k]));
  double t_end = opt.t_event + opt.settle;
  for (int k : dom) {
    ModeCheck mc;
    mc.mode = k;
    mc.lambda = ms.lambda[k];
    mc.sigma = -mc.lambda.real();
    mc.freq_hz = mc.lambda.imag() / (2.0 * std::numbers::pi);
    mc.amplitude = std::abs(c[k]);
    mc.excited = amax > 0 && mc.amplitude >= opt.excite_fraction * amax;
    mc.t0 = opt.t_event + opt.settle;
    mc.t1 = mc.t0 + std::min(std::max(3.0 / mc.sigma, 6.0 / mc.freq_hz), 3.0);
    t_end = std::max(t_end, mc.t1);
    cv.modes.push_back(mc);
  }

  SimOptions so;
  so.dt = opt.dt;
  so.sample_dt = opt.sample_dt;
  EventScript ev;
  ev.events.push_back({opt.t_event, target, value});
  const SimTrace tr = simulate(vs, op0, ev, t_end + 0.01, so);
  cv.diverged = tr.diverged;

  bool any = false, all = true;
  for (auto& mc : cv.modes) {
    if (!mc.excited || cv.diverged) continue;
    any = true;
    const int k = mc.mode;
    std::vector<double> t, z;
    for (size_t r = 0; r < tr.rows.size(); ++r) {
      if (tr.time[r] < mc.t0 - 1e-9 || tr.time[r] > mc.t1 + 1e-9) continue;
      const Eigen::VectorXd xi = (tr.state_at(r) - op1.x).cwiseQuotient(D);
      t.push_back(tr.time[r]);
      z.push_back((ms.Y.col(k).transpose() * xi.cast<cplx>())(0).real());
    }
    mc.modal = estimate_ringdown(t, z);

    // physical channel: largest share of this mode among modes within the fit band
    const double hb = std::max(3.0, 3.0 * mc.sigma / (2.0 * std::numbers::pi));
    double best = 0.0, peak = 0.0;
    for (int i = 0; i < lm.size(); ++i) peak = std::max(peak, std::abs(ms.X(i, k) * c[k]));
    for (int i = 0; i < lm.size(); ++i) {
      const double r = std::abs(ms.X(i, k) * c[k]);
      if (r < 1e-3 * peak) continue;
      double tot = 0.0;
      for (int j = 0; j < ms.size(); ++j)
        if (ms.lambda[j].imag() > 0 && std::abs(ms.lambda[j].imag() / (2.0 * std::numbers::pi) - mc.freq_hz) < hb)
          tot += std::abs(ms.X(i, j) * c[j]);
      if (tot > 0 && r / tot > best) {
        best = r / tot;
        mc.channel = lm.index.label(i);
      }
    }
    if (!mc.channel.empty()) {
      RingdownOptions ro;
      ro.f_hint_hz = mc.freq_hz;
      ro.half_band_hz = std::min(hb, 0.9 * mc.freq_hz);
      mc.physical = estimate_ringdown(tr, mc.channel, mc.t0, mc.t1, ro);
    }

    mc.err_sigma = std::abs(mc.modal.sigma - mc.sigma) / mc.sigma;
    mc.err_f = std::abs(mc.modal.freq_hz - mc.freq_hz) / mc.freq_hz;
    mc.pass = !mc.modal.low_confidence && mc.err_sigma <= opt.sigma_tol && mc.err_f <= opt.f_tol;
    all = all && mc.pass;
  }
  if (cv.diverged) cv.status = CrossStatus::Fail;
  else cv.status = !any ? CrossStatus::Inconclusive : (all ? CrossStatus::Pass : CrossStatus::Fail);
  return cv;
}

} // namespace mtdc
