#include "common.hpp"
#include "doctest.h"

#include "mtdc/errors.hpp"
#include "mtdc/linearization.hpp"
#include "mtdc/operating_point.hpp"
#include "mtdc/params.hpp"
#include "mtdc/spectrum.hpp"
#include "mtdc/sweep.hpp"
#include "mtdc/timesim.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace mtdc;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> grid(double dt, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = i * dt;
  return t;
}

} // namespace

TEST_CASE("event scripts") {
  const auto s = parse_events("# scenario\n0.5 T4.p_ref -180\n\n1.0 T4.l_g 0.3  # weaker grid\n1.0 dc.2.r_per_km 0.02\n");
  REQUIRE(s.events.size() == 3);
  CHECK(s.events[0].time == 0.5);
  CHECK(s.events[0].target.path() == "T4.p_ref");
  CHECK(s.events[0].value == -180.0);
  CHECK(s.events[2].target.owner == "dc");
  CHECK_THROWS_AS(parse_events("1.0 T4.p_ref 1\n0.5 T4.p_ref 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_events("1.0 T4.p_ref\n"), ConfigError);
  CHECK_THROWS_AS(parse_events("1.0x T4.p_ref 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_events("1.0 T4.nonsense 3\n"), ConfigError);
  CHECK_THROWS_AS(load_events("/nonexistent/events"), ConfigError);
  CHECK(load_events(testing::config_path("step_p.events")).events.size() == 1);
}

TEST_CASE("RK4 on x' = -x") {
  const OdeRhs f = [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  CHECK(std::abs(integrate_rk4(f, x0, 0.0, 1.0, 1e-3)[0] - std::exp(-1.0)) < 1e-9);
  const double e1 = std::abs(integrate_rk4(f, x0, 0.0, 1.0, 0.1)[0] - std::exp(-1.0));
  const double e2 = std::abs(integrate_rk4(f, x0, 0.0, 1.0, 0.05)[0] - std::exp(-1.0));
  CHECK(e1 / e2 > 14.0);
  CHECK(e1 / e2 < 18.0);
  // shortened last step lands on t1
  CHECK(std::abs(integrate_rk4(f, x0, 0.0, 0.95, 0.1)[0] - std::exp(-0.95)) < 1e-5);
}

TEST_CASE("step size limits") {
  const auto vs = testing::two_terminal(100.0);
  SimOptions o;
  o.dt = 2e-4;
  CHECK_THROWS_AS(simulate(vs, {}, 0.1, o), ConfigError);
  o.dt = 0.0;
  CHECK_THROWS_AS(simulate(vs, {}, 0.1, o), ConfigError);
}

TEST_CASE("event-free run holds the equilibrium") {
  const auto vs = testing::paper_case();
  const auto op = compute_operating_point(vs);
  SimOptions o;
  o.dt = 5e-5;
  o.sample_dt = 1e-3;
  const auto tr = simulate(vs, op, {}, 5.0, o);
  CHECK_FALSE(tr.diverged);
  CHECK(tr.time.back() == doctest::Approx(5.0));
  const Eigen::VectorXd base = state_bases(vs);
  double dev = 0;
  for (size_t r = 0; r < tr.rows.size(); ++r)
    dev = std::max(dev, (tr.state_at(r) - op.x).cwiseQuotient(base).cwiseAbs().maxCoeff());
  CHECK(dev < 1e-6);
}

TEST_CASE("derived channels at the equilibrium") {
  const auto vs = testing::paper_case();
  SimOptions o;
  o.sample_dt = 1e-3;
  const auto tr = simulate(vs, {}, 0.01, o);
  for (int n = 0; n < vs.n_terminals(); ++n) {
    const auto& t = vs.terminal(n);
    CHECK(tr.channel(t.id + ".v_dc_pu")[0] == doctest::Approx(1.0).epsilon(0.02));
    CHECK(tr.channel(t.id + ".Q")[0] == doctest::Approx(t.q_ref / t.s_rated).epsilon(1e-6));
    if (t.control_mode == ControlMode::PQ) CHECK(tr.channel(t.id + ".P")[0] == doctest::Approx(t.p_ref / t.s_rated).epsilon(1e-6));
  }
  CHECK_THROWS_AS(tr.channel("T9.P"), ConfigError);
  const auto csv = tr.to_csv();
  CHECK(csv.rfind("time,", 0) == 0);
}

TEST_CASE("events land on the step grid and are marked") {
  const auto vs = testing::paper_case();
  SimOptions o;
  o.sample_dt = 1e-3;
  const auto tr = simulate(vs, parse_events("0.10001 T4.p_ref -450\n"), 0.2, o);
  REQUIRE(tr.markers.size() == 1);
  CHECK(tr.markers[0].time == doctest::Approx(0.1).epsilon(1e-3));
  CHECK(tr.markers[0].label.find("T4.p_ref") != std::string::npos);
  const auto p = tr.channel("T4.P");
  CHECK(p.front() == doctest::Approx(-0.8).epsilon(1e-6));
  CHECK(p.back() == doctest::Approx(-0.75).epsilon(0.05));
}

TEST_CASE("an unstable step ends in a divergence marker") {
  const auto vs = testing::paper_case();
  SimOptions o;
  o.sample_dt = 1e-3;
  const auto tr = simulate(vs, parse_events("0.5 T4.l_g 0.36\n"), 10.0, o);
  CHECK(tr.diverged);
  CHECK(tr.divergence_time > 0.5);
  CHECK(tr.divergence_time < 10.0);
  CHECK(tr.markers.back().label.rfind("divergence", 0) == 0);
}

TEST_CASE("small step: nonlinear and linear responses agree") {
  const auto vs = testing::paper_case();
  const auto op = compute_operating_point(vs);
  const auto m = linearize(vs, op);
  const auto base = state_bases(vs);
  SimOptions o;
  o.sample_dt = 1e-3;
  const auto& t4 = vs.terminal(vs.terminal_index("T4"));
  const double dp = 0.01 * t4.s_rated; // MW
  const auto tr = simulate(vs, op, parse_events("0 T4.p_ref " + std::to_string(t4.p_ref + dp) + "\n"), 0.5, o);
  Eigen::VectorXd du = Eigen::VectorXd::Zero(m.B.cols());
  for (size_t i = 0; i < m.inputs.size(); ++i)
    if (m.inputs[i] == "T4.p_ref") du[i] = dp * 1e6;
  const auto X = simulate_linear(m, Eigen::VectorXd::Zero(m.size()), du, tr.dt, static_cast<int>(tr.rows.size()));
  double num = 0, den = 0;
  for (size_t r = 0; r < tr.rows.size(); ++r) {
    const Eigen::VectorXd a = (tr.state_at(r) - op.x).cwiseQuotient(base);
    const Eigen::VectorXd b = X.col(static_cast<int>(r)).cwiseQuotient(base);
    num += (a - b).squaredNorm();
    den += a.squaredNorm();
  }
  CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("linear response to zero input is zero") {
  const auto vs = testing::two_terminal(100.0);
  const auto m = linearize(vs, compute_operating_point(vs));
  const auto X = simulate_linear(m, Eigen::VectorXd::Zero(m.size()), Eigen::VectorXd::Zero(m.B.cols()), 1e-3, 10);
  CHECK(X.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("DC network energy does not grow without sources or control") {
  auto g = load_grid_spec(testing::config_path("paper_4t.cfg"));
  for (auto& t : g.terminals) t.p_ref = t.q_ref = 0.0;
  const auto vs = validate_spec(g);
  const auto m = linearize(vs, compute_operating_point(vs));
  const int N = vs.n_terminals(), M = vs.n_cables();
  std::vector<int> ids;
  for (int n = 0; n < N; ++n) ids.push_back(m.index.terminal_state(n, V_DC));
  for (int k = 0; k < M; ++k) ids.push_back(m.index.cable_state(k));
  Eigen::MatrixXd S(N + M, N + M);
  for (int i = 0; i < N + M; ++i)
    for (int j = 0; j < N + M; ++j) S(i, j) = m.A(ids[i], ids[j]);
  // storage weights from the spec: node C_eq = c_vsc + half of each attached cable, cable L
  Eigen::VectorXd w = Eigen::VectorXd::Zero(N + M);
  for (int n = 0; n < N; ++n) w[n] = vs.terminal(n).c_vsc;
  for (int k = 0; k < M; ++k) {
    const auto& c = vs.spec.cables[k];
    w[vs.cable_from[k]] += 0.5 * c.c_per_km * c.length;
    w[vs.cable_to[k]] += 0.5 * c.c_per_km * c.length;
    w[N + k] = c.l_per_km * c.length;
  }
  auto energy = [&](const Eigen::VectorXd& x) { return 0.5 * (w.array() * x.array().square()).sum(); };
  std::mt19937 rng(13);
  std::normal_distribution<double> g0;
  Eigen::VectorXd x(N + M);
  for (int i = 0; i < N; ++i) x[i] = 1e3 * g0(rng);
  for (int k = 0; k < M; ++k) x[N + k] = 50 * g0(rng);
  const OdeRhs f = [&](double, const Eigen::VectorXd& y) { return Eigen::VectorXd(S * y); };
  double e = energy(x);
  const double e0 = e;
  for (int i = 0; i < 200; ++i) {
    x = integrate_rk4(f, x, 0, 1e-4, 1e-6);
    const double en = energy(x);
    CHECK(en <= e * (1 + 1e-12));
    e = en;
  }
  CHECK(e < e0);
}

TEST_CASE("spectrum of a 12 Hz sinusoid") {
  const double dt = 1e-3;
  const auto t = grid(dt, 4000);
  std::vector<double> y(t.size());
  for (size_t i = 0; i < t.size(); ++i) y[i] = 0.7 * std::sin(2 * kPi * 12 * t[i]) + 3.0;
  const auto s = amplitude_spectrum(y, dt);
  const auto pk = find_peaks(s, 1);
  REQUIRE(pk.size() == 1);
  CHECK(std::abs(pk[0].freq_hz - 12) < 1.0 / 4.0);
  CHECK(pk[0].magnitude == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("band-pass keeps the band and rejects the rest") {
  const double dt = 1e-3;
  const auto t = grid(dt, 4000);
  std::vector<double> y(t.size()), a(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    a[i] = std::sin(2 * kPi * 12 * t[i]);
    y[i] = a[i] + std::sin(2 * kPi * 40 * t[i]);
  }
  const auto b = bandpass(y, dt, 9, 15, 1);
  double err = 0;
  for (size_t i = 500; i + 500 < t.size(); ++i) err = std::max(err, std::abs(b[i] - a[i]));
  CHECK(err < 0.02);
}

TEST_CASE("ringdown of a synthetic damped cosine") {
  const double dt = 1e-4;
  const auto t = grid(dt, 10000);
  std::vector<double> y(t.size());
  for (size_t i = 0; i < t.size(); ++i) y[i] = std::exp(-5 * t[i]) * std::cos(2 * kPi * 12 * t[i]);
  const auto r = estimate_ringdown(t, y);
  CHECK(r.sigma == doctest::Approx(5).epsilon(0.02));
  CHECK(std::abs(r.freq_hz - 12) < 0.1);
  CHECK_FALSE(r.low_confidence);
  RingdownOptions o;
  o.f_hint_hz = 12.0;
  const auto rh = estimate_ringdown(t, y, o);
  CHECK(std::abs(rh.sigma - 5) < 0.1);
  CHECK(std::abs(rh.freq_hz - 12) < 0.1);
}

TEST_CASE("a flat channel is low confidence") {
  const auto t = grid(1e-3, 2000);
  std::vector<double> flat(t.size(), 0.42);
  CHECK(estimate_ringdown(t, flat).low_confidence);
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> noise(t.size());
  for (auto& v : noise) v = g(rng);
  CHECK(estimate_ringdown(t, noise).low_confidence);
}

TEST_CASE("inverse Park transform") {
  const double w0 = 2 * kPi * 50, dt = 1e-4;
  const auto t = grid(dt, 2000);
  const std::vector<double> one(t.size(), 1.0), zero(t.size(), 0.0);
  const auto abc = inverse_park(t, one, zero, w0);
  for (size_t i = 0; i < t.size(); i += 37)
    for (int p = 0; p < 3; ++p) CHECK(abc[p][i] == doctest::Approx(std::cos(w0 * t[i] - p * 2 * kPi / 3)).scale(1));
  const auto z = inverse_park(t, zero, zero, w0);
  for (int p = 0; p < 3; ++p)
    for (double v : z[p]) CHECK(v == 0.0);

  // d modulated at 12 Hz: sidebands at 38 and 62 Hz
  std::vector<double> d(t.size());
  const auto tl = grid(dt, 20000);
  d.resize(tl.size());
  for (size_t i = 0; i < tl.size(); ++i) d[i] = 1 + 0.3 * std::cos(2 * kPi * 12 * tl[i]);
  const auto m = inverse_park(tl, d, std::vector<double>(tl.size(), 0.0), w0);
  const auto pk = find_peaks(amplitude_spectrum(m[0], dt), 3, 2.0);
  REQUIRE(pk.size() == 3);
  std::vector<double> f;
  for (const auto& p : pk) f.push_back(p.freq_hz);
  std::sort(f.begin(), f.end());
  CHECK(std::abs(f[0] - 38) < 0.5);
  CHECK(std::abs(f[1] - 50) < 0.5);
  CHECK(std::abs(f[2] - 62) < 0.5);
}

TEST_CASE("cross-validation needs a stable base") {
  const auto vs = with_parameter(testing::paper_case(), ParameterRef::parse("T4.k_p_pll"), 45.0);
  try {
    cross_validate(vs, ParameterRef::parse("T4.p_ref"), -450.0);
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()) == "base case unstable; validation undefined");
  }
}

TEST_CASE("small active power step cross-validates") {
  const auto vs = testing::paper_case();
  const auto cv = cross_validate(vs, ParameterRef::parse("T4.p_ref"), -450.0);
  CHECK(cv.status == CrossStatus::Pass);
  int excited = 0;
  for (const auto& m : cv.modes) {
    if (!m.excited) continue;
    ++excited;
    CHECK(m.err_sigma <= 0.2);
    CHECK(m.err_f <= 0.1);
  }
  CHECK(excited >= 2);
}
