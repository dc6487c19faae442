#include "mtdc/timesim.hpp"
#include "mtdc/errors.hpp"
#include "mtdc/model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mtdc {

EventScript parse_events(const std::string& text) {
  EventScript s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string t, target, v, extra;
    if (!(ls >> t)) continue;
    if (!(ls >> target >> v) || (ls >> extra))
      throw ConfigError("events line " + std::to_string(lineno) + ": expected 'time target value'");
    SimEvent e;
    try {
      size_t a = 0, b = 0;
      e.time = std::stod(t, &a);
      e.value = std::stod(v, &b);
      if (a != t.size() || b != v.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("events line " + std::to_string(lineno) + ": bad number");
    }
    e.target = ParameterRef::parse(target);
    if (!s.events.empty() && e.time < s.events.back().time)
      throw ConfigError("events line " + std::to_string(lineno) + ": times must be non-decreasing");
    if (e.time < 0) throw ConfigError("events line " + std::to_string(lineno) + ": negative time");
    s.events.push_back(e);
  }
  return s;
}

EventScript load_events(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read events file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_events(ss.str());
}

int SimTrace::channel_index(const std::string& name) const {
  auto it = std::find(channels.begin(), channels.end(), name);
  if (it == channels.end()) throw ConfigError("unknown trace channel '" + name + "'");
  return static_cast<int>(it - channels.begin());
}

std::vector<double> SimTrace::channel(const std::string& name) const {
  const int c = channel_index(name);
  std::vector<double> out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][c];
  return out;
}

std::vector<double> SimTrace::channel(const std::string& name, double t0, double t1) const {
  const int c = channel_index(name);
  std::vector<double> out;
  const double eps = 1e-9 * dt;
  for (size_t i = 0; i < rows.size(); ++i)
    if (time[i] >= t0 - eps && time[i] <= t1 + eps) out.push_back(rows[i][c]);
  return out;
}

Eigen::VectorXd SimTrace::state_at(size_t row) const {
  Eigen::VectorXd x(n_states);
  for (int i = 0; i < n_states; ++i) x[i] = rows.at(row)[i];
  return x;
}

std::string SimTrace::to_csv() const {
  std::string out = "time";
  for (const auto& c : channels) out += "," + c;
  out += "\n";
  char buf[32];
  for (size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g", time[i]);
    out += buf;
    for (double v : rows[i]) {
      std::snprintf(buf, sizeof buf, ",%.10g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::vector<std::string> derived_channel_names(const ValidatedGridSpec& vs) {
  std::vector<std::string> n;
  for (const auto& t : vs.spec.terminals) {
    n.push_back(t.id + ".P");
    n.push_back(t.id + ".Q");
    n.push_back(t.id + ".v_dc_pu");
  }
  for (const auto& c : vs.spec.cables) n.push_back("dc." + c.id + ".i_pu");
  return n;
}

namespace {

void append_derived(const ValidatedGridSpec& vs, const Eigen::VectorXd& x, const Eigen::VectorXd& base,
                    std::vector<double>& out) {
  const double f = vs.spec.system_frequency;
  for (int n = 0; n < vs.n_terminals(); ++n) {
    const auto b = terminal_bases(vs.terminal(n), f);
    const double* z = x.data() + kTerminalStates * n;
    out.push_back(-1.5 * (z[V_OD] * z[I_OD] + z[V_OQ] * z[I_OQ]) / b.S);
    out.push_back(1.5 * (z[V_OQ] * z[I_OD] - z[V_OD] * z[I_OQ]) / b.S);
    out.push_back(z[V_DC] / b.Vdcb);
  }
  const int off = kTerminalStates * vs.n_terminals();
  for (int k = 0; k < vs.n_cables(); ++k) out.push_back(x[off + k] / base[off + k]);
}

} // namespace

std::vector<double> derived_channels(const ValidatedGridSpec& vs, const Eigen::VectorXd& x) {
  std::vector<double> out;
  append_derived(vs, x, state_bases(vs), out);
  return out;
}

SimTrace simulate(const ValidatedGridSpec& vs, const EventScript& events, double duration, const SimOptions& opt) {
  return simulate(vs, compute_operating_point(vs), events, duration, opt);
}

SimTrace simulate(const ValidatedGridSpec& vs, const OperatingPoint& op, const EventScript& events, double duration,
                  const SimOptions& opt) {
  if (!(opt.dt > 0) || opt.dt > 1e-4 * (1 + 1e-9))
    throw ConfigError("dt must lie in (0, 100 us], got " + std::to_string(opt.dt));
  if (!(duration > 0)) throw ConfigError("duration must be positive");
  if (!(opt.sample_dt > 0)) throw ConfigError("sample_dt must be positive");

  // resolve every event up front so a bad target fails before integration starts
  std::vector<ValidatedGridSpec> after;
  {
    GridSpec g = vs.spec;
    for (const auto& e : events.events) {
      set_parameter(g, e.target, e.value);
      after.push_back(validate_spec(g));
    }
  }

  const StateIndex index = make_state_index(vs);
  const int n = index.size();
  const Eigen::VectorXd base = state_bases(vs);
  const double limit = opt.divergence_pu;

  Eigen::VectorXd x = opt.x_init ? *opt.x_init : op.x;
  if (x.size() != n) throw ConfigError("initial state has " + std::to_string(x.size()) + " entries, expected " +
                                       std::to_string(n));
  const ValidatedGridSpec* cur = &vs;
  auto sp = build_params<double>(*cur, op.phi);
  Eigen::VectorXd u = input_vector(*cur);

  SimTrace tr;
  tr.n_states = n;
  tr.frequency = vs.spec.system_frequency;
  for (int i = 0; i < n; ++i) tr.channels.push_back(index.label(i));
  for (auto& c : derived_channel_names(vs)) tr.channels.push_back(c);
  const long every = std::max(1L, std::lround(opt.sample_dt / opt.dt));
  tr.dt = every * opt.dt;
  const long steps = std::lround(duration / opt.dt);

  auto over = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(v[i])) return true;
      if (index.local_state(i) == THETA) continue;
      if (std::abs(v[i] / base[i]) > limit) return true;
    }
    return false;
  };
  auto record = [&](double t) {
    std::vector<double> row(x.data(), x.data() + n);
    append_derived(*cur, x, base, row);
    tr.time.push_back(t);
    tr.rows.push_back(std::move(row));
    for (size_t c = n; c < tr.rows.back().size(); ++c)
      if (std::abs(tr.rows.back()[c]) > limit) return true;
    return false;
  };
  auto diverge = [&](double t, const std::string& why) {
    tr.diverged = true;
    tr.divergence_time = t;
    tr.markers.push_back({t, "divergence: " + why});
  };

  Eigen::VectorXd k1, k2, k3, k4, tmp;
  auto rhs = [&](const Eigen::VectorXd& s, Eigen::VectorXd& d) { system_rhs<double>(sp, s, u, d); };
  size_t next_event = 0;
  for (long i = 0; i <= steps; ++i) {
    const double t = i * opt.dt;
    // events are snapped to the nearest integration step
    while (next_event < events.events.size() && events.events[next_event].time <= t + 0.5 * opt.dt) {
      const auto& e = events.events[next_event];
      cur = &after[next_event];
      sp = build_params<double>(*cur, op.phi);
      u = input_vector(*cur);
      std::ostringstream os;
      os << e.target.path() << " = " << e.value;
      tr.markers.push_back({t, os.str()});
      ++next_event;
    }
    if (i % every == 0 && record(t)) {
      diverge(t, "derived channel beyond " + std::to_string(limit) + " pu");
      break;
    }
    if (i == steps) break;
    try {
      const double h = opt.dt;
      rhs(x, k1);
      tmp = x + 0.5 * h * k1;
      rhs(tmp, k2);
      tmp = x + 0.5 * h * k2;
      rhs(tmp, k3);
      tmp = x + h * k3;
      rhs(tmp, k4);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const NumericalError& err) {
      diverge(t, err.what());
      break;
    }
    if (over(x)) {
      const double t1 = (i + 1) * opt.dt;
      std::vector<double> row(x.data(), x.data() + n);
      append_derived(*cur, x, base, row);
      tr.time.push_back(t1);
      tr.rows.push_back(std::move(row));
      diverge(t1, "state beyond " + std::to_string(limit) + " pu");
      break;
    }
  }
  return tr;
}

Eigen::VectorXd integrate_rk4(const OdeRhs& f, Eigen::VectorXd x, double t0, double t1, double dt) {
  if (!(dt > 0)) throw ConfigError("integrate_rk4: dt must be positive");
  double t = t0;
  while (t < t1) {
    double h = std::min(dt, t1 - t);
    if (t1 - (t + h) < 1e-12 * dt) h = t1 - t;
    Eigen::VectorXd k1 = f(t, x);
    Eigen::VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    Eigen::VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    Eigen::VectorXd k4 = f(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (t1 - (t + h) < 1e-12 * dt) ? t1 : t + h;
  }
  return x;
}

Eigen::MatrixXd simulate_linear(const LinearModel& model, const Eigen::VectorXd& dx0, const Eigen::VectorXd& du,
                                double sample_dt, int n) {
  const int m = model.size();
  if (dx0.size() != m || du.size() != model.B.cols()) throw NumericalError("simulate_linear: dimension mismatch");
  const Eigen::VectorXd& D = model.x_base;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m + 1, m + 1);
  M.topLeftCorner(m, m) = model.A_pu();
  M.topRightCorner(m, 1) = (model.B * du).cwiseQuotient(D);
  Eigen::MatrixXd Phi = (M * sample_dt).exp();
  Eigen::VectorXd z(m + 1);
  z.head(m) = dx0.cwiseQuotient(D);
  z[m] = 1.0;
  Eigen::MatrixXd out(m, n);
  for (int k = 0; k < n; ++k) {
    out.col(k) = z.head(m).cwiseProduct(D);
    z = Phi * z;
  }
  return out;
}

std::array<std::vector<double>, 3> inverse_park(const std::vector<double>& t, const std::vector<double>& d,
                                                const std::vector<double>& q, double w0,
                                                const std::vector<double>* theta) {
  const size_t n = t.size();
  if (d.size() != n || q.size() != n || (theta && theta->size() != n))
    throw NumericalError("inverse_park: channel lengths differ");
  std::array<std::vector<double>, 3> abc;
  for (auto& v : abc) v.resize(n);
  const double shift = 2.0 * std::numbers::pi / 3.0;
  for (size_t i = 0; i < n; ++i) {
    const double a = w0 * t[i] + (theta ? (*theta)[i] : 0.0);
    for (int p = 0; p < 3; ++p) {
      const double ap = a - p * shift;
      abc[p][i] = d[i] * std::cos(ap) - q[i] * std::sin(ap);
    }
  }
  return abc;
}

std::array<std::vector<double>, 3> reconstruct_abc(const SimTrace& trace, const std::string& terminal,
                                                   const std::string& d_state, const std::string& q_state) {
  return inverse_park(trace.time, trace.channel(terminal + "." + d_state), trace.channel(terminal + "." + q_state),
                      2.0 * std::numbers::pi * trace.frequency);
}

Spectrum fft_spectrum(const SimTrace& trace, const std::string& channel, double t0, double t1, WindowFn w) {
  if (!(t1 > t0)) throw NumericalError("fft window is empty");
  auto y = trace.channel(channel, t0, t1);
  if (y.size() < 2) throw NumericalError("fft window holds no samples of the trace");
  return amplitude_spectrum(y, trace.dt, w);
}

Ringdown estimate_ringdown(const std::vector<double>& t, const std::vector<double>& y0, const RingdownOptions& opt) {
  Ringdown r;
  const size_t n = t.size();
  if (y0.size() != n) throw NumericalError("estimate_ringdown: time and value lengths differ");
  if (n < 8) return r;
  const double dt = (t.back() - t.front()) / (n - 1);

  // remove the least-squares line first so a large offset does not leak through the filter
  std::vector<double> y = y0;
  {
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (size_t i = 0; i < n; ++i) {
      st += t[i];
      sy += y[i];
      stt += t[i] * t[i];
      sty += t[i] * y[i];
    }
    const double den = n * stt - st * st;
    const double b = den != 0 ? (n * sty - st * sy) / den : 0.0;
    const double a = (sy - b * st) / n;
    for (size_t i = 0; i < n; ++i) y[i] -= a + b * t[i];
  }
  size_t lo = 0, hi = n;
  if (opt.f_hint_hz) {
    const double f = *opt.f_hint_hz;
    if (!(f > 0)) throw NumericalError("estimate_ringdown: frequency hint must be positive");
    const double f_lo = std::max(f - opt.half_band_hz, 0.25 * f);
    const double edge = std::min(opt.half_band_hz, 0.5 * f_lo);
    y = bandpass(y, dt, f_lo, f + opt.half_band_hz, edge);
    // drop one period at each end, where the filter smears the window edges
    const size_t trim = std::min(n / 4, static_cast<size_t>(std::ceil(1.0 / (f * dt))));
    lo = trim;
    hi = n - trim;
  }

  std::vector<double> zc;
  for (size_t i = lo + 1; i < hi; ++i)
    if ((y[i - 1] < 0 && y[i] >= 0) || (y[i - 1] > 0 && y[i] <= 0)) {
      const double s = y[i - 1] / (y[i - 1] - y[i]);
      zc.push_back(t[i - 1] + s * (t[i] - t[i - 1]));
    }
  if (zc.size() < 4) return r;
  r.freq_hz = (zc.size() - 1) / (2.0 * (zc.back() - zc.front()));
  r.cycles = static_cast<int>((zc.size() - 1) / 2);

  // one peak per half cycle
  std::vector<double> pt, lp;
  size_t i = lo;
  for (size_t z = 0; z + 1 < zc.size(); ++z) {
    while (i < hi && t[i] < zc[z]) ++i;
    double best = 0.0, bt = 0.0;
    for (size_t j = i; j < hi && t[j] < zc[z + 1]; ++j)
      if (std::abs(y[j]) > best) {
        best = std::abs(y[j]);
        bt = t[j];
      }
    if (best > 0) {
      pt.push_back(bt);
      lp.push_back(std::log(best));
    }
  }
  if (pt.size() < 3) return r;
  const double m = static_cast<double>(pt.size());
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  for (size_t k = 0; k < pt.size(); ++k) {
    st += pt[k];
    sy += lp[k];
    stt += pt[k] * pt[k];
    sty += pt[k] * lp[k];
    syy += lp[k] * lp[k];
  }
  const double sxx = stt - st * st / m, sxy = sty - st * sy / m, syy_c = syy - sy * sy / m;
  const double slope = sxy / sxx;
  r.sigma = -slope;
  r.r2 = syy_c > 0 ? (sxy * sxy) / (sxx * syy_c) : 0.0;
  // a pure sinusoid has a flat envelope and a perfect fit with zero slope
  if (syy_c <= 1e-12 * m) r.r2 = 1.0;
  r.low_confidence = r.r2 < opt.min_r2;
  return r;
}

Ringdown estimate_ringdown(const SimTrace& trace, const std::string& channel, double t0, double t1,
                           const RingdownOptions& opt) {
  const int c = trace.channel_index(channel);
  std::vector<double> t, y;
  const double eps = 1e-9 * trace.dt;
  for (size_t i = 0; i < trace.rows.size(); ++i)
    if (trace.time[i] >= t0 - eps && trace.time[i] <= t1 + eps) {
      t.push_back(trace.time[i]);
      y.push_back(trace.rows[i][c]);
    }
  return estimate_ringdown(t, y, opt);
}

} // namespace mtdc
