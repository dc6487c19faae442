#include "mtdc/errors.hpp"
#include "mtdc/linearization.hpp"
#include "mtdc/modal.hpp"
#include "mtdc/operating_point.hpp"
#include "mtdc/params.hpp"
#include "mtdc/report.hpp"
#include "mtdc/sensitivity.hpp"
#include "mtdc/spec.hpp"
#include "mtdc/spectrum.hpp"
#include "mtdc/sweep.hpp"
#include "mtdc/timesim.hpp"

#include "CLI11.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

using namespace mtdc;

namespace {

struct Global {
  std::string config;
  std::string out_dir = ".";
  int threads = 0;
  int seed = 0;
  bool json = false;
  bool csv = false;
  bool no_manifest = false;
  bool check = false;
};

std::pair<double, double> parse_range(const std::string& s) {
  const auto c = s.find(':', 1);
  if (c == std::string::npos) throw ConfigError("range '" + s + "' must look like lo:hi");
  try {
    size_t a = 0, b = 0;
    const std::string l = s.substr(0, c), h = s.substr(c + 1);
    double lo = std::stod(l, &a), hi = std::stod(h, &b);
    if (a != l.size() || b != h.size()) throw std::invalid_argument("");
    return {lo, hi};
  } catch (const std::exception&) {
    throw ConfigError("range '" + s + "' must look like lo:hi");
  }
}

std::string out_path(const Global& g, const std::string& name) {
  return (std::filesystem::path(g.out_dir) / name).string();
}

// JSON unless only --csv was asked for.
bool want_json(const Global& g) { return g.json || !g.csv; }

ValidatedGridSpec load(const Global& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  return validate_spec(load_grid_spec(g.config));
}

struct Output {
  const Global& g;
  RunManifest manifest;
  const RunManifest* m() const { return g.no_manifest ? nullptr : &manifest; }
  void json(const std::string& name, const ojson& body) const {
    write_atomic(out_path(g, name), json_document(body, m()));
    std::cout << "wrote " << out_path(g, name) << "\n";
  }
  void csv(const std::string& name, const std::string& body) const {
    write_atomic(out_path(g, name), csv_document(body, m()));
    std::cout << "wrote " << out_path(g, name) << "\n";
  }
};

int cmd_check(const Global& g) {
  auto vs = load(g);
  std::cout << "OK " << (vs.spec.name.empty() ? g.config : vs.spec.name) << ": " << vs.n_terminals()
            << " terminals, " << vs.n_cables() << " cables, slack " << vs.terminal(vs.slack).id << ", "
            << make_state_index(vs).size() << " states\n";
  return 0;
}

struct ModesOpts {
  std::string dump_matrix;
  bool pu = false;
  double threshold = 0.3;
};

int cmd_modes(const Global& g, const ModesOpts& o) {
  auto vs = load(g);
  auto op = compute_operating_point(vs);
  auto model = linearize(vs, op);
  auto r = analyze_modes(model, {}, o.threshold);
  ojson opts{{"threshold", o.threshold}, {"dump_matrix", o.dump_matrix}, {"pu", o.pu}};
  Output out{g, make_manifest("modes", vs, opts, g.seed)};

  std::cout << model.size() << " states, operating point residual " << op.residual_pu << " pu/s\n";
  std::cout << "dominant modes:\n";
  const auto groups = model.index.group_names();
  for (size_t d = 0; d < r.dominant.size(); ++d) {
    const int k = r.dominant[d];
    const auto& c = r.classes[k];
    std::cout << "  " << d + 1 << "  (#" << k + 1 << ")  " << std::setw(26) << std::left
              << complex_text(r.modes.lambda[k]) << std::right << " zeta " << std::setprecision(4)
              << r.modes.zeta(k) << "  f " << r.modes.freq_hz(k) << " Hz  " << to_string(c.kind) << " " << c.label
              << "  [";
    for (size_t i = 0; i < c.dominant_terminals.size(); ++i) std::cout << (i ? "," : "") << groups[c.dominant_terminals[i]];
    std::cout << "]\n";
  }
  if (want_json(g)) out.json("modes.json", modal_report_json(r));
  if (g.csv) out.csv("modes.csv", modal_report_csv(r));
  if (!o.dump_matrix.empty()) {
    const auto path = std::filesystem::path(o.dump_matrix).is_absolute() ? o.dump_matrix : out_path(g, o.dump_matrix);
    write_atomic(path, csv_document(matrix_csv(o.pu ? model.A_pu() : model.A, model.index), out.m()));
    std::cout << "wrote " << path << (o.pu ? " (per unit)\n" : " (SI)\n");
  }
  return 0;
}

struct SensOpts {
  std::string param;
  std::string modes = "dominant";
  double delta = 1.0;
  bool frozen = false;
  double eps = 4.0;
};

std::vector<int> select_modes(const ModalReport& r, const std::string& which) {
  if (which == "dominant") return r.dominant;
  std::vector<int> out;
  if (which == "all") {
    for (int k = 0; k < r.modes.size(); ++k) out.push_back(k);
    return out;
  }
  std::stringstream ss(which);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int id = 0;
    try {
      id = std::stoi(item);
    } catch (const std::exception&) {
      throw ConfigError("--modes takes 'dominant', 'all' or a list of mode ids");
    }
    if (id < 1 || id > r.modes.size()) throw ConfigError("mode id " + item + " out of range");
    out.push_back(id - 1);
  }
  return out;
}

int cmd_sensitivity(const Global& g, const SensOpts& o) {
  auto vs = load(g);
  const auto q = ParameterRef::parse(o.param);
  const double q0 = get_parameter(vs.spec, q);
  auto op = compute_operating_point(vs);
  auto model = linearize(vs, op);
  auto r = analyze_modes(model);
  const auto which = select_modes(r, o.modes);
  const auto dep = o.frozen ? OpDependence::Frozen : OpDependence::Total;
  const auto dA = dA_dq(vs, model, q, dep);
  const auto s = eigen_sensitivity(model, r.modes, dA, which);
  ojson opts{{"param", q.path()}, {"modes", o.modes}, {"delta", o.delta}, {"frozen_op", o.frozen}, {"eps", o.eps}};
  Output out{g, make_manifest("sensitivity", vs, opts, g.seed)};

  const bool pll = q.name == "k_p_pll" && q.owner != "dc";
  ojson body{{"param", q.path()}, {"value", q0}, {"units", q.units()}, {"delta", o.delta},
             {"op_dependence", o.frozen ? "frozen" : "total"}};
  auto& rows = body["modes"] = ojson::array();
  std::ostringstream csv;
  csv << std::setprecision(12) << "mode,re,im,dre_dq,dim_dq,pred_re,pred_im,margin_dq\n";
  std::cout << "d lambda / d " << q.path() << " (" << q.units() << "), delta " << o.delta << ":\n";
  for (size_t i = 0; i < which.size(); ++i) {
    const int k = which[i];
    const cplx l = r.modes.lambda[k];
    const cplx pred = predict_eigenvalue(l, {s[i]}, {o.delta});
    ojson m{{"mode", k + 1}, {"re", l.real()}, {"im", l.imag()}, {"dre_dq", s[i].real()}, {"dim_dq", s[i].imag()},
            {"pred_re", pred.real()}, {"pred_im", pred.imag()}};
    double margin = NAN;
    if (s[i].real() != 0.0 && l.real() < 0) {
      const double dq = -l.real() / s[i].real();
      margin = dq;
      m["margin_dq"] = dq;
      m["q_crit_first_order"] = q0 + dq;
    }
    if (pll) {
      const auto red = reduced_pll_sensitivity(vs, model, r.modes, vs.terminal_index(q.owner), k, s[i]);
      m["reduced_pll"] = {{"re", red.reduced.real()}, {"im", red.reduced.imag()}, {"ratio_abs", std::abs(red.ratio)},
                          {"in_range", red.in_range}};
    }
    rows.push_back(m);
    csv << k + 1 << ',' << l.real() << ',' << l.imag() << ',' << s[i].real() << ',' << s[i].imag() << ','
        << pred.real() << ',' << pred.imag() << ',' << (std::isnan(margin) ? std::string() : std::to_string(margin))
        << "\n";
    std::cout << "  #" << k + 1 << "  " << complex_text(l) << "  d/dq " << complex_text(s[i]) << "  -> "
              << complex_text(pred) << "\n";
  }
  auto& pairs = body["interactions"] = ojson::array();
  for (size_t a = 0; a < which.size(); ++a)
    for (size_t b = a + 1; b < which.size(); ++b) {
      const auto ir = interaction_distance(r.modes.lambda[which[a]], r.modes.lambda[which[b]], s[a], s[b], o.delta,
                                           o.eps);
      if (ir.interacting)
        pairs.push_back({{"mode_a", which[a] + 1}, {"mode_b", which[b] + 1}, {"distance", ir.distance}});
    }
  if (want_json(g)) out.json("sensitivity.json", body);
  if (g.csv) out.csv("sensitivity.csv", csv.str());
  return 0;
}

struct SweepOpts {
  std::string param;
  std::string range;
  int steps = 100;
  bool log = false;
  bool frozen = false;
  double eps = 4.0;
  double max_jump = 0.0;
};

int cmd_sweep(const Global& g, const SweepOpts& o) {
  auto vs = load(g);
  SweepPlan p;
  p.param = ParameterRef::parse(o.param);
  std::tie(p.q_lo, p.q_hi) = parse_range(o.range);
  p.steps = o.steps;
  p.log_spacing = o.log;
  p.resolve_op = !o.frozen;
  p.eps = o.eps;
  p.max_jump = o.max_jump;
  get_parameter(vs.spec, p.param);
  auto L = sweep_parameter(vs, p, true);
  ojson opts{{"param", p.param.path()}, {"range", {p.q_lo, p.q_hi}}, {"steps", p.steps}, {"log", p.log_spacing},
             {"resolve_op", p.resolve_op}, {"eps", p.eps}, {"max_jump", p.max_jump}};
  Output out{g, make_manifest("sweep", vs, opts, g.seed)};

  ojson ann = ojson::parse(locus_annotations_json(L));
  ojson boundary;
  if (L.first_unstable_q && L.last_stable_q) {
    BoundaryOptions bo;
    bo.coarse_steps = 2;
    auto b = find_instability_boundary(vs, p.param, *L.last_stable_q, *L.first_unstable_q, bo);
    boundary = {{"q_crit", b.q_crit}, {"bracket", {b.bracket_lo, b.bracket_hi}}, {"max_re", b.max_re},
                {"feasibility_limit", b.feasibility_limit}};
    std::cout << "first unstable step " << *L.first_unstable_q << ", boundary " << b.q_crit << "\n";
  } else if (L.first_unstable_q) {
    boundary = {{"note", "unstable from the first feasible step"}};
    std::cout << "unstable from the first feasible step\n";
  } else {
    boundary = {{"note", "no boundary in range"}};
    std::cout << "no boundary in range\n";
  }
  ann["boundary"] = boundary;
  for (const auto& iv : L.interactions)
    std::cout << "interaction modes " << iv.mode_a << "," << iv.mode_b << ": q in [" << iv.q_start << ", "
              << iv.q_end << "], min distance " << iv.min_distance << " rad/s at " << iv.q_at_min << "\n";
  out.csv("locus.csv", locus_csv(L));
  out.json("locus.json", ann);
  return 0;
}

struct BoundaryOpts {
  std::string param;
  std::string range;
  double tol = 1e-3;
  int coarse = 40;
};

int cmd_boundary(const Global& g, const BoundaryOpts& o) {
  auto vs = load(g);
  const auto q = ParameterRef::parse(o.param);
  get_parameter(vs.spec, q);
  auto [lo, hi] = parse_range(o.range);
  BoundaryOptions bo;
  bo.tol = o.tol;
  bo.coarse_steps = o.coarse;
  auto b = find_instability_boundary(vs, q, lo, hi, bo);
  ojson opts{{"param", q.path()}, {"range", {lo, hi}}, {"tol", o.tol}, {"coarse_steps", o.coarse}};
  Output out{g, make_manifest("boundary", vs, opts, g.seed)};
  std::cout << std::setprecision(8) << q.path() << " q_crit = " << b.q_crit << " " << q.units() << "  bracket ["
            << b.bracket_lo << ", " << b.bracket_hi << "]  max Re " << b.max_re << " rad/s"
            << (b.feasibility_limit ? "  (operating point infeasible beyond)" : "") << "\n";
  ojson body{{"param", q.path()},       {"units", q.units()},        {"q_crit", b.q_crit},
             {"bracket", {b.bracket_lo, b.bracket_hi}}, {"max_re", b.max_re}, {"iterations", b.iterations},
             {"feasibility_limit", b.feasibility_limit}};
  out.json("boundary.json", body);
  return 0;
}

struct SimOpts {
  std::string events;
  std::vector<std::string> inline_events;
  double duration = 30.0;
  double dt = 2e-5;
  double sample_dt = 1e-3;
  std::string out = "trace.csv";
  std::string channels;
  std::string fft;
  std::string window;
  std::string abc;
  int peaks = 5;
};

int cmd_simulate(const Global& g, const SimOpts& o) {
  auto vs = load(g);
  EventScript ev;
  if (!o.events.empty()) ev = load_events(o.events);
  for (const auto& s : o.inline_events) {
    std::string t = s;
    for (char& c : t)
      if (c == ':' || c == '=') c = ' ';
    for (auto& e : parse_events(t).events) ev.events.push_back(e);
  }
  std::stable_sort(ev.events.begin(), ev.events.end(), [](const SimEvent& a, const SimEvent& b) { return a.time < b.time; });
  SimOptions so;
  so.dt = o.dt;
  so.sample_dt = o.sample_dt;
  auto tr = simulate(vs, ev, o.duration, so);
  ojson opts{{"events", o.events},         {"inline_events", o.inline_events}, {"duration", o.duration},
             {"dt", o.dt},                 {"sample_dt", o.sample_dt},        {"channels", o.channels},
             {"fft", o.fft},               {"window", o.window},              {"abc", o.abc},
             {"peaks", o.peaks}};
  Output out{g, make_manifest("simulate", vs, opts, g.seed)};

  if (!o.channels.empty()) {
    // keep only the requested channels in the written trace
    std::vector<int> keep;
    std::stringstream ss(o.channels);
    std::string c;
    while (std::getline(ss, c, ',')) keep.push_back(tr.channel_index(c));
    SimTrace sub = tr;
    sub.channels.clear();
    for (int k : keep) sub.channels.push_back(tr.channels[k]);
    for (size_t i = 0; i < tr.rows.size(); ++i) {
      sub.rows[i].clear();
      for (int k : keep) sub.rows[i].push_back(tr.rows[i][k]);
    }
    out.csv(o.out, sub.to_csv());
  } else {
    out.csv(o.out, tr.to_csv());
  }

  ojson summary{{"duration", tr.time.empty() ? 0.0 : tr.time.back()}, {"samples", tr.time.size()},
                {"sample_dt", tr.dt}, {"diverged", tr.diverged}};
  if (tr.diverged) summary["divergence_time"] = tr.divergence_time;
  auto& mk = summary["markers"] = ojson::array();
  for (const auto& m : tr.markers) {
    mk.push_back({{"time", m.time}, {"label", m.label}});
    std::cout << "t = " << m.time << " s: " << m.label << "\n";
  }

  double t0 = 0.0, t1 = tr.time.empty() ? 0.0 : tr.time.back();
  if (!o.window.empty()) std::tie(t0, t1) = parse_range(o.window);
  else t0 = std::max(0.0, t1 - 2.0);
  auto spectrum_out = [&](const std::string& name, const std::string& label, const Spectrum& s) {
    std::ostringstream os;
    os << std::setprecision(10) << "freq_hz,magnitude\n";
    for (size_t i = 0; i < s.freq_hz.size(); ++i) os << s.freq_hz[i] << ',' << s.magnitude[i] << "\n";
    out.csv(name, os.str());
    ojson pk = ojson::array();
    std::cout << label << " peaks:";
    for (const auto& p : find_peaks(s, o.peaks, 2.0 * s.resolution_hz, 0.5)) {
      pk.push_back({{"freq_hz", p.freq_hz}, {"magnitude", p.magnitude}});
      std::cout << "  " << std::setprecision(5) << p.freq_hz << " Hz (" << p.magnitude << ")";
    }
    std::cout << "\n";
    summary["spectra"][label] = {{"window", {t0, t1}}, {"peaks", pk}};
  };
  if (!o.fft.empty()) spectrum_out("spectrum.csv", o.fft, fft_spectrum(tr, o.fft, t0, t1));
  if (!o.abc.empty()) {
    auto abc = reconstruct_abc(tr, o.abc, "i_od", "i_oq");
    std::vector<double> a;
    for (size_t i = 0; i < tr.time.size(); ++i)
      if (tr.time[i] >= t0 && tr.time[i] <= t1) a.push_back(abc[0][i]);
    if (a.size() < 2) throw NumericalError("fft window holds no samples of the trace");
    spectrum_out("spectrum_abc.csv", o.abc + ".i_oa", amplitude_spectrum(a, tr.dt));
  }
  out.json("simulate.json", summary);
  std::cout << (tr.diverged ? "diverged" : "completed") << " at t = " << summary["duration"].get<double>() << " s\n";
  return 0;
}

struct ValidateOpts {
  std::string param;
  std::optional<double> value;
  double step_pu = 0.05;
  double t_event = 0.5;
  double dt = 2e-5;
};

int cmd_validate(const Global& g, const ValidateOpts& o) {
  auto vs = load(g);
  ParameterRef q;
  if (!o.param.empty()) {
    q = ParameterRef::parse(o.param);
  } else {
    int last = -1;
    for (int n = 0; n < vs.n_terminals(); ++n)
      if (vs.terminal(n).control_mode == ControlMode::PQ) last = n;
    if (last < 0) throw ConfigError("no PQ terminal to step; pass --param");
    q = ParameterRef{vs.terminal(last).id, "", "p_ref"};
  }
  const double q0 = get_parameter(vs.spec, q);
  double value = q0;
  if (o.value) value = *o.value;
  else if (q.name == "p_ref" || q.name == "q_ref") value = q0 + o.step_pu * vs.terminal(vs.terminal_index(q.owner)).s_rated;
  else value = q0 * (1.0 + o.step_pu);
  CrossValidationOptions co;
  co.t_event = o.t_event;
  co.dt = o.dt;
  auto cv = cross_validate(vs, q, value, co);
  ojson opts{{"param", q.path()}, {"value", value}, {"t_event", o.t_event}, {"dt", o.dt},
             {"settle", co.settle}, {"excite_fraction", co.excite_fraction}, {"sigma_tol", co.sigma_tol},
             {"f_tol", co.f_tol}};
  Output out{g, make_manifest("validate", vs, opts, g.seed)};

  std::cout << cv.scenario << "\n";
  std::cout << "  mode  linear sigma, f         time-domain sigma, f     err sigma  err f\n";
  for (const auto& m : cv.modes) {
    std::cout << std::setprecision(4) << "  #" << std::setw(3) << std::left << m.mode + 1 << std::right;
    if (!m.excited) {
      std::cout << "  " << m.sigma << ", " << m.freq_hz << " Hz   not excited (amplitude " << m.amplitude << ")\n";
      continue;
    }
    std::cout << "  " << std::setw(8) << m.sigma << ", " << std::setw(8) << m.freq_hz << " Hz   " << std::setw(8)
              << m.modal.sigma << ", " << std::setw(8) << m.modal.freq_hz << " Hz   " << std::setw(8) << m.err_sigma
              << "  " << std::setw(8) << m.err_f << (m.pass ? "  ok" : "  MISMATCH") << "\n";
  }
  std::cout << to_string(cv.status) << "\n";
  if (want_json(g)) out.json("validate.json", cross_validation_json(cv));
  if (g.csv) out.csv("validate.csv", cross_validation_csv(cv));
  return cv.status == CrossStatus::Pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-signal analysis of multi-terminal VSC-HVDC grids"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.fallthrough();
  Global g;
  app.add_option("-c,--config", g.config, "grid configuration file");
  app.add_option("-o,--out-dir", g.out_dir, "directory for output files")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0: runtime default)");
  app.add_option("--seed", g.seed, "reserved, recorded in the manifest");
  app.add_flag("--json", g.json, "write JSON reports (default)");
  app.add_flag("--csv", g.csv, "write CSV reports");
  app.add_flag("--no-manifest", g.no_manifest, "omit the run manifest from output files");
  app.add_flag("--check", g.check, "validate the configuration and exit");

  auto* check = app.add_subcommand("check", "parse and validate the configuration");

  ModesOpts mo;
  auto* modes = app.add_subcommand("modes", "operating point, eigenvalues, participation and classification");
  modes->add_option("--dump-matrix", mo.dump_matrix, "write the state matrix as CSV to this path");
  modes->add_flag("--pu", mo.pu, "dump the per-unit state matrix instead of SI");
  modes->add_option("--threshold", mo.threshold, "aggregated participation that makes a terminal dominant")
      ->capture_default_str();

  SensOpts so;
  auto* sens = app.add_subcommand("sensitivity", "eigenvalue sensitivities to one parameter");
  sens->add_option("--param", so.param, "parameter path, e.g. T4.k_p_pll")->required();
  sens->add_option("--modes", so.modes, "dominant, all, or comma separated mode ids")->capture_default_str();
  sens->add_option("--delta", so.delta, "parameter step for the first-order prediction")->capture_default_str();
  sens->add_flag("--frozen-op", so.frozen, "hold the operating point fixed");
  sens->add_option("--eps", so.eps, "interaction radius, rad/s")->capture_default_str();

  SweepOpts wo;
  auto* sweep = app.add_subcommand("sweep", "root locus over a parameter range");
  sweep->add_option("--param", wo.param, "parameter path")->required();
  sweep->add_option("--range", wo.range, "lo:hi")->required();
  sweep->add_option("--steps", wo.steps, "number of steps")->capture_default_str();
  sweep->add_flag("--log", wo.log, "logarithmic spacing");
  sweep->add_flag("--frozen-op", wo.frozen, "keep the base operating point at every step");
  sweep->add_option("--eps", wo.eps, "interaction radius, rad/s")->capture_default_str();
  sweep->add_option("--max-jump", wo.max_jump, "flag steps whose eigenvalue moves more than this, rad/s");

  BoundaryOpts bo;
  auto* bound = app.add_subcommand("boundary", "bisection for the first stability boundary");
  bound->add_option("--param", bo.param, "parameter path")->required();
  bound->add_option("--range", bo.range, "lo:hi")->required();
  bound->add_option("--tol", bo.tol, "tolerance on max Re, rad/s")->capture_default_str();
  bound->add_option("--coarse", bo.coarse, "coarse scan steps")->capture_default_str();

  SimOpts mo2;
  auto* sim = app.add_subcommand("simulate", "nonlinear averaged-model time simulation");
  sim->add_option("--events", mo2.events, "events file");
  sim->add_option("--event", mo2.inline_events, "inline event time:path:value, repeatable");
  sim->add_option("--duration", mo2.duration, "s")->capture_default_str();
  sim->add_option("--dt", mo2.dt, "integration step, s")->capture_default_str();
  sim->add_option("--sample-dt", mo2.sample_dt, "recording interval, s")->capture_default_str();
  sim->add_option("--out", mo2.out, "trace CSV name")->capture_default_str();
  sim->add_option("--channels", mo2.channels, "comma separated channels to keep in the trace");
  sim->add_option("--fft", mo2.fft, "channel to transform");
  sim->add_option("--window", mo2.window, "t0:t1 for spectra (default: last 2 s)");
  sim->add_option("--abc", mo2.abc, "terminal whose phase-a output current is reconstructed and transformed");
  sim->add_option("--peaks", mo2.peaks, "spectral peaks to report")->capture_default_str();

  ValidateOpts vo;
  auto* val = app.add_subcommand("validate", "linear vs nonlinear cross-validation of a step");
  val->add_option("--param", vo.param, "stepped parameter (default: p_ref of the last PQ terminal)");
  val->add_option("--value", vo.value, "new value in config units");
  val->add_option("--step-pu", vo.step_pu, "step size when --value is absent (pu of s_rated, or relative)")
      ->capture_default_str();
  val->add_option("--t-event", vo.t_event, "s")->capture_default_str();
  val->add_option("--dt", vo.dt, "integration step, s")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    if (g.check || *check) return cmd_check(g);
    if (*modes) return cmd_modes(g, mo);
    if (*sens) return cmd_sensitivity(g, so);
    if (*sweep) return cmd_sweep(g, wo);
    if (*bound) return cmd_boundary(g, bo);
    if (*sim) return cmd_simulate(g, mo2);
    if (*val) return cmd_validate(g, vo);
    std::cerr << app.help();
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
