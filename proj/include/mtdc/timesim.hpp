#pragma once
#include "mtdc/linearization.hpp"
#include "mtdc/modal.hpp"
#include "mtdc/operating_point.hpp"
#include "mtdc/spec.hpp"
#include "mtdc/spectrum.hpp"

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mtdc {

// A parameter or setpoint change, e.g. "18.0 T4.k_p_pll 50". Values in config units.
struct SimEvent {
  double time = 0.0;
  ParameterRef target;
  double value = 0.0;
};

struct EventScript {
  std::vector<SimEvent> events; // non-decreasing in time
};

// Whitespace separated "time target value" per line, '#' starts a comment.
EventScript parse_events(const std::string& text);
EventScript load_events(const std::string& path);

struct SimOptions {
  double dt = 2e-5;        // integration step, s; at most 100 us
  double sample_dt = 1e-4; // recording interval, rounded to a multiple of dt
  double divergence_pu = 10.0;
  std::optional<Eigen::VectorXd> x_init; // SI state; defaults to the operating point
};

struct SimMarker {
  double time = 0.0;
  std::string label;
};

struct SimTrace {
  double dt = 0.0; // spacing of the recorded grid
  std::vector<std::string> channels;
  std::vector<double> time;
  std::vector<std::vector<double>> rows; // rows[i][c] at time[i]
  std::vector<SimMarker> markers;
  bool diverged = false;
  double divergence_time = 0.0;
  int n_states = 0;      // the first n_states channels are the SI states
  double frequency = 50.0;

  int channel_index(const std::string& name) const; // throws ConfigError when absent
  std::vector<double> channel(const std::string& name) const;
  std::vector<double> channel(const std::string& name, double t0, double t1) const;
  Eigen::VectorXd state_at(size_t row) const;
  std::string to_csv() const;
};

// Names of the derived channels appended after the states: per terminal "<T>.P", "<T>.Q" (pu at the PCC,
// signs as p_ref and q_ref), "<T>.v_dc_pu"; per cable "dc.<k>.i_pu".
std::vector<std::string> derived_channel_names(const ValidatedGridSpec& vs);
std::vector<double> derived_channels(const ValidatedGridSpec& vs, const Eigen::VectorXd& x);

// Fixed-step RK4 from the operating point of `vs`. The source angles phi stay those of the initial
// operating point across events. A run that crosses the divergence threshold ends early with a marker.
SimTrace simulate(const ValidatedGridSpec& vs, const EventScript& events, double duration,
                  const SimOptions& opt = {});
SimTrace simulate(const ValidatedGridSpec& vs, const OperatingPoint& op, const EventScript& events,
                  double duration, const SimOptions& opt = {});

// Generic fixed-step RK4 for dx/dt = f(t, x); returns x(t1). The last step is shortened to land on t1.
using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
Eigen::VectorXd integrate_rk4(const OdeRhs& f, Eigen::VectorXd x, double t0, double t1, double dt);

// Response of the linear model to an initial deviation and a held input step (both SI), sampled every
// `sample_dt` for `n` samples, starting at t = 0. Uses exp(A_pu sample_dt).
Eigen::MatrixXd simulate_linear(const LinearModel& model, const Eigen::VectorXd& dx0, const Eigen::VectorXd& du,
                                double sample_dt, int n);

// Inverse Park transform with angle w0 t + theta, amplitude invariant.
std::array<std::vector<double>, 3> inverse_park(const std::vector<double>& t, const std::vector<double>& d,
                                                const std::vector<double>& q, double w0,
                                                const std::vector<double>* theta = nullptr);
// Phase quantities of a terminal's dq state pair, e.g. ("i_od", "i_oq"). Electrical states live in
// the w0 frame, so the angle is w0 t.
std::array<std::vector<double>, 3> reconstruct_abc(const SimTrace& trace, const std::string& terminal,
                                                   const std::string& d_state, const std::string& q_state);

Spectrum fft_spectrum(const SimTrace& trace, const std::string& channel, double t0, double t1,
                      WindowFn w = WindowFn::Hann);

struct RingdownOptions {
  std::optional<double> f_hint_hz; // band-pass around this frequency before fitting
  double half_band_hz = 3.0;
  double min_r2 = 0.8;
};

struct Ringdown {
  double sigma = 0.0; // 1/s; lambda = -sigma + j 2 pi f
  double freq_hz = 0.0;
  double r2 = 0.0;
  int cycles = 0;
  bool low_confidence = true;
};

// Log-envelope slope of the half-cycle peaks and zero-crossing frequency.
Ringdown estimate_ringdown(const std::vector<double>& t, const std::vector<double>& y,
                           const RingdownOptions& opt = {});
Ringdown estimate_ringdown(const SimTrace& trace, const std::string& channel, double t0, double t1,
                           const RingdownOptions& opt = {});

// Linear vs nonlinear check of one scripted step. The simulation starts at the pre-event equilibrium;
// modes are those of the post-event equilibrium (same source angles). A dominant mode counts as excited
// when its modal amplitude is at least `excite_fraction` of the largest dominant amplitude.
struct CrossValidationOptions {
  double t_event = 0.5;
  double settle = 0.02; // skipped after the event before fitting, s
  double dt = 2e-5;
  double sample_dt = 1e-4;
  double excite_fraction = 0.05;
  double sigma_tol = 0.2;
  double f_tol = 0.1;
  DominantCriteria dominant;
};

struct ModeCheck {
  int mode = -1; // index into the post-event ModeSet
  cplx lambda;
  double sigma = 0.0, freq_hz = 0.0;
  double amplitude = 0.0; // |y_k^T dxi_0|, per unit
  bool excited = false;
  double t0 = 0.0, t1 = 0.0;
  Ringdown modal;       // trajectory projected on the left eigenvector
  std::string channel;  // state channel where the mode is least masked by its spectral neighbours
  Ringdown physical;    // band-passed ringdown of that channel, reported only
  double err_sigma = 0.0, err_f = 0.0;
  bool pass = false;
};

enum class CrossStatus { Pass, Fail, Inconclusive };
const char* to_string(CrossStatus s);

struct CrossValidation {
  CrossStatus status = CrossStatus::Inconclusive;
  std::string scenario;
  std::vector<ModeCheck> modes;
  bool diverged = false;
};

// Throws NumericalError when the base or the post-event case is unstable.
CrossValidation cross_validate(const ValidatedGridSpec& vs, const ParameterRef& target, double value,
                               const CrossValidationOptions& opt = {});

} // namespace mtdc
