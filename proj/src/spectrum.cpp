#include "mtdc/spectrum.hpp"
#include "mtdc/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

namespace mtdc {

namespace {

// FFTW planning is not thread safe
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_buffer(size_t n) {
  return std::unique_ptr<T[], FftwFree>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// r2c of `in` (length n, zero padded to m); returns m/2+1 complex bins
std::vector<std::complex<double>> forward(const std::vector<double>& in, size_t m) {
  auto buf = fftw_buffer<double>(m);
  auto out = fftw_buffer<fftw_complex>(m / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(plan_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), buf.get(), out.get(), FFTW_ESTIMATE);
  }
  std::fill(buf.get(), buf.get() + m, 0.0);
  std::copy(in.begin(), in.end(), buf.get());
  fftw_execute(plan);
  std::vector<std::complex<double>> X(m / 2 + 1);
  for (size_t k = 0; k < X.size(); ++k) X[k] = {out[k][0], out[k][1]};
  {
    std::lock_guard<std::mutex> lk(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return X;
}

std::vector<double> inverse(const std::vector<std::complex<double>>& X, size_t m) {
  auto in = fftw_buffer<fftw_complex>(m / 2 + 1);
  auto buf = fftw_buffer<double>(m);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(plan_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(m), in.get(), buf.get(), FFTW_ESTIMATE);
  }
  for (size_t k = 0; k < X.size(); ++k) {
    in[k][0] = X[k].real();
    in[k][1] = X[k].imag();
  }
  fftw_execute(plan);
  std::vector<double> y(buf.get(), buf.get() + m);
  for (double& v : y) v /= static_cast<double>(m);
  {
    std::lock_guard<std::mutex> lk(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return y;
}

} // namespace

Spectrum amplitude_spectrum(const std::vector<double>& y, double dt, WindowFn w, bool zero_pad) {
  const size_t n = y.size();
  if (n < 2) throw NumericalError("spectrum: window holds fewer than 2 samples");
  if (!(dt > 0)) throw NumericalError("spectrum: sample spacing must be positive");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  std::vector<double> x(n);
  double wsum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double wi = w == WindowFn::Hann ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1)) : 1.0;
    x[i] = (y[i] - mean) * wi;
    wsum += wi;
  }
  const size_t m = zero_pad ? next_pow2(n) : n;
  auto X = forward(x, m);
  Spectrum s;
  s.resolution_hz = 1.0 / (n * dt);
  s.freq_hz.resize(X.size());
  s.magnitude.resize(X.size());
  for (size_t k = 0; k < X.size(); ++k) {
    s.freq_hz[k] = k / (m * dt);
    s.magnitude[k] = (k == 0 ? 1.0 : 2.0) * std::abs(X[k]) / wsum;
  }
  return s;
}

std::vector<Peak> find_peaks(const Spectrum& s, int k, double min_sep_hz, double f_min_hz) {
  std::vector<Peak> cand;
  const auto& m = s.magnitude;
  for (size_t i = 1; i + 1 < m.size(); ++i) {
    if (s.freq_hz[i] < f_min_hz || !(m[i] > m[i - 1] && m[i] >= m[i + 1])) continue;
    const double a = m[i - 1], b = m[i], c = m[i + 1];
    const double den = a - 2 * b + c;
    const double d = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
    const double df = s.freq_hz[1] - s.freq_hz[0];
    cand.push_back({s.freq_hz[i] + d * df, b - 0.25 * (a - c) * d});
  }
  std::sort(cand.begin(), cand.end(), [](const Peak& x, const Peak& y) { return x.magnitude > y.magnitude; });
  std::vector<Peak> out;
  for (const auto& p : cand) {
    if (static_cast<int>(out.size()) >= k) break;
    bool clear = std::all_of(out.begin(), out.end(),
                             [&](const Peak& q) { return std::abs(q.freq_hz - p.freq_hz) >= min_sep_hz; });
    if (clear) out.push_back(p);
  }
  return out;
}

std::vector<double> bandpass(const std::vector<double>& y, double dt, double f_lo, double f_hi, double edge_hz) {
  if (y.empty()) throw NumericalError("bandpass: empty signal");
  if (!(f_lo < f_hi)) throw NumericalError("bandpass: f_lo must be below f_hi");
  const size_t n = y.size();
  // pad to twice the length so the circular wrap does not fold the tail onto the head
  const size_t m = next_pow2(2 * n);
  auto X = forward(y, m);
  for (size_t k = 0; k < X.size(); ++k) {
    const double f = k / (m * dt);
    double g;
    if (f >= f_lo && f <= f_hi) g = 1.0;
    else if (edge_hz > 0 && f < f_lo && f > f_lo - edge_hz) g = 0.5 - 0.5 * std::cos(std::numbers::pi * (f - f_lo + edge_hz) / edge_hz);
    else if (edge_hz > 0 && f > f_hi && f < f_hi + edge_hz) g = 0.5 + 0.5 * std::cos(std::numbers::pi * (f - f_hi) / edge_hz);
    else g = 0.0;
    X[k] *= g;
  }
  auto full = inverse(X, m);
  full.resize(n);
  return full;
}

} // namespace mtdc
