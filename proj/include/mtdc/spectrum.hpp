#pragma once
#include <vector>

namespace mtdc {

enum class WindowFn { Hann, Rectangular };

// One-sided amplitude spectrum: a unit-amplitude sinusoid shows magnitude ~1 at its bin.
struct Spectrum {
  std::vector<double> freq_hz;
  std::vector<double> magnitude;
  double resolution_hz = 0.0; // 1 / window length, before zero padding
};

struct Peak {
  double freq_hz = 0.0;
  double magnitude = 0.0;
};

// Mean is removed before windowing; the record is zero padded to the next power of two.
Spectrum amplitude_spectrum(const std::vector<double>& y, double dt, WindowFn w = WindowFn::Hann,
                            bool zero_pad = true);

// Largest local maxima, refined by parabolic interpolation, at least min_sep_hz apart.
std::vector<Peak> find_peaks(const Spectrum& s, int k, double min_sep_hz = 0.0, double f_min_hz = 0.0);

// Zero-phase band-pass by masking FFT bins outside [f_lo, f_hi] (with a raised-cosine edge of width `edge_hz`).
std::vector<double> bandpass(const std::vector<double>& y, double dt, double f_lo, double f_hi, double edge_hz = 0.0);

} // namespace mtdc
