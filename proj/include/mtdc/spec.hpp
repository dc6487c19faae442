#pragma once
#include <optional>
#include <string>
#include <vector>

namespace mtdc {

enum class ControlMode { DcVoltageQ, PQ };

// Outer-loop and PLL gains are per unit; inner current-loop gains are SI (V/A, V/(A s)).
struct ControllerGains {
  std::optional<double> tau_i; // s; resolved into k_p_i, k_i_i by validate_spec
  double k_p_i = 0.0;
  double k_i_i = 0.0;
  double k_p_pll = 10.0;
  double k_i_pll = 50.0;
  double k_p_P = 0.1;
  double k_i_P = 100.0;
  double k_p_Q = 0.2;
  double k_i_Q = 110.0;
  double k_p_dc = 2.25;
  double k_i_dc = 100.0;
};

struct MeasurementFilters {
  double t_mvd = 0.02;
  double t_mvq = 0.02;
  double t_mid = 0.0012;
  double t_miq = 0.0012;
  double t_vdc = 0.01;
};

// Units as written in config files: MVA, kV, MW, MVAr, ohm, H, F.
struct TerminalSpec {
  std::string id;
  double s_rated = 0.0;
  double v_ac_base = 0.0;
  double v_dc_base = 0.0;
  ControlMode control_mode = ControlMode::PQ;
  double p_ref = 0.0;
  double q_ref = 0.0;
  std::optional<double> v_dc_ref;
  std::optional<double> scr;
  std::optional<double> r_g;
  std::optional<double> l_g;
  double v_grid_mag = 1.0;
  double r_c = 0.0;
  double l_c = 0.0;
  double c_f = 0.0;
  double c_vsc = 0.0;
  ControllerGains gains;
  MeasurementFilters meas_filters;
};

struct CableSpec {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;   // km
  double r_per_km = 0.0; // ohm/km
  double l_per_km = 0.0; // H/km
  double c_per_km = 0.0; // F/km
};

struct GridSpec {
  std::string name;
  double system_frequency = 50.0;
  std::vector<TerminalSpec> terminals;
  std::vector<CableSpec> cables;
};

// A GridSpec whose invariants hold, with derived quantities resolved:
// every terminal carries explicit (r_g, l_g) and explicit inner gains.
struct ValidatedGridSpec {
  GridSpec spec;
  int slack = -1;
  std::vector<int> cable_from;
  std::vector<int> cable_to;

  const TerminalSpec& terminal(int n) const { return spec.terminals[n]; }
  int n_terminals() const { return static_cast<int>(spec.terminals.size()); }
  int n_cables() const { return static_cast<int>(spec.cables.size()); }
  int terminal_index(const std::string& id) const;
  int cable_index(const std::string& id) const;
};

GridSpec parse_grid_spec(const std::string& text);
GridSpec load_grid_spec(const std::string& path);
ValidatedGridSpec validate_spec(const GridSpec& spec);
std::string to_config_text(const GridSpec& spec);

// l_g in H from short-circuit ratio; s_rated in MVA, v_ac_base in kV.
double scr_to_impedance(double scr, double s_rated, double v_ac_base, double r_g, double f);

// Scalar parameter addressed as "<terminal>.<name>" or "dc.<cable>.<name>".
struct ParameterRef {
  std::string owner; // terminal id or "dc"
  std::string cable; // cable id when owner == "dc"
  std::string name;

  static ParameterRef parse(const std::string& path);
  std::string path() const;
  std::string units() const;
};

double get_parameter(const GridSpec& spec, const ParameterRef& p);
void set_parameter(GridSpec& spec, const ParameterRef& p, double value);
const std::vector<std::string>& terminal_parameter_names();
const std::vector<std::string>& cable_parameter_names();

} // namespace mtdc
