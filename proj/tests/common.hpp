#pragma once
#include "mtdc/spec.hpp"

#include <sstream>
#include <string>

namespace testing {

inline std::string config_path(const std::string& name) {
  return std::string(MTDC_SOURCE_DIR) + "/configs/" + name;
}

inline mtdc::ValidatedGridSpec paper_case(const std::string& name = "paper_4t.cfg") {
  return mtdc::validate_spec(mtdc::load_grid_spec(config_path(name)));
}

// Two terminals joined by one cable; T1 holds the DC voltage, T2 injects p2 MW.
inline std::string two_terminal_text(double p2 = 0.0, const std::string& extra_t2 = "") {
  std::ostringstream os;
  os << "[system]\nname = two\n\n";
  for (int n = 1; n <= 2; ++n) {
    os << "[terminal.T" << n << "]\ns_rated = 600\nv_ac_base = 300\nv_dc_base = 600\n";
    if (n == 1) os << "control_mode = DC_VOLTAGE_Q\nv_dc_ref = 600\n";
    else os << "control_mode = PQ\np_ref = " << p2 << "\n" << extra_t2;
    os << "q_ref = 0\nscr = 3\nr_g = 1.975\nr_c = 0.225\nl_c = 0.0716\nc_f = 3.12e-6\nc_vsc = 66.66e-6\n\n";
  }
  os << "[cable.1]\nfrom = T1\nto = T2\nlength = 100\nr_per_km = 0.0121\nl_per_km = 0.1056e-3\nc_per_km = 0.2961e-6\n";
  return os.str();
}

inline mtdc::ValidatedGridSpec two_terminal(double p2 = 0.0) {
  return mtdc::validate_spec(mtdc::parse_grid_spec(two_terminal_text(p2)));
}

} // namespace testing
