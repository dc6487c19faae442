#include "mtdc/spec.hpp"
#include "mtdc/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace mtdc {

namespace pt = boost::property_tree;

namespace {

// Line of `key` inside `[section]`, or of the section header when key is empty.
int find_line(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  int n = 0, section_line = 0;
  bool inside = false;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[') {
      inside = trim(t.substr(1, t.find(']') - 1)) == section;
      if (inside) section_line = n;
      continue;
    }
    if (inside && !key.empty()) {
      auto eq = t.find('=');
      if (eq != std::string::npos && trim(t.substr(0, eq)) == key) return n;
    }
  }
  return section_line;
}

struct Reader {
  const std::string& text;

  std::string where(const std::string& section, const std::string& key) const {
    int line = find_line(text, section, key);
    std::string w = key.empty() ? "[" + section + "]" : section + "." + key;
    return line > 0 ? w + " (line " + std::to_string(line) + ")" : w;
  }

  double number(const std::string& section, const std::string& key, const std::string& raw) const {
    try {
      size_t used = 0;
      double v = std::stod(raw, &used);
      if (raw.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(where(section, key) + ": expected a number, got '" + raw + "'");
    }
  }
};

const std::vector<std::string> kGainKeys = {"tau_i",  "k_p_i",  "k_i_i", "k_p_pll", "k_i_pll",
                                            "k_p_P",  "k_i_P",  "k_p_Q", "k_i_Q",   "k_p_dc",
                                            "k_i_dc", "t_mvd",  "t_mvq", "t_mid",   "t_miq",
                                            "t_vdc"};

double* gain_field(ControllerGains& g, MeasurementFilters& f, const std::string& key) {
  static const std::map<std::string, double ControllerGains::*> gains = {
      {"k_p_i", &ControllerGains::k_p_i},   {"k_i_i", &ControllerGains::k_i_i},
      {"k_p_pll", &ControllerGains::k_p_pll}, {"k_i_pll", &ControllerGains::k_i_pll},
      {"k_p_P", &ControllerGains::k_p_P},   {"k_i_P", &ControllerGains::k_i_P},
      {"k_p_Q", &ControllerGains::k_p_Q},   {"k_i_Q", &ControllerGains::k_i_Q},
      {"k_p_dc", &ControllerGains::k_p_dc}, {"k_i_dc", &ControllerGains::k_i_dc}};
  static const std::map<std::string, double MeasurementFilters::*> filters = {
      {"t_mvd", &MeasurementFilters::t_mvd}, {"t_mvq", &MeasurementFilters::t_mvq},
      {"t_mid", &MeasurementFilters::t_mid}, {"t_miq", &MeasurementFilters::t_miq},
      {"t_vdc", &MeasurementFilters::t_vdc}};
  if (auto it = gains.find(key); it != gains.end()) return &(g.*(it->second));
  if (auto it = filters.find(key); it != filters.end()) return &(f.*(it->second));
  return nullptr;
}

// Controller keys found in one section. Inner-loop settings are kept apart so a
// terminal-level tau_i or (k_p_i, k_i_i) replaces the [controllers] choice as a whole.
struct ControllerOverrides {
  std::map<std::string, double> values;
  bool has_inner() const {
    return values.count("tau_i") || values.count("k_p_i") || values.count("k_i_i");
  }
};

void apply_overrides(const ControllerOverrides& o, ControllerGains& g, MeasurementFilters& f) {
  if (o.has_inner()) {
    g.tau_i.reset();
    g.k_p_i = g.k_i_i = 0.0;
  }
  for (const auto& [k, v] : o.values) {
    if (k == "tau_i") g.tau_i = v;
    else *gain_field(g, f, k) = v;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

int ValidatedGridSpec::terminal_index(const std::string& id) const {
  for (int n = 0; n < n_terminals(); ++n)
    if (spec.terminals[n].id == id) return n;
  return -1;
}

int ValidatedGridSpec::cable_index(const std::string& id) const {
  for (int k = 0; k < n_cables(); ++k)
    if (spec.cables[k].id == id) return k;
  return -1;
}

GridSpec parse_grid_spec(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  Reader rd{text};
  GridSpec spec;
  ControllerOverrides global;
  global.values["tau_i"] = 1e-3;

  struct PendingTerminal {
    std::string section;
    TerminalSpec t;
    ControllerOverrides own;
  };
  std::vector<PendingTerminal> pending;

  for (const auto& [section, body] : tree) {
    if (body.data().size() && body.empty())
      throw ConfigError("key '" + section + "' outside of any section");
    auto values = [&](const std::function<void(const std::string&, const std::string&)>& fn) {
      for (const auto& [k, v] : body) fn(k, v.data());
    };
    if (section == "system") {
      values([&](const std::string& k, const std::string& v) {
        if (k == "name") spec.name = v;
        else if (k == "frequency" || k == "system_frequency")
          spec.system_frequency = rd.number(section, k, v);
        else throw ConfigError(rd.where(section, k) + ": unknown key");
      });
    } else if (section == "controllers") {
      ControllerOverrides o;
      values([&](const std::string& k, const std::string& v) {
        if (std::find(kGainKeys.begin(), kGainKeys.end(), k) == kGainKeys.end())
          throw ConfigError(rd.where(section, k) + ": unknown key");
        o.values[k] = rd.number(section, k, v);
      });
      if (o.has_inner()) global.values.erase("tau_i");
      for (auto& [k, v] : o.values) global.values[k] = v;
    } else if (section.rfind("terminal.", 0) == 0) {
      PendingTerminal p;
      p.section = section;
      p.t.id = section.substr(9);
      if (p.t.id.empty() || p.t.id.find('.') != std::string::npos || p.t.id == "dc")
        throw ConfigError(rd.where(section, "") + ": invalid terminal id '" + p.t.id + "'");
      std::set<std::string> seen;
      values([&](const std::string& k, const std::string& v) {
        seen.insert(k);
        TerminalSpec& t = p.t;
        if (k == "control_mode") {
          std::string m = v;
          std::transform(m.begin(), m.end(), m.begin(), ::tolower);
          if (m == "dc_voltage_q" || m == "dvc") t.control_mode = ControlMode::DcVoltageQ;
          else if (m == "pq") t.control_mode = ControlMode::PQ;
          else throw ConfigError(rd.where(section, k) + ": expected DC_VOLTAGE_Q or PQ, got '" + v + "'");
          return;
        }
        if (std::find(kGainKeys.begin(), kGainKeys.end(), k) != kGainKeys.end()) {
          p.own.values[k] = rd.number(section, k, v);
          return;
        }
        static const std::set<std::string> numeric = {"s_rated", "v_ac_base", "v_dc_base", "p_ref", "q_ref",
                                                      "v_dc_ref", "scr", "r_g", "l_g", "v_grid_mag",
                                                      "r_c", "l_c", "c_f", "c_vsc"};
        if (!numeric.count(k)) throw ConfigError(rd.where(section, k) + ": unknown key");
        double x = rd.number(section, k, v);
        if (k == "s_rated") t.s_rated = x;
        else if (k == "v_ac_base") t.v_ac_base = x;
        else if (k == "v_dc_base") t.v_dc_base = x;
        else if (k == "p_ref") t.p_ref = x;
        else if (k == "q_ref") t.q_ref = x;
        else if (k == "v_dc_ref") t.v_dc_ref = x;
        else if (k == "scr") t.scr = x;
        else if (k == "r_g") t.r_g = x;
        else if (k == "l_g") t.l_g = x;
        else if (k == "v_grid_mag") t.v_grid_mag = x;
        else if (k == "r_c") t.r_c = x;
        else if (k == "l_c") t.l_c = x;
        else if (k == "c_f") t.c_f = x;
        else if (k == "c_vsc") t.c_vsc = x;
        else throw ConfigError(rd.where(section, k) + ": unknown key");
      });
      for (const char* req : {"s_rated", "v_ac_base", "v_dc_base", "control_mode", "r_c", "l_c", "c_f", "c_vsc"})
        if (!seen.count(req))
          throw ConfigError(rd.where(section, "") + ": missing mandatory field '" + req + "'");
      pending.push_back(std::move(p));
    } else if (section.rfind("cable.", 0) == 0) {
      CableSpec c;
      c.id = section.substr(6);
      if (c.id.empty()) throw ConfigError(rd.where(section, "") + ": empty cable id");
      std::set<std::string> seen;
      values([&](const std::string& k, const std::string& v) {
        seen.insert(k);
        static const std::set<std::string> known = {"from", "to", "length", "r_per_km", "l_per_km", "c_per_km"};
        if (!known.count(k)) throw ConfigError(rd.where(section, k) + ": unknown key");
        if (k == "from") c.from = v;
        else if (k == "to") c.to = v;
        else if (k == "length") c.length = rd.number(section, k, v);
        else if (k == "r_per_km") c.r_per_km = rd.number(section, k, v);
        else if (k == "l_per_km") c.l_per_km = rd.number(section, k, v);
        else if (k == "c_per_km") c.c_per_km = rd.number(section, k, v);
        else throw ConfigError(rd.where(section, k) + ": unknown key");
      });
      for (const char* req : {"from", "to", "length", "r_per_km", "l_per_km", "c_per_km"})
        if (!seen.count(req))
          throw ConfigError(rd.where(section, "") + ": missing mandatory field '" + req + "'");
      spec.cables.push_back(c);
    } else {
      throw ConfigError(rd.where(section, "") + ": unknown section");
    }
  }
  for (auto& p : pending) {
    apply_overrides(global, p.t.gains, p.t.meas_filters);
    apply_overrides(p.own, p.t.gains, p.t.meas_filters);
    spec.terminals.push_back(std::move(p.t));
  }
  return spec;
}

GridSpec load_grid_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_grid_spec(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

double scr_to_impedance(double scr, double s_rated, double v_ac_base, double r_g, double f) {
  if (!(scr > 0)) throw ValidationError("scr must be positive");
  if (!(s_rated > 0) || !(v_ac_base > 0) || !(f > 0)) throw ValidationError("scr_to_impedance: non-positive base");
  double v = v_ac_base * 1e3;
  double z = v * v / (scr * s_rated * 1e6);
  double x2 = z * z - r_g * r_g;
  if (!(x2 > 0))
    throw ValidationError("grid resistance " + fmt(r_g) + " ohm exceeds impedance " + fmt(z) + " ohm implied by SCR " + fmt(scr));
  return std::sqrt(x2) / (2.0 * std::numbers::pi * f);
}

ValidatedGridSpec validate_spec(const GridSpec& in) {
  ValidatedGridSpec v;
  v.spec = in;
  std::vector<std::string> errs;
  auto& spec = v.spec;
  if (!(spec.system_frequency > 0)) errs.push_back("system: frequency must be positive");
  if (spec.terminals.size() < 2) errs.push_back("grid needs at least 2 terminals");

  std::map<std::string, int> ids;
  int n_dvc = 0;
  for (int n = 0; n < static_cast<int>(spec.terminals.size()); ++n) {
    auto& t = spec.terminals[n];
    std::string w = "terminal " + t.id + ": ";
    if (ids.count(t.id)) errs.push_back(w + "duplicate terminal id");
    ids[t.id] = n;
    if (!(t.s_rated > 0)) errs.push_back(w + "s_rated must be > 0");
    if (!(t.v_ac_base > 0)) errs.push_back(w + "v_ac_base must be > 0");
    if (!(t.v_dc_base > 0)) errs.push_back(w + "v_dc_base must be > 0");
    if (!(t.l_c > 0)) errs.push_back(w + "l_c must be > 0");
    if (!(t.r_c >= 0)) errs.push_back(w + "r_c must be >= 0");
    if (!(t.c_f > 0)) errs.push_back(w + "c_f must be > 0");
    if (!(t.c_vsc > 0)) errs.push_back(w + "c_vsc must be > 0");
    if (!(t.v_grid_mag > 0)) errs.push_back(w + "v_grid_mag must be > 0");
    if (std::abs(t.p_ref) > t.s_rated) errs.push_back(w + "|p_ref| exceeds s_rated");
    if (t.control_mode == ControlMode::DcVoltageQ) {
      ++n_dvc;
      if (!t.v_dc_ref) errs.push_back(w + "v_dc_ref is required for DC_VOLTAGE_Q");
      else if (!(*t.v_dc_ref > 0)) errs.push_back(w + "v_dc_ref must be > 0");
    } else if (t.v_dc_ref) {
      errs.push_back(w + "v_dc_ref given for a PQ terminal");
    }
    if (t.scr && t.l_g) errs.push_back(w + "give either scr or (r_g, l_g), not both");
    else if (!t.scr && !t.l_g) errs.push_back(w + "grid strength missing: give scr or (r_g, l_g)");
    else if (t.l_g && !t.r_g) errs.push_back(w + "l_g given without r_g");
    else {
      double rg = t.r_g.value_or(0.0);
      if (rg < 0) errs.push_back(w + "r_g must be >= 0");
      if (t.scr) {
        try {
          t.l_g = scr_to_impedance(*t.scr, t.s_rated, t.v_ac_base, rg, spec.system_frequency);
          t.r_g = rg;
          t.scr.reset();
        } catch (const ValidationError& e) {
          errs.push_back(w + e.what());
        }
      } else if (!(*t.l_g > 0)) {
        errs.push_back(w + "l_g must be > 0");
      }
    }
    auto& g = t.gains;
    if (g.tau_i) {
      if (!(*g.tau_i > 0)) errs.push_back(w + "tau_i must be > 0");
      else {
        g.k_p_i = t.l_c / *g.tau_i;
        g.k_i_i = t.r_c / *g.tau_i;
        g.tau_i.reset();
      }
    }
    for (double k : {g.k_p_i, g.k_i_i, g.k_p_pll, g.k_i_pll, g.k_p_P, g.k_i_P, g.k_p_Q, g.k_i_Q, g.k_p_dc, g.k_i_dc})
      if (!(k >= 0)) {
        errs.push_back(w + "controller gains must be >= 0");
        break;
      }
    auto& f = t.meas_filters;
    for (double tc : {f.t_mvd, f.t_mvq, f.t_mid, f.t_miq, f.t_vdc})
      if (!(tc > 0)) {
        errs.push_back(w + "measurement filter time constants must be > 0");
        break;
      }
  }
  if (n_dvc == 0) errs.push_back("no DC-voltage-controlling terminal");
  if (n_dvc > 1) errs.push_back("more than one DC-voltage-controlling terminal");

  std::set<std::pair<std::string, std::string>> pairs;
  std::set<std::string> cable_ids;
  for (auto& c : spec.cables) {
    std::string w = "cable " + c.id + ": ";
    if (cable_ids.count(c.id)) errs.push_back(w + "duplicate cable id");
    cable_ids.insert(c.id);
    bool ends_ok = true;
    for (const auto& end : {c.from, c.to})
      if (!ids.count(end)) {
        errs.push_back(w + "references undeclared terminal '" + end + "'");
        ends_ok = false;
      }
    if (c.from == c.to) errs.push_back(w + "from and to are the same terminal");
    auto key = std::minmax(c.from, c.to);
    if (pairs.count(key)) errs.push_back(w + "duplicate cable between " + key.first + " and " + key.second);
    pairs.insert(key);
    if (!(c.length > 0)) errs.push_back(w + "length must be > 0");
    if (!(c.r_per_km > 0) || !(c.l_per_km > 0) || !(c.c_per_km > 0))
      errs.push_back(w + "per-km parameters must be > 0");
    v.cable_from.push_back(ends_ok ? ids[c.from] : -1);
    v.cable_to.push_back(ends_ok ? ids[c.to] : -1);
  }

  // connectivity by traversal
  int nt = static_cast<int>(spec.terminals.size());
  if (nt >= 2 && errs.empty()) {
    std::vector<int> comp(nt, -1);
    int ncomp = 0;
    for (int s = 0; s < nt; ++s) {
      if (comp[s] >= 0) continue;
      std::vector<int> stack{s};
      comp[s] = ncomp;
      while (!stack.empty()) {
        int a = stack.back();
        stack.pop_back();
        for (size_t k = 0; k < spec.cables.size(); ++k) {
          int b = v.cable_from[k] == a ? v.cable_to[k] : v.cable_to[k] == a ? v.cable_from[k] : -1;
          if (b >= 0 && comp[b] < 0) {
            comp[b] = ncomp;
            stack.push_back(b);
          }
        }
      }
      ++ncomp;
    }
    if (ncomp > 1) {
      std::string msg = "DC network is disconnected; components:";
      for (int c = 0; c < ncomp; ++c) {
        msg += " {";
        bool first = true;
        for (int n = 0; n < nt; ++n)
          if (comp[n] == c) {
            msg += (first ? "" : ", ") + spec.terminals[n].id;
            first = false;
          }
        msg += "}";
      }
      errs.push_back(msg);
    }
  }

  if (!errs.empty()) {
    std::string msg;
    for (auto& e : errs) msg += (msg.empty() ? "" : "\n") + e;
    throw ValidationError(msg);
  }
  for (int n = 0; n < nt; ++n)
    if (spec.terminals[n].control_mode == ControlMode::DcVoltageQ) v.slack = n;
  return v;
}

std::string to_config_text(const GridSpec& spec) {
  std::ostringstream os;
  os << "[system]\n";
  if (!spec.name.empty()) os << "name = " << spec.name << "\n";
  os << "frequency = " << fmt(spec.system_frequency) << "\n";
  for (const auto& t : spec.terminals) {
    os << "\n[terminal." << t.id << "]\n";
    os << "s_rated = " << fmt(t.s_rated) << "\nv_ac_base = " << fmt(t.v_ac_base)
       << "\nv_dc_base = " << fmt(t.v_dc_base) << "\ncontrol_mode = "
       << (t.control_mode == ControlMode::DcVoltageQ ? "DC_VOLTAGE_Q" : "PQ") << "\n";
    os << "p_ref = " << fmt(t.p_ref) << "\nq_ref = " << fmt(t.q_ref) << "\n";
    if (t.v_dc_ref) os << "v_dc_ref = " << fmt(*t.v_dc_ref) << "\n";
    if (t.scr) os << "scr = " << fmt(*t.scr) << "\n";
    if (t.r_g) os << "r_g = " << fmt(*t.r_g) << "\n";
    if (t.l_g && !t.scr) os << "l_g = " << fmt(*t.l_g) << "\n";
    os << "v_grid_mag = " << fmt(t.v_grid_mag) << "\nr_c = " << fmt(t.r_c) << "\nl_c = " << fmt(t.l_c)
       << "\nc_f = " << fmt(t.c_f) << "\nc_vsc = " << fmt(t.c_vsc) << "\n";
    const auto& g = t.gains;
    if (g.tau_i) os << "tau_i = " << fmt(*g.tau_i) << "\n";
    else os << "k_p_i = " << fmt(g.k_p_i) << "\nk_i_i = " << fmt(g.k_i_i) << "\n";
    os << "k_p_pll = " << fmt(g.k_p_pll) << "\nk_i_pll = " << fmt(g.k_i_pll) << "\nk_p_P = " << fmt(g.k_p_P)
       << "\nk_i_P = " << fmt(g.k_i_P) << "\nk_p_Q = " << fmt(g.k_p_Q) << "\nk_i_Q = " << fmt(g.k_i_Q)
       << "\nk_p_dc = " << fmt(g.k_p_dc) << "\nk_i_dc = " << fmt(g.k_i_dc) << "\n";
    const auto& f = t.meas_filters;
    os << "t_mvd = " << fmt(f.t_mvd) << "\nt_mvq = " << fmt(f.t_mvq) << "\nt_mid = " << fmt(f.t_mid)
       << "\nt_miq = " << fmt(f.t_miq) << "\nt_vdc = " << fmt(f.t_vdc) << "\n";
  }
  for (const auto& c : spec.cables) {
    os << "\n[cable." << c.id << "]\nfrom = " << c.from << "\nto = " << c.to << "\nlength = " << fmt(c.length)
       << "\nr_per_km = " << fmt(c.r_per_km) << "\nl_per_km = " << fmt(c.l_per_km)
       << "\nc_per_km = " << fmt(c.c_per_km) << "\n";
  }
  return os.str();
}

// ---- parameter access ----

const std::vector<std::string>& terminal_parameter_names() {
  static const std::vector<std::string> names = {
      "p_ref", "q_ref", "v_dc_ref", "scr",    "r_g",    "l_g",     "v_grid_mag", "r_c",   "l_c",
      "c_f",   "c_vsc", "tau_i",    "k_p_i",  "k_i_i",  "k_p_pll", "k_i_pll",    "k_p_P", "k_i_P",
      "k_p_Q", "k_i_Q", "k_p_dc",   "k_i_dc", "t_mvd",  "t_mvq",   "t_mid",      "t_miq", "t_vdc"};
  return names;
}

const std::vector<std::string>& cable_parameter_names() {
  static const std::vector<std::string> names = {"length", "r_per_km", "l_per_km", "c_per_km"};
  return names;
}

ParameterRef ParameterRef::parse(const std::string& path) {
  ParameterRef p;
  auto first = path.find('.');
  if (first == std::string::npos || first == 0) throw ConfigError("bad parameter path '" + path + "'");
  p.owner = path.substr(0, first);
  std::string rest = path.substr(first + 1);
  if (p.owner == "dc") {
    auto dot = rest.rfind('.');
    if (dot == std::string::npos || dot == 0) throw ConfigError("bad parameter path '" + path + "', expected dc.<cable>.<name>");
    p.cable = rest.substr(0, dot);
    p.name = rest.substr(dot + 1);
    const auto& names = cable_parameter_names();
    if (std::find(names.begin(), names.end(), p.name) == names.end())
      throw ConfigError("unknown cable parameter '" + p.name + "'");
  } else {
    p.name = rest;
    const auto& names = terminal_parameter_names();
    if (std::find(names.begin(), names.end(), p.name) == names.end())
      throw ConfigError("unknown terminal parameter '" + p.name + "'");
  }
  return p;
}

std::string ParameterRef::path() const {
  return owner == "dc" ? "dc." + cable + "." + name : owner + "." + name;
}

std::string ParameterRef::units() const {
  static const std::map<std::string, std::string> u = {
      {"p_ref", "MW"},      {"q_ref", "MVAr"}, {"v_dc_ref", "kV"}, {"scr", "-"},      {"r_g", "ohm"},
      {"l_g", "H"},         {"v_grid_mag", "pu"}, {"r_c", "ohm"},  {"l_c", "H"},      {"c_f", "F"},
      {"c_vsc", "F"},       {"tau_i", "s"},    {"k_p_i", "V/A"},   {"k_i_i", "V/(A s)"}, {"t_mvd", "s"},
      {"t_mvq", "s"},       {"t_mid", "s"},    {"t_miq", "s"},     {"t_vdc", "s"},    {"length", "km"},
      {"r_per_km", "ohm/km"}, {"l_per_km", "H/km"}, {"c_per_km", "F/km"}};
  auto it = u.find(name);
  return it == u.end() ? "pu" : it->second;
}

namespace {

template <class Spec>
auto& find_terminal(Spec& spec, const std::string& id) {
  for (auto& t : spec.terminals)
    if (t.id == id) return t;
  throw ConfigError("parameter refers to unknown terminal '" + id + "'");
}

template <class Spec>
auto& find_cable(Spec& spec, const std::string& id) {
  for (auto& c : spec.cables)
    if (c.id == id) return c;
  throw ConfigError("parameter refers to unknown cable '" + id + "'");
}

} // namespace

double get_parameter(const GridSpec& spec, const ParameterRef& p) {
  if (p.owner == "dc") {
    auto& c = find_cable(spec, p.cable);
    if (p.name == "length") return c.length;
    if (p.name == "r_per_km") return c.r_per_km;
    if (p.name == "l_per_km") return c.l_per_km;
    return c.c_per_km;
  }
  auto& t = find_terminal(spec, p.owner);
  const auto& n = p.name;
  if (n == "p_ref") return t.p_ref;
  if (n == "q_ref") return t.q_ref;
  if (n == "v_dc_ref") {
    if (!t.v_dc_ref) throw ConfigError(p.path() + ": terminal has no DC voltage reference");
    return *t.v_dc_ref;
  }
  if (n == "scr") {
    if (t.scr) return *t.scr;
    double v = t.v_ac_base * 1e3;
    double z = std::hypot(t.r_g.value_or(0.0), 2 * std::numbers::pi * spec.system_frequency * t.l_g.value_or(0.0));
    return v * v / (z * t.s_rated * 1e6);
  }
  if (n == "r_g") return t.r_g.value_or(0.0);
  if (n == "l_g") {
    if (t.l_g) return *t.l_g;
    return scr_to_impedance(*t.scr, t.s_rated, t.v_ac_base, t.r_g.value_or(0.0), spec.system_frequency);
  }
  if (n == "v_grid_mag") return t.v_grid_mag;
  if (n == "r_c") return t.r_c;
  if (n == "l_c") return t.l_c;
  if (n == "c_f") return t.c_f;
  if (n == "c_vsc") return t.c_vsc;
  if (n == "tau_i") {
    if (t.gains.tau_i) return *t.gains.tau_i;
    if (t.gains.k_p_i > 0) return t.l_c / t.gains.k_p_i;
    throw ConfigError(p.path() + ": inner gains are not defined by a time constant");
  }
  if (n == "k_p_i") return t.gains.tau_i ? t.l_c / *t.gains.tau_i : t.gains.k_p_i;
  if (n == "k_i_i") return t.gains.tau_i ? t.r_c / *t.gains.tau_i : t.gains.k_i_i;
  ControllerGains g = t.gains;
  MeasurementFilters f = t.meas_filters;
  return *gain_field(g, f, n);
}

void set_parameter(GridSpec& spec, const ParameterRef& p, double value) {
  if (p.owner == "dc") {
    auto& c = find_cable(spec, p.cable);
    if (p.name == "length") c.length = value;
    else if (p.name == "r_per_km") c.r_per_km = value;
    else if (p.name == "l_per_km") c.l_per_km = value;
    else c.c_per_km = value;
    return;
  }
  auto& t = find_terminal(spec, p.owner);
  const auto& n = p.name;
  auto resolve_inner = [&] {
    if (t.gains.tau_i) {
      t.gains.k_p_i = t.l_c / *t.gains.tau_i;
      t.gains.k_i_i = t.r_c / *t.gains.tau_i;
      t.gains.tau_i.reset();
    }
  };
  if (n == "p_ref") t.p_ref = value;
  else if (n == "q_ref") t.q_ref = value;
  else if (n == "v_dc_ref") t.v_dc_ref = value;
  else if (n == "scr") {
    t.scr = value;
    t.l_g.reset();
  } else if (n == "r_g") {
    if (t.scr && !t.l_g) t.l_g = get_parameter(spec, ParameterRef{t.id, "", "l_g"});
    t.scr.reset();
    t.r_g = value;
  } else if (n == "l_g") {
    if (!t.r_g) t.r_g = 0.0;
    t.scr.reset();
    t.l_g = value;
  } else if (n == "v_grid_mag") t.v_grid_mag = value;
  else if (n == "r_c") {
    resolve_inner();
    t.r_c = value;
  } else if (n == "l_c") {
    resolve_inner();
    t.l_c = value;
  } else if (n == "c_f") t.c_f = value;
  else if (n == "c_vsc") t.c_vsc = value;
  else if (n == "tau_i") t.gains.tau_i = value;
  else if (n == "k_p_i") {
    resolve_inner();
    t.gains.k_p_i = value;
  } else if (n == "k_i_i") {
    resolve_inner();
    t.gains.k_i_i = value;
  } else {
    *gain_field(t.gains, t.meas_filters, n) = value;
  }
}

} // namespace mtdc
