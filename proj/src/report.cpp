#include "mtdc/report.hpp"
#include "mtdc/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mtdc {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace

ojson resolved_parameters(const ValidatedGridSpec& vs) {
  ojson j = ojson::object();
  j["system.frequency"] = vs.spec.system_frequency;
  for (const auto& t : vs.spec.terminals) {
    j[t.id + ".control_mode"] = t.control_mode == ControlMode::PQ ? "PQ" : "DC_VOLTAGE_Q";
    for (const auto& n : terminal_parameter_names()) {
      try {
        j[t.id + "." + n] = get_parameter(vs.spec, ParameterRef{t.id, "", n});
      } catch (const ConfigError&) {
        // not defined for this terminal (v_dc_ref on a PQ terminal, tau_i on explicit gains)
      }
    }
  }
  for (const auto& c : vs.spec.cables) {
    j["dc." + c.id + ".from"] = c.from;
    j["dc." + c.id + ".to"] = c.to;
    for (const auto& n : cable_parameter_names()) j["dc." + c.id + "." + n] = get_parameter(vs.spec, {"dc", c.id, n});
  }
  return j;
}

RunManifest make_manifest(const std::string& command, const ValidatedGridSpec& vs, const ojson& options, int seed) {
  RunManifest m;
  m.command = command;
  m.config_hash = fnv1a_hex(to_config_text(vs.spec));
  m.timestamp = utc_now();
  m.seed = seed;
  m.parameters = resolved_parameters(vs);
  m.options = options;
  return m;
}

ojson RunManifest::to_json() const {
  return ojson{{"command", command},       {"config_hash", config_hash}, {"tool_version", tool_version},
               {"timestamp", timestamp},   {"seed", seed},               {"options", options},
               {"parameters", parameters}};
}

std::string RunManifest::csv_header() const {
  std::ostringstream os;
  os << "# command: " << command << "\n# config_hash: " << config_hash << "\n# tool_version: " << tool_version
     << "\n# timestamp: " << timestamp << "\n# seed: " << seed << "\n# options: " << options.dump()
     << "\n# parameters: " << parameters.dump() << "\n";
  return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) {
    fs::remove(tmp);
    throw ConfigError("cannot move output into place at '" + path + "': " + ec.message());
  }
}

std::string json_document(const ojson& body, const RunManifest* manifest) {
  if (!manifest) return body.dump(2) + "\n";
  ojson j;
  j["manifest"] = manifest->to_json();
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  return j.dump(2) + "\n";
}

std::string csv_document(const std::string& csv, const RunManifest* manifest) {
  return manifest ? manifest->csv_header() + csv : csv;
}

std::string complex_text(cplx z, int precision) {
  std::ostringstream os;
  os << std::setprecision(precision) << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "j";
  return os.str();
}

ojson modal_report_json(const ModalReport& r) {
  const auto groups = r.index.group_names();
  const int n = r.modes.size();
  ojson j;
  j["n_states"] = n;
  j["groups"] = groups;
  std::vector<int> dom_id(n, 0);
  for (size_t d = 0; d < r.dominant.size(); ++d) dom_id[r.dominant[d]] = static_cast<int>(d) + 1;
  j["dominant"] = ojson::array();
  for (size_t d = 0; d < r.dominant.size(); ++d) j["dominant"].push_back(r.dominant[d] + 1);
  auto& modes = j["modes"] = ojson::array();
  for (int k = 0; k < n; ++k) {
    const cplx l = r.modes.lambda[k];
    const auto& c = r.classes[k];
    ojson m;
    m["id"] = k + 1;
    m["re"] = l.real();
    m["im"] = l.imag();
    m["zeta"] = l == cplx(0.0) ? 0.0 : damping_factor(l);
    m["freq_hz"] = r.modes.freq_hz(k);
    m["dominant"] = dom_id[k] > 0;
    if (dom_id[k] > 0) m["dominant_id"] = dom_id[k];
    m["kind"] = to_string(c.kind);
    m["nature"] = to_string(c.nature);
    m["label"] = c.label;
    ojson dt = ojson::array();
    for (int t : c.dominant_terminals) dt.push_back(groups[t]);
    m["dominant_terminals"] = dt;
    ojson part;
    for (size_t g = 0; g < groups.size(); ++g) part[groups[g]] = r.agg(static_cast<int>(g), k).real();
    m["participation"] = part;
    m["lcm_condition"] = c.lcm_condition;
    m["icm_condition"] = c.icm_condition;
    modes.push_back(m);
  }
  return j;
}

std::string modal_report_csv(const ModalReport& r) {
  const auto groups = r.index.group_names();
  std::ostringstream os;
  os << std::setprecision(12) << "id,re,im,zeta,freq_hz,dominant,kind,nature,label";
  for (const auto& g : groups) os << ",p_" << g;
  os << "\n";
  for (int k = 0; k < r.modes.size(); ++k) {
    const cplx l = r.modes.lambda[k];
    const bool dom = std::find(r.dominant.begin(), r.dominant.end(), k) != r.dominant.end();
    os << k + 1 << ',' << l.real() << ',' << l.imag() << ',' << (l == cplx(0.0) ? 0.0 : damping_factor(l)) << ','
       << r.modes.freq_hz(k) << ',' << (dom ? 1 : 0) << ',' << to_string(r.classes[k].kind) << ','
       << to_string(r.classes[k].nature) << ',' << r.classes[k].label;
    for (size_t g = 0; g < groups.size(); ++g) os << ',' << r.agg(static_cast<int>(g), k).real();
    os << "\n";
  }
  return os.str();
}

ojson cross_validation_json(const CrossValidation& cv) {
  ojson j;
  j["scenario"] = cv.scenario;
  j["status"] = to_string(cv.status);
  j["diverged"] = cv.diverged;
  auto& rows = j["modes"] = ojson::array();
  for (const auto& m : cv.modes) {
    ojson r{{"mode", m.mode + 1},
            {"re", m.lambda.real()},
            {"im", m.lambda.imag()},
            {"sigma_linear", m.sigma},
            {"freq_linear_hz", m.freq_hz},
            {"amplitude_pu", m.amplitude},
            {"excited", m.excited}};
    if (m.excited) {
      r["window"] = {m.t0, m.t1};
      r["sigma_time_domain"] = m.modal.sigma;
      r["freq_time_domain_hz"] = m.modal.freq_hz;
      r["r2"] = m.modal.r2;
      r["err_sigma"] = m.err_sigma;
      r["err_freq"] = m.err_f;
      r["pass"] = m.pass;
      if (!m.channel.empty())
        r["channel"] = {{"name", m.channel},
                        {"sigma", m.physical.sigma},
                        {"freq_hz", m.physical.freq_hz},
                        {"r2", m.physical.r2}};
    }
    rows.push_back(r);
  }
  return j;
}

std::string cross_validation_csv(const CrossValidation& cv) {
  std::ostringstream os;
  os << std::setprecision(8)
     << "mode,sigma_linear,freq_linear_hz,amplitude_pu,excited,sigma_time_domain,freq_time_domain_hz,r2,err_sigma,"
        "err_freq,pass,channel,channel_sigma,channel_freq_hz\n";
  for (const auto& m : cv.modes) {
    os << m.mode + 1 << ',' << m.sigma << ',' << m.freq_hz << ',' << m.amplitude << ',' << (m.excited ? 1 : 0);
    if (m.excited)
      os << ',' << m.modal.sigma << ',' << m.modal.freq_hz << ',' << m.modal.r2 << ',' << m.err_sigma << ','
         << m.err_f << ',' << (m.pass ? 1 : 0) << ',' << m.channel << ',' << m.physical.sigma << ','
         << m.physical.freq_hz;
    else
      os << ",,,,,,,,,";
    os << "\n";
  }
  return os.str();
}

} // namespace mtdc
