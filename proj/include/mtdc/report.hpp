#pragma once
#include "mtdc/modal.hpp"
#include "mtdc/spec.hpp"
#include "mtdc/sweep.hpp"
#include "mtdc/timesim.hpp"

#include "json.hpp"

#include <string>

namespace mtdc {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.3.0";

std::string fnv1a_hex(const std::string& text);

struct RunManifest {
  std::string command;
  std::string config_hash; // FNV-1a 64 of the resolved configuration text
  std::string tool_version = kToolVersion;
  std::string timestamp;   // UTC, ISO 8601
  int seed = 0;
  ojson parameters;        // every resolved model parameter
  ojson options;           // effective command options, defaults included

  ojson to_json() const;
  std::string csv_header() const; // "# key: value" lines
};

RunManifest make_manifest(const std::string& command, const ValidatedGridSpec& vs, const ojson& options, int seed);

// All terminal and cable parameters of the resolved spec, keyed by parameter path.
ojson resolved_parameters(const ValidatedGridSpec& vs);

// Write to "<path>.tmp" then rename over `path`.
void write_atomic(const std::string& path, const std::string& content);

// JSON text with the manifest under "manifest" (first key) when given.
std::string json_document(const ojson& body, const RunManifest* manifest);
// CSV text with the manifest as leading comment lines when given.
std::string csv_document(const std::string& csv, const RunManifest* manifest);

ojson modal_report_json(const ModalReport& r);
// One row per mode: id, re, im, zeta, freq_hz, dominant, kind, nature, label, then one column per group.
std::string modal_report_csv(const ModalReport& r);

ojson cross_validation_json(const CrossValidation& cv);
std::string cross_validation_csv(const CrossValidation& cv);

std::string complex_text(cplx z, int precision = 6);

} // namespace mtdc
