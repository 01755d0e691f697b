// io.hpp — machine-readable outputs: canonical JSON/CSV formatting, atomic
// writes, and run manifests tying every artifact to the exact config and
// seed that produced it.  Timings go to a sidecar so data outputs from equal
// configs stay byte-identical.
#pragma once
#include "treewalk/topology.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace treewalk {

using json = nlohmann::json;

std::string fmt_double(double v);  // shortest round-trip decimal

void write_text_atomic(const std::string& path, const std::string& text);
void write_json_atomic(const std::string& path, const json& j);  // sorted keys

struct run_manifest {
  std::string command;
  json config = json::object();
  u64 seed = 0;
  std::string version = "treewalk 1.0.0";
  std::vector<std::string> outputs;     // data files written by the run
  double elapsed_seconds = -1;          // sidecar only, never in the identity
  std::string id() const;               // stable hash of command/config/seed/version
  json identity_json() const;
};
// Writes <stem>.manifest.json and <stem>.timings.json; returns the manifest path.
std::string write_manifest(const std::string& stem, const run_manifest& m);

// CSV with a leading "# manifest: <path>" comment and a header row.
struct csv_table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  void add_row(std::vector<std::string> r) { rows.push_back(std::move(r)); }
  std::string render(const std::string& manifest_path) const;
};

// --out flag if set, else the TREEWALK_OUT environment variable, else ".";
// creates the directory if needed.
std::string resolve_out_dir(const std::string& flag_value);
std::string path_join(const std::string& dir, const std::string& name);

}  // namespace treewalk
