// io.cpp — output plumbing.
#include "treewalk/io.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace treewalk {

std::string fmt_double(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

void write_text_atomic(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
    f << text;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::string& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

namespace {

u64 fnv1a(const std::string& s) {
  u64 h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::string run_manifest::id() const {
  std::string canonical =
      command + "\n" + config.dump() + "\n" + std::to_string(seed) + "\n" + version;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a(canonical));
  return buf;
}

json run_manifest::identity_json() const {
  json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["version"] = version;
  j["id"] = id();
  return j;
}

std::string write_manifest(const std::string& stem, const run_manifest& m) {
  json j = m.identity_json();
  j["outputs"] = m.outputs;
  // sibling reference by filename: the manifest must not depend on where the
  // run happened to put its outputs
  size_t slash = stem.find_last_of('/');
  std::string base = slash == std::string::npos ? stem : stem.substr(slash + 1);
  j["timings_file"] = base + ".timings.json";
  std::string path = stem + ".manifest.json";
  write_json_atomic(path, j);
  json t;
  t["id"] = m.id();
  t["elapsed_seconds"] = m.elapsed_seconds;
  write_json_atomic(stem + ".timings.json", t);
  return path;
}

std::string csv_table::render(const std::string& manifest_path) const {
  std::string out = "# manifest: " + manifest_path + "\n";
  for (size_t i = 0; i < columns.size(); ++i)
    out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i)
      out += (i ? "," : "") + r[i];
    out += "\n";
  }
  return out;
}

std::string resolve_out_dir(const std::string& flag_value) {
  std::string dir = flag_value;
  if (dir.empty()) {
    const char* env = std::getenv("TREEWALK_OUT");
    dir = env && *env ? env : ".";
  }
  std::filesystem::create_directories(dir);
  return dir;
}

std::string path_join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace treewalk
