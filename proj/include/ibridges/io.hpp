#pragma once

// Configuration parsing, graph JSON, CSV dumps and report serialization.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ibridges/error.hpp"
#include "ibridges/linalg.hpp"
#include "ibridges/sde.hpp"
#include "ibridges/verify.hpp"

namespace ibridges {

using json = nlohmann::json;

/// Bad configuration or input file; the CLI maps it to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Steps {
  double dt = 0.0;
  double du = 1e-3;
  double t_max = 0.0;
  double u_max = 10.0;
};

struct Outputs {
  std::string dir = "out";
  std::vector<std::string> formats = {"csv"};
};

struct ExperimentConfig {
  ModelParams model = two_vertex_model();
  Steps steps;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Outputs outputs;
  double verify_scale = 1.0;
};

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  if (!obj.is_object()) throw ConfigError((prefix.empty() ? std::string("config") : prefix) + " must be a JSON object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key())) throw ConfigError("unknown key '" + prefix + (prefix.empty() ? "" : ".") + item.key() + "'");
}

inline double positive_number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + " must be a number");
  const double x = v.get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(path + " must be positive");
  return x;
}

inline Vector number_array(const json& v, std::size_t n, const std::string& path) {
  if (!v.is_array() || v.size() != n) throw ConfigError(path + " must be an array of " + std::to_string(n) + " numbers");
  Vector out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "] must be a number");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

/// Graph JSON {"n", "edges": [[i, j, w], ...], "theta", "eta"}, 0-based
/// vertices, self-loops as [i, i, w].  A dense "W" matrix may replace "edges".
inline ModelParams model_from_json(const json& g, const std::string& where = "model") {
  detail::check_keys(g, {"n", "edges", "W", "theta", "eta"}, where);
  if (!g.contains("n") || !g["n"].is_number_integer() || g["n"].get<long long>() < 1)
    throw ConfigError(where + ".n must be a positive integer");
  const auto n = static_cast<std::size_t>(g["n"].get<long long>());
  const auto nn = static_cast<Eigen::Index>(n);
  Matrix w = Matrix::Zero(nn, nn);
  if (g.contains("edges") == g.contains("W")) throw ConfigError(where + " needs exactly one of 'edges' or 'W'");
  if (g.contains("W")) {
    const json& m = g["W"];
    if (!m.is_array() || m.size() != n) throw ConfigError(where + ".W must be an n x n array");
    for (std::size_t i = 0; i < n; ++i) w.row(static_cast<Eigen::Index>(i)) = detail::number_array(m[i], n, where + ".W[" + std::to_string(i) + "]").transpose();
  } else {
    const json& e = g["edges"];
    if (!e.is_array()) throw ConfigError(where + ".edges must be an array");
    std::vector<std::vector<bool>> seen(n, std::vector<bool>(n, false));
    for (std::size_t k = 0; k < e.size(); ++k) {
      const std::string path = where + ".edges[" + std::to_string(k) + "]";
      const json& ed = e[k];
      if (!ed.is_array() || ed.size() != 3 || !ed[0].is_number_integer() || !ed[1].is_number_integer() || !ed[2].is_number())
        throw ConfigError(path + " must be [i, j, w]");
      const long long i = ed[0].get<long long>();
      const long long j = ed[1].get<long long>();
      if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
        throw ConfigError(path + " has a vertex out of range");
      const double weight = ed[2].get<double>();
      if (seen[i][j]) {
        if (w(i, j) != weight) throw ConfigError("W must be symmetric: " + path + " disagrees with an earlier edge");
        throw ConfigError(path + " duplicates an earlier edge");
      }
      seen[i][j] = seen[j][i] = true;
      w(i, j) = w(j, i) = weight;
    }
  }
  if (!g.contains("theta") || !g.contains("eta")) throw ConfigError(where + " needs 'theta' and 'eta'");
  try {
    return ModelParams(ConductanceMatrix(w), detail::number_array(g["theta"], n, where + ".theta"),
                       detail::number_array(g["eta"], n, where + ".eta"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

inline json model_to_json(const ModelParams& p) {
  json edges = json::array();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i; j < p.size(); ++j)
      if (p.W(i, j) != 0.0) edges.push_back({i, j, p.W(i, j)});
  json theta = json::array();
  json eta = json::array();
  for (Eigen::Index i = 0; i < p.theta.size(); ++i) {
    theta.push_back(p.theta[i]);
    eta.push_back(p.eta[i]);
  }
  return {{"n", p.size()}, {"edges", edges}, {"theta", theta}, {"eta", eta}};
}

/// Validates and fills defaults: dt = 1e-4 min(theta)^2, du = 1e-3,
/// t_max = 50 x the largest marginal mean, u_max = 10, replicas = 1000.
inline ExperimentConfig parse_config_json(const json& j) {
  detail::check_keys(j, {"model", "steps", "replicas", "seed", "threads", "outputs", "verify"}, "");
  ExperimentConfig c;
  if (j.contains("model")) c.model = model_from_json(j["model"]);
  c.steps.dt = default_dt(c.model);
  c.steps.t_max = default_t_max(c.model);
  if (j.contains("steps")) {
    const json& s = j["steps"];
    detail::check_keys(s, {"dt", "du", "t_max", "u_max"}, "steps");
    if (s.contains("dt")) c.steps.dt = detail::positive_number(s, "dt", "steps.dt");
    if (s.contains("du")) c.steps.du = detail::positive_number(s, "du", "steps.du");
    if (s.contains("t_max")) c.steps.t_max = detail::positive_number(s, "t_max", "steps.t_max");
    if (s.contains("u_max")) c.steps.u_max = detail::positive_number(s, "u_max", "steps.u_max");
  }
  if (j.contains("replicas")) {
    if (!j["replicas"].is_number_integer() || j["replicas"].get<long long>() < 1) throw ConfigError("replicas must be an integer >= 1");
    c.replicas = j["replicas"].get<std::size_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative 64-bit integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    if (!j["threads"].is_number_unsigned()) throw ConfigError("threads must be a nonnegative integer");
    c.threads = j["threads"].get<unsigned>();
  }
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    detail::check_keys(o, {"dir", "formats"}, "outputs");
    if (o.contains("dir")) {
      if (!o["dir"].is_string() || o["dir"].get<std::string>().empty()) throw ConfigError("outputs.dir must be a nonempty string");
      c.outputs.dir = o["dir"].get<std::string>();
    }
    if (o.contains("formats")) {
      if (!o["formats"].is_array() || o["formats"].empty()) throw ConfigError("outputs.formats must be a nonempty array");
      c.outputs.formats.clear();
      for (const json& f : o["formats"]) {
        if (!f.is_string() || (f != "csv" && f != "json")) throw ConfigError("outputs.formats entries must be \"csv\" or \"json\"");
        c.outputs.formats.push_back(f.get<std::string>());
      }
    }
  }
  if (j.contains("verify")) {
    const json& v = j["verify"];
    detail::check_keys(v, {"scale"}, "verify");
    if (v.contains("scale")) c.verify_scale = detail::positive_number(v, "scale", "verify.scale");
  }
  return c;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config_json(j);
}

/// Canonical form of the effective config (defaults filled, outputs.dir and
/// threads excluded: they do not change results).
inline json config_to_json(const ExperimentConfig& c) {
  return {{"model", model_to_json(c.model)},
          {"steps", {{"dt", c.steps.dt}, {"du", c.steps.du}, {"t_max", c.steps.t_max}, {"u_max", c.steps.u_max}}},
          {"replicas", c.replicas},
          {"seed", c.seed},
          {"verify", {{"scale", c.verify_scale}}}};
}

inline std::string config_hash(const ExperimentConfig& c) { return detail::hex64(detail::fnv1a(config_to_json(c).dump())); }

inline SuiteConfig suite_config(const ExperimentConfig& c) {
  SuiteConfig s;
  s.seed = c.seed;
  s.threads = c.threads;
  s.scale = c.verify_scale;
  s.model = c.model;
  s.dt = c.steps.dt;
  s.du = c.steps.du;
  s.t_max = c.steps.t_max;
  return s;
}

// ---------------------------------------------------------------------------
// Reports

inline json report_to_json(const VerificationReport& r, const std::string& hash, std::uint64_t seed) {
  json stats = json::object();
  for (const auto& [k, v] : r.statistics) stats[k] = std::isfinite(v) ? json(v) : json(nullptr);
  json tol = json::array();
  for (const Tolerance& t : r.tolerances) tol.push_back({{"statistic", t.statistic}, {"op", t.op}, {"bound", t.bound}});
  json seeds = json::array();
  for (const StreamId& s : r.seeds) seeds.push_back({{"seed", s.seed}, {"stream", s.stream}});
  json out = {{"check_id", r.check_id},
              {"claim", r.claim},
              {"pass", r.pass},
              {"negative_control", r.negative_control},
              {"statistics", stats},
              {"tolerances", tol},
              {"seeds", seeds},
              {"config_hash", hash},
              {"seed", seed}};
  if (!r.diagnostic.empty()) out["diagnostic"] = r.diagnostic;
  return out;
}

/// reports.json content: byte-identical for identical (config, seed).
inline std::string reports_json(const std::vector<VerificationReport>& reports, const std::string& hash, std::uint64_t seed) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r, hash, seed));
  return arr.dump(2) + "\n";
}

/// Sidecar with everything that varies between identical runs.
inline std::string reports_meta_json(const std::vector<VerificationReport>& reports, const std::string& hash,
                                     std::uint64_t seed, const std::string& timestamp) {
  json runtimes = json::object();
  double total = 0.0;
  for (const auto& r : reports) {
    runtimes[r.check_id] = r.runtime_s;
    total += r.runtime_s;
  }
  return json{{"config_hash", hash}, {"seed", seed}, {"timestamp", timestamp}, {"runtime_s", runtimes}, {"total_runtime_s", total}}
             .dump(2) +
         "\n";
}

/// Raw statistics, one row per (check, statistic).
inline void write_statistics_csv(std::ostream& os, const std::vector<VerificationReport>& reports, const std::string& hash,
                                 std::uint64_t seed) {
  os << "# config_hash=" << hash << ",seed=" << seed << "\n";
  os << "check_id,statistic,value\n";
  os << std::setprecision(17);
  for (const auto& r : reports)
    for (const auto& [k, v] : r.statistics) os << r.check_id << "," << k << "," << v << "\n";
}

// ---------------------------------------------------------------------------
// CSV dumps.  Every file starts with "# config_hash=...,seed=...".

inline void write_csv_preamble(std::ostream& os, const std::string& hash, std::uint64_t seed) {
  os << "# config_hash=" << hash << ",seed=" << seed << "\n";
  os << std::setprecision(17);
}

/// "replica,vertex,beta"
inline void write_beta_csv(std::ostream& os, const std::vector<Vector>& samples, const std::vector<std::size_t>& replica,
                           const std::string& hash, std::uint64_t seed) {
  write_csv_preamble(os, hash, seed);
  os << "replica,vertex,beta\n";
  for (std::size_t k = 0; k < samples.size(); ++k)
    for (Eigen::Index i = 0; i < samples[k].size(); ++i) os << replica[k] << "," << i << "," << samples[k][i] << "\n";
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " '" + s + "'");
  }
}

inline std::size_t parse_index(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  if (v < 0.0 || v != std::floor(v)) throw ConfigError(what + " must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

/// Data lines of a CSV after the comment lines, with the header checked.
inline std::vector<std::vector<std::string>> read_csv(std::istream& is, const std::string& header) {
  std::string line;
  bool have_header = false;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      if (line != header) throw ConfigError("expected CSV header '" + header + "', found '" + line + "'");
      have_header = true;
      continue;
    }
    rows.push_back(split(line, ','));
  }
  if (!have_header) throw ConfigError("CSV has no header '" + header + "'");
  return rows;
}

}  // namespace detail

/// Reads "replica,vertex,beta" back into one vector per replica (replicas in
/// order of first appearance, vertices 0..n-1 each exactly once).
inline std::vector<Vector> read_beta_csv(std::istream& is) {
  const auto rows = detail::read_csv(is, "replica,vertex,beta");
  std::map<std::size_t, std::map<std::size_t, double>> by_replica;
  std::vector<std::size_t> order;
  for (const auto& row : rows) {
    if (row.size() != 3) throw ConfigError("beta CSV rows need 3 fields");
    const std::size_t r = detail::parse_index(row[0], "replica");
    const std::size_t v = detail::parse_index(row[1], "vertex");
    if (!by_replica.count(r)) order.push_back(r);
    if (!by_replica[r].emplace(v, detail::parse_double(row[2], "beta")).second)
      throw ConfigError("beta CSV repeats vertex " + std::to_string(v) + " of replica " + std::to_string(r));
  }
  std::vector<Vector> out;
  std::size_t n = 0;
  for (std::size_t r : order) {
    const auto& m = by_replica[r];
    if (out.empty()) n = m.size();
    if (m.size() != n || m.rbegin()->first + 1 != n) throw ConfigError("beta CSV replica " + std::to_string(r) + " is incomplete");
    Vector b(static_cast<Eigen::Index>(n));
    for (const auto& [v, x] : m) b[static_cast<Eigen::Index>(v)] = x;
    out.push_back(b);
  }
  return out;
}

/// Path dump "u_or_t,vertex,value,series" for an X path.
inline void write_x_path_csv(std::ostream& os, const MultiPath& path, const std::string& hash, std::uint64_t seed) {
  write_csv_preamble(os, hash, seed);
  os << "u_or_t,vertex,value,series\n";
  for (std::size_t i = 0; i < path.vertices(); ++i)
    for (std::size_t k = 0; k < path.grid.size(); ++k) os << path.grid[k] << "," << i << "," << path.values[i][k] << ",X\n";
}

/// Path dump for (rho, T), optionally with the residual B^.
inline void write_rho_path_csv(std::ostream& os, const TimeChangedPath& tc, const std::string& hash, std::uint64_t seed,
                               const std::vector<std::vector<double>>* bhat = nullptr) {
  write_csv_preamble(os, hash, seed);
  os << "u_or_t,vertex,value,series\n";
  for (std::size_t i = 0; i < tc.vertices(); ++i) {
    for (std::size_t k = 0; k < tc.rho[i].size(); ++k) os << tc.u_grid[k] << "," << i << "," << tc.rho[i][k] << ",rho\n";
    for (std::size_t k = 0; k < tc.T[i].size(); ++k) os << tc.u_grid[k] << "," << i << "," << tc.T[i][k] << ",T\n";
    if (bhat)
      for (std::size_t k = 0; k < (*bhat)[i].size(); ++k) os << tc.u_grid[k] << "," << i << "," << (*bhat)[i][k] << ",Bhat\n";
  }
}

/// Reads the X series of a path dump.  Each coordinate must share one time
/// grid; its absorption time is the first grid time at which it is 0.
inline MultiPath read_x_path_csv(std::istream& is) {
  const auto rows = detail::read_csv(is, "u_or_t,vertex,value,series");
  std::map<std::size_t, std::vector<std::pair<double, double>>> series;
  for (const auto& row : rows) {
    if (row.size() != 4) throw ConfigError("path CSV rows need 4 fields");
    if (row[3] != "X") continue;
    series[detail::parse_index(row[1], "vertex")].emplace_back(detail::parse_double(row[0], "time"),
                                                              detail::parse_double(row[2], "value"));
  }
  if (series.empty()) throw ConfigError("path CSV has no X series");
  const std::size_t n = series.rbegin()->first + 1;
  if (series.size() != n) throw ConfigError("path CSV is missing a vertex");
  MultiPath path;
  path.values.assign(n, {});
  path.absorption = Vector::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::infinity());
  for (const auto& [t, x] : series[0]) path.grid.push_back(t);
  for (const auto& [i, pts] : series) {
    if (pts.size() != path.grid.size()) throw ConfigError("path CSV vertices have different grids");
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (pts[k].first != path.grid[k]) throw ConfigError("path CSV vertices have different grids");
      path.values[i].push_back(pts[k].second);
      if (pts[k].second <= 0.0 && !std::isfinite(path.absorption[static_cast<Eigen::Index>(i)]))
        path.absorption[static_cast<Eigen::Index>(i)] = pts[k].first;
    }
  }
  path.dt = path.grid.size() >= 2 ? path.grid[1] - path.grid[0] : 0.0;
  return path;
}

}  // namespace ibridges
