// interacting-bridges: simulation, sampling, density evaluation and
// verification suites for the interacting absorbed Brownian system.
//
// Exit status: 0 success, 1 a check failed, 2 usage or configuration error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ibridges/ibridges.hpp"

namespace fs = std::filesystem;
using namespace ibridges;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::string out;
  std::string format;
  std::optional<unsigned> threads;
};

struct Context {
  ExperimentConfig cfg;
  std::string hash;
  fs::path out;
  bool csv = true;
};

Context resolve(const Globals& g) {
  Context c;
  c.cfg = g.config_path.empty() ? ExperimentConfig{} : parse_config(g.config_path);
  if (const char* env = std::getenv("INTERACTING_BRIDGES_SEED")) {
    try {
      std::size_t used = 0;
      c.cfg.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("INTERACTING_BRIDGES_SEED is not an unsigned integer: ") + env);
    }
  }
  if (g.seed) c.cfg.seed = *g.seed;
  if (g.replicas) {
    if (*g.replicas < 1) throw ConfigError("--replicas must be >= 1");
    c.cfg.replicas = *g.replicas;
  }
  if (g.threads) c.cfg.threads = *g.threads;
  if (!g.out.empty()) c.cfg.outputs.dir = g.out;
  if (!g.format.empty()) c.cfg.outputs.formats = {g.format};
  c.csv = std::find(c.cfg.outputs.formats.begin(), c.cfg.outputs.formats.end(), "csv") != c.cfg.outputs.formats.end();
  c.hash = config_hash(c.cfg);
  c.out = c.cfg.outputs.dir;
  return c;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + p.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  ensure_dir(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

json provenance(const Context& c) { return {{"config_hash", c.hash}, {"seed", c.cfg.seed}, {"config", config_to_json(c.cfg)}}; }

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << "\n";
}

RngStream command_stream(const Context& c, const char* tag) { return RngStream(c.cfg.seed, 0).substream(detail::fnv1a(tag)); }

// ---------------------------------------------------------------------------

int cmd_simulate_x(const Context& c, std::size_t dump_paths, std::size_t record_every) {
  const RngStream base = command_stream(c, "simulate-x");
  struct Run {
    Vector t0;
    std::optional<MultiPath> path;
    bool failed = false;
  };
  const auto runs = parallel_map(c.cfg.replicas, c.cfg.threads, [&](std::size_t k) {
    Run out;
    RngStream rng = base.substream(k);
    SimulationOptions o;
    o.record_path = k < dump_paths;
    o.record_every = record_every;
    try {
      MultiPath p = simulate_x(c.cfg.model, c.cfg.steps.dt, c.cfg.steps.t_max, rng, o);
      out.t0 = p.absorption;
      if (o.record_path) out.path = std::move(p);
    } catch (const NumericalError&) {
      out.failed = true;
    }
    return out;
  });
  std::size_t unabsorbed = 0;
  std::size_t failures = 0;
  json rows = json::array();
  {
    std::ofstream csv;
    if (c.csv) {
      csv = open_out(c.out / "hitting_times.csv");
      write_csv_preamble(csv, c.hash, c.cfg.seed);
      csv << "replica,vertex,t0\n";
    }
    for (std::size_t k = 0; k < runs.size(); ++k) {
      if (runs[k].failed) {
        ++failures;
        continue;
      }
      if (!runs[k].t0.allFinite()) ++unabsorbed;
      for (Eigen::Index i = 0; i < runs[k].t0.size(); ++i) {
        const double t = runs[k].t0[i];
        if (c.csv) csv << k << "," << i << "," << t << "\n";
        rows.push_back({{"replica", k}, {"vertex", i}, {"t0", std::isfinite(t) ? json(t) : json(nullptr)}});
      }
      if (runs[k].path && c.csv) {
        std::ostringstream name;
        name << "x_" << std::setw(6) << std::setfill('0') << k << ".csv";
        auto os = open_out(c.out / "paths" / name.str());
        write_x_path_csv(os, *runs[k].path, c.hash, c.cfg.seed);
      }
    }
  }
  json side = provenance(c);
  side["replicas"] = c.cfg.replicas;
  side["unabsorbed"] = unabsorbed;
  side["failures"] = failures;
  if (!c.csv) side["hitting_times"] = rows;
  write_json(c.out / "simulate_x.json", side);
  std::cout << "simulated " << c.cfg.replicas << " replicas, " << unabsorbed << " unabsorbed by t_max, " << failures
            << " failed\n";
  return 0;
}

int cmd_simulate_rho(const Context& c, std::size_t dump_paths, std::size_t record_every) {
  const RngStream base = command_stream(c, "simulate-rho");
  struct Run {
    std::vector<double> rho, t;
    std::optional<TimeChangedPath> path;
    bool failed = false;
  };
  const auto runs = parallel_map(c.cfg.replicas, c.cfg.threads, [&](std::size_t k) {
    Run out;
    RngStream rng = base.substream(k);
    SimulationOptions o;
    o.record_every = k < dump_paths ? record_every : std::numeric_limits<std::size_t>::max();
    try {
      TimeChangedPath p = simulate_rho(c.cfg.model, c.cfg.steps.du, c.cfg.steps.u_max, rng, o);
      for (std::size_t i = 0; i < p.vertices(); ++i) {
        out.rho.push_back(p.rho[i].back());
        out.t.push_back(p.T[i].back());
      }
      if (k < dump_paths) out.path = std::move(p);
    } catch (const NumericalError&) {
      out.failed = true;
    }
    return out;
  });
  std::size_t failures = 0;
  json rows = json::array();
  std::ofstream csv;
  if (c.csv) {
    csv = open_out(c.out / "rho_endpoints.csv");
    write_csv_preamble(csv, c.hash, c.cfg.seed);
    csv << "replica,vertex,rho,T\n";
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (runs[k].failed) {
      ++failures;
      continue;
    }
    for (std::size_t i = 0; i < runs[k].rho.size(); ++i) {
      if (c.csv) csv << k << "," << i << "," << runs[k].rho[i] << "," << runs[k].t[i] << "\n";
      rows.push_back({{"replica", k}, {"vertex", i}, {"rho", runs[k].rho[i]}, {"T", runs[k].t[i]}});
    }
    if (runs[k].path && c.csv) {
      std::ostringstream name;
      name << "rho_" << std::setw(6) << std::setfill('0') << k << ".csv";
      auto os = open_out(c.out / "paths" / name.str());
      write_rho_path_csv(os, *runs[k].path, c.hash, c.cfg.seed);
    }
  }
  json side = provenance(c);
  side["replicas"] = c.cfg.replicas;
  side["u_max"] = c.cfg.steps.u_max;
  side["failures"] = failures;
  if (!c.csv) side["endpoints"] = rows;
  write_json(c.out / "simulate_rho.json", side);
  std::cout << "simulated " << c.cfg.replicas << " time-changed replicas to u = " << c.cfg.steps.u_max << ", " << failures
            << " failed (step too coarse)\n";
  return failures == 0 ? 0 : 1;
}

int cmd_transform(const Context& c, const std::string& input, const std::string& output) {
  std::ifstream in(input);
  if (!in) throw ConfigError("cannot open path file " + input);
  const MultiPath path = read_x_path_csv(in);
  if (!path.all_absorbed()) throw ConfigError("transform needs every coordinate absorbed within the stored path");
  std::vector<double> grid;
  const auto steps = static_cast<std::size_t>(std::llround(c.cfg.steps.u_max / c.cfg.steps.du));
  for (std::size_t k = 0; k <= steps; ++k) grid.push_back(static_cast<double>(k) * c.cfg.steps.du);
  const TimeChangedPath tc = lamperti_transform(path, grid);
  auto os = open_out(output.empty() ? c.out / "transformed.csv" : fs::path(output));
  write_rho_path_csv(os, tc, c.hash, c.cfg.seed);
  return 0;
}

void write_beta(const Context& c, const std::string& stem, const std::vector<Vector>& samples,
                const std::vector<std::size_t>& replica, json side) {
  if (c.csv) {
    auto os = open_out(c.out / (stem + ".csv"));
    write_beta_csv(os, samples, replica, c.hash, c.cfg.seed);
  } else {
    json arr = json::array();
    for (std::size_t k = 0; k < samples.size(); ++k)
      for (Eigen::Index i = 0; i < samples[k].size(); ++i)
        arr.push_back({{"replica", replica[k]}, {"vertex", i}, {"beta", samples[k][i]}});
    side["samples"] = arr;
  }
  write_json(c.out / (stem + ".json"), side);
}

int cmd_sample_beta(const Context& c, const std::string& method, std::size_t burn_in, std::size_t thinning) {
  std::vector<Vector> samples;
  std::vector<std::size_t> replica;
  json side = provenance(c);
  side["method"] = method;
  if (method == "sde") {
    const RngStream base = command_stream(c, "sample-beta/sde");
    side["stream"] = {{"seed", base.seed()}, {"stream", base.stream_id()}};
    const auto t0 = parallel_map(c.cfg.replicas, c.cfg.threads, [&](std::size_t k) -> std::optional<Vector> {
      RngStream rng = base.substream(k);
      SimulationOptions o;
      o.record_path = false;
      try {
        const MultiPath p = simulate_x(c.cfg.model, c.cfg.steps.dt, c.cfg.steps.t_max, rng, o);
        if (!p.all_absorbed()) return std::nullopt;
        return p.absorption;
      } catch (const NumericalError&) {
        return std::nullopt;
      }
    });
    std::size_t dropped = 0;
    for (std::size_t k = 0; k < t0.size(); ++k) {
      if (!t0[k]) {
        ++dropped;
        continue;
      }
      samples.push_back(beta_from_hitting(TimeVector(*t0[k])));
      replica.push_back(k);
    }
    side["unabsorbed_or_failed"] = dropped;
  } else {
    McmcConfig mc;
    mc.n_samples = c.cfg.replicas;
    mc.burn_in = burn_in;
    mc.thinning = thinning;
    mc.rng = command_stream(c, "sample-beta/mcmc");
    side["stream"] = {{"seed", mc.rng.seed()}, {"stream", mc.rng.stream_id()}};
    const McmcResult res = sample_nu_mcmc(c.cfg.model, mc);
    samples = res.samples;
    for (std::size_t k = 0; k < samples.size(); ++k) replica.push_back(k);
    side["acceptance_rate"] = res.acceptance_rate;
    side["proposal_scale"] = res.final_scale;
    side["burn_in"] = burn_in;
    side["thinning"] = thinning;
  }
  side["samples_written"] = samples.size();
  write_beta(c, "beta_" + method, samples, replica, side);
  std::cout << "wrote " << samples.size() << " beta samples (" << method << ")\n";
  return 0;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : detail::split(s, ',')) out.push_back(detail::parse_double(item, "list entry"));
  return out;
}

int cmd_density(const Context& c, const std::string& kind, const std::string& beta, double t, double theta, double eta,
                double q, double a, double b, bool log_scale) {
  double value = 0.0;
  if (kind == "nu") {
    if (beta.empty()) throw ConfigError("density nu needs --beta");
    const std::vector<double> v = parse_list(beta);
    if (v.size() != c.cfg.model.size()) throw ConfigError("--beta needs " + std::to_string(c.cfg.model.size()) + " entries");
    const double ld = nu_log_density(c.cfg.model, Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    value = log_scale ? ld : std::exp(ld);
  } else if (kind == "ig") {
    if (!(theta > 0.0) || eta < 0.0) throw ConfigError("density ig needs --theta > 0 and --eta >= 0");
    value = ig_density(t, theta, eta);
    if (log_scale) value = std::log(value);
  } else {
    try {
      const GigParams p(q, a, b);
      value = log_scale ? gig_log_density(t, p) : gig_density(t, p);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  std::cout << (std::isfinite(value) ? json(value) : json(nullptr)).dump() << "\n";
  return 0;
}

int write_reports(const Context& c, const std::vector<VerificationReport>& reports) {
  {
    auto os = open_out(c.out / "reports.json");
    os << reports_json(reports, c.hash, c.cfg.seed);
  }
  {
    auto os = open_out(c.out / "reports.meta.json");
    os << reports_meta_json(reports, c.hash, c.cfg.seed, utc_timestamp());
  }
  if (c.csv) {
    auto os = open_out(c.out / "statistics.csv");
    write_statistics_csv(os, reports, c.hash, c.cfg.seed);
  }
  for (const auto& r : reports) {
    std::cout << (r.negative_control ? (r.pass ? "CONTROL-OK " : "CONTROL-BAD") : (r.pass ? "PASS       " : "FAIL       "))
              << " " << r.check_id;
    if (!r.diagnostic.empty()) std::cout << "  [" << r.diagnostic << "]";
    std::cout << "\n";
  }
  return all_passed(reports) ? 0 : 1;
}

std::vector<Vector> load_beta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open beta sample file " + path);
  return read_beta_csv(in);
}

int cmd_verify(const Context& c, const std::string& suite, const std::string& beta_sde, const std::string& beta_mcmc,
               std::optional<double> scale) {
  if (std::find(suite_ids().begin(), suite_ids().end(), suite) == suite_ids().end())
    throw ConfigError("unknown suite '" + suite + "'");
  SuiteConfig s = suite_config(c.cfg);
  if (scale) s.scale = *scale;
  if (!beta_sde.empty()) s.beta_sde = load_beta(beta_sde);
  if (!beta_mcmc.empty()) s.beta_mcmc = load_beta(beta_mcmc);
  return write_reports(c, run_suite(suite, s));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification toolkit for interacting absorbed Brownian motions"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "64-bit seed (overrides INTERACTING_BRIDGES_SEED and the config)");
  app.add_option("--replicas", g.replicas, "number of replicas or samples");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", g.threads, "worker threads (0: machine parallelism)");

  std::size_t dump_paths = 0;
  std::size_t record_every = 1;
  auto* sx = app.add_subcommand("simulate-x", "simulate the absorbed system; writes hitting times and path dumps");
  sx->add_option("--paths", dump_paths, "number of replicas whose paths are dumped");
  sx->add_option("--record-every", record_every, "keep one grid point in this many steps")->check(CLI::PositiveNumber);
  auto* sr = app.add_subcommand("simulate-rho", "simulate the time-changed system (rho, T)");
  sr->add_option("--paths", dump_paths, "number of replicas whose paths are dumped");
  sr->add_option("--record-every", record_every, "keep one grid point in this many steps")->check(CLI::PositiveNumber);

  std::string input, output;
  auto* tr = app.add_subcommand("transform", "Lamperti transform of a stored X path");
  tr->add_option("--input", input, "X path CSV")->required();
  tr->add_option("--output", output, "output CSV (default: <out>/transformed.csv)");

  std::string method;
  std::size_t burn_in = 5000;
  std::size_t thinning = 20;
  auto* sb = app.add_subcommand("sample-beta", "sample beta from hitting times (sde) or by Metropolis (mcmc)");
  sb->add_option("method", method, "sde | mcmc")->required()->check(CLI::IsMember({"sde", "mcmc"}));
  sb->add_option("--burn-in", burn_in, "Metropolis burn-in iterations");
  sb->add_option("--thinning", thinning, "Metropolis thinning")->check(CLI::PositiveNumber);

  std::string kind, beta;
  double t = 1.0, theta = 1.0, eta = 1.0, q = -0.5, a = 1.0, b = 1.0;
  bool log_scale = false;
  auto* de = app.add_subcommand("density", "pointwise density evaluation");
  de->add_option("kind", kind, "nu | ig | gig")->required()->check(CLI::IsMember({"nu", "ig", "gig"}));
  de->add_option("--beta", beta, "comma-separated beta (nu)");
  de->add_option("--t", t, "evaluation point (ig, gig)");
  de->add_option("--theta", theta, "ig start level");
  de->add_option("--eta", eta, "ig drift");
  de->add_option("--q", q, "gig index");
  de->add_option("--a", a, "gig parameter a");
  de->add_option("--b", b, "gig parameter b");
  de->add_flag("--log", log_scale, "print the log density");

  std::string suite, beta_sde, beta_mcmc;
  std::optional<double> scale;
  auto* ve = app.add_subcommand("verify", "run a verification suite");
  ve->add_option("suite", suite, "prop_a | prop_b | thm_b | thm_c | lemma1 | thm3 | thm4 | lemma2 | martingale | my_prop | all")
      ->required();
  ve->add_option("--beta-sde", beta_sde, "beta CSV from 'sample-beta sde' (thm_b)");
  ve->add_option("--beta-mcmc", beta_mcmc, "beta CSV from 'sample-beta mcmc' (thm_b)");
  ve->add_option("--scale", scale, "multiplier on every replica count")->check(CLI::PositiveNumber);

  auto* rc = app.add_subcommand("restart-check", "restart at a fixed multi-time against straight-through runs");
  rc->add_option("--scale", scale, "multiplier on replica counts")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    const Context c = resolve(g);
    if (*sx) return cmd_simulate_x(c, dump_paths, record_every);
    if (*sr) return cmd_simulate_rho(c, dump_paths, record_every);
    if (*tr) return cmd_transform(c, input, output);
    if (*sb) return cmd_sample_beta(c, method, burn_in, thinning);
    if (*de) return cmd_density(c, kind, beta, t, theta, eta, q, a, b, log_scale);
    if (*ve) return cmd_verify(c, suite, beta_sde, beta_mcmc, scale);
    if (*rc) return cmd_verify(c, "thm_c", "", "", scale);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
