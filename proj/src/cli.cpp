#include "collide/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "collide/errors.hpp"
#include "collide/kernels.hpp"
#include "collide/parallel.hpp"
#include "collide/polymer.hpp"
#include "collide/walks.hpp"

namespace collide::cli {

namespace {

using json = nlohmann::json;
using harness::ExperimentReport;
using harness::Table;

template <class T>
void read(const json& sec, const std::string& section, const std::string& key, T& out) {
  if (!sec.contains(key)) return;
  try {
    out = sec.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(section + "." + key, std::string("wrong type: ") + e.what());
  }
}

void reject_unknown(const json& sec, const std::string& section, std::initializer_list<const char*> known) {
  if (!sec.is_object()) throw ConfigError(section, "must be an object");
  for (const auto& [key, _] : sec.items())
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ConfigError(section + "." + key, "unknown key");
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string hash_id() { return std::string(kHashName) + "-v" + std::to_string(kHashVersion); }

ExperimentReport collisions_command(const RunConfig& c) {
  ExperimentReport rep;
  rep.experiment = "collisions";
  rep.config = c.echo();
  Table t{"masses", {"N", "mass_mean", "mass_stderr", "distinct_mean", "distinct_stderr", "scaled_mass_mean"}, {}};
  long long bad = 0, identity_bad = 0;
  const long long pairs = static_cast<long long>(c.k) * (c.k - 1) / 2;
  for (int N : c.ladder) {
    struct Obs {
      double mass, distinct;
      bool bounds, identity;
    };
    auto obs = parallel_map(static_cast<std::size_t>(c.replicas), c.workers, [&](std::size_t r) {
      Stream s = Stream::substream(derive_seed(*c.seed, {9, static_cast<std::uint64_t>(N)}), r);
      const auto ens = walks::sample_ensemble(c.k, N, s);
      const auto m = collisions::detect_collisions(ens);
      const long long w = m.with_multiplicity.total_mass(), d = m.distinct.total_mass();
      bool id = true;
      if (c.k == 2) {
        const auto [lhs, rhs] = collisions::total_mass_identity_check(ens);
        id = lhs == rhs;
      }
      return Obs{static_cast<double>(w), static_cast<double>(d), d <= w && w <= pairs * d, id};
    });
    std::vector<double> w, d;
    for (const auto& o : obs) {
      w.push_back(o.mass);
      d.push_back(o.distinct);
      bad += !o.bounds;
      identity_bad += !o.identity;
    }
    const auto sw = summarize(w), sd = summarize(d);
    t.rows.push_back({static_cast<double>(N), sw.mean, sw.std_err, sd.mean, sd.std_err,
                      sw.mean / std::sqrt(static_cast<double>(N))});
    Stream s = Stream::substream(derive_seed(*c.seed, {9, static_cast<std::uint64_t>(N)}), 0);
    Table raw{"measure_N" + std::to_string(N), {"n", "z", "weight"}, {}};
    for (const auto& a : collisions::detect_collisions(walks::sample_ensemble(c.k, N, s)).with_multiplicity.atoms())
      raw.rows.push_back({static_cast<double>(a.n), static_cast<double>(a.z), static_cast<double>(a.weight)});
    rep.raw.push_back(std::move(raw));
  }
  rep.tables.push_back(std::move(t));
  rep.verdicts.push_back({"multiplicity_bounds", bad == 0,
                          std::to_string(bad) + " replicates outside ||Pi'|| <= ||Pi|| <= C(k,2) ||Pi'||"});
  if (c.k == 2)
    rep.verdicts.push_back({"mass_identity", identity_bad == 0,
                            std::to_string(identity_bad) + " replicates where ||Pi|| differs from the zero count of S1 - S2"});
  return rep;
}

ExperimentReport partition_command(const RunConfig& c) {
  ExperimentReport rep;
  const auto f = c.test_function();
  Table values{"values", {"N", "value"}, {}};
  const environment::EnvironmentField field{*c.seed};
  for (int N : c.ladder)
    values.rows.push_back(
        {static_cast<double>(N), polymer::partition_dp(N, polymer::duality_amplitude(f, N), field).value});
  if (c.ladder.size() >= 2) {
    harness::PlateauConfig p;
    p.k = c.k;
    p.f = f;
    p.ladder = c.ladder;
    p.replicas = c.env_replicas;
    p.plateau_z = c.plateau_z;
    p.seed = *c.seed;
    p.workers = c.workers;
    rep = harness::moment_plateau(p);
  }
  rep.experiment = "partition";
  rep.config = c.echo();
  rep.tables.insert(rep.tables.begin(), std::move(values));
  return rep;
}

ExperimentReport kernels_command(const RunConfig& c) {
  ExperimentReport rep;
  rep.experiment = "kernels-check";
  rep.config = c.echo();
  Table norms{"norms", {"n", "estimate", "stderr", "closed_form", "rel_error"}, {}};
  bool norms_ok = true;
  auto est = parallel_map(static_cast<std::size_t>(c.norm_orders), c.workers, [&](std::size_t i) {
    Stream s(derive_seed(*c.seed, {10, i}));
    return kernels::rho_chain_norm_sq_mc(static_cast<int>(i) + 1, c.norm_samples, s);
  });
  for (int n = 1; n <= c.norm_orders; ++n) {
    const auto& e = est[static_cast<std::size_t>(n) - 1];
    const double exact = kernels::rho_chain_norm_sq(n);
    const double rel = std::fabs(e.value - exact) / exact;
    norms_ok = norms_ok && rel <= c.norm_tol;
    norms.rows.push_back({static_cast<double>(n), e.value, e.std_err, exact, rel});
  }
  rep.tables.push_back(std::move(norms));
  rep.verdicts.push_back({"norms", norms_ok, "relative error within " + std::to_string(c.norm_tol) + " for n <= " +
                                                 std::to_string(c.norm_orders)});

  Table clt{"local_clt", {"N", "l2_error", "stderr"}, {}};
  auto errs = parallel_map(c.ladder.size(), c.workers, [&](std::size_t i) {
    Stream s(derive_seed(*c.seed, {11, static_cast<std::uint64_t>(c.ladder[i])}));
    return kernels::local_clt_l2_error(1, c.ladder[i], c.clt_budget, s);
  });
  bool dec = true;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    clt.rows.push_back({static_cast<double>(c.ladder[i]), errs[i].value, errs[i].std_err});
    if (i > 0)
      dec = dec && errs[i - 1].value - errs[i].value > 2.0 * std::hypot(errs[i - 1].std_err, errs[i].std_err);
  }
  rep.tables.push_back(std::move(clt));
  rep.verdicts.push_back({"local_clt", dec, "||rho_1 - N^1/2 p^N_1|| decreasing beyond 2 combined stderr"});
  return rep;
}

ExperimentReport ustat_command(const RunConfig& c) {
  ExperimentReport rep;
  rep.experiment = "ustat-check";
  rep.config = c.echo();
  Table t{"chaos_identity", {"N", "beta", "max_rel_error", "terms"}, {}};
  double worst = 0.0;
  const auto A = environment::DisorderFunction::random_uniform(derive_seed(*c.seed, {12}), 1.0);
  for (int N : c.ladder) {
    if (N > 8) throw ConfigError("walks.ladder", "ustat-check needs N <= 8");
    const auto plans = polymer::chaos_identity_plans(N, A);
    std::size_t terms = 0;
    for (const auto& p : plans) terms += p.terms();
    for (double beta : {0.3, c.beta}) {
      double err = 0.0;
      for (long long r = 0; r < c.replicas; ++r) {
        const environment::EnvironmentField w{derive_seed(*c.seed, {13, static_cast<std::uint64_t>(r)})};
        const double z = polymer::partition_dp(N, A.scaled(beta), w).value;
        err = std::max(err, std::fabs(polymer::chaos_identity_value(plans, beta, w) - z) / std::fabs(z));
      }
      worst = std::max(worst, err);
      t.rows.push_back({static_cast<double>(N), beta, err, static_cast<double>(terms)});
    }
  }
  rep.tables.push_back(std::move(t));
  std::ostringstream d;
  d << "max relative error " << worst << " (tolerance " << c.identity_tol << ")";
  rep.verdicts.push_back({"chaos_identity", worst <= c.identity_tol, d.str()});
  return rep;
}

void write_csv(const std::filesystem::path& path, const Table& t, const nlohmann::ordered_json& manifest) {
  std::ofstream os(path);
  os << "# " << manifest.dump() << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  os.precision(17);
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

}  // namespace

collisions::TestFunction RunConfig::test_function() const {
  if (amplitude == "gaussian_bump") return collisions::TestFunction::gaussian_bump(alpha, sigma);
  if (amplitude == "constant") return collisions::TestFunction::constant(alpha);
  if (amplitude == "window") return collisions::TestFunction::window(alpha, halfwidth);
  throw ConfigError("environment.amplitude", "unknown kind '" + amplitude + "'");
}

nlohmann::ordered_json RunConfig::echo() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["walks"] = {{"k", k}, {"ladder", ladder}, {"replicas", replicas}};
  j["environment"] = {{"amplitude", amplitude}, {"alpha", alpha}, {"sigma", sigma},
                      {"halfwidth", halfwidth}, {"beta", beta}};
  j["chaos"] = {{"dt", dt},       {"dx", dx},
                {"L", L},         {"M", M},
                {"gamma", gamma}, {"replicas", chaos_replicas},
                {"target", chaos_target}};
  j["harness"] = {{"seed", seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json()},
                  {"env_replicas", env_replicas},
                  {"m_ladder", m_ladder},
                  {"generator", generator},
                  {"norm_samples", norm_samples},
                  {"norm_orders", norm_orders},
                  {"clt_budget", clt_budget},
                  {"gap_shrink", gap_shrink},
                  {"plateau_z", plateau_z},
                  {"final_level", final_level},
                  {"chaos_z", chaos_z},
                  {"identity_tol", identity_tol},
                  {"norm_tol", norm_tol}};
  return j;
}

void RunConfig::validate() const {
  if (std::find(commands().begin(), commands().end(), command) == commands().end())
    throw ConfigError("command", "unknown command '" + command + "'");
  if (!seed) throw ConfigError("harness.seed", "a seed is required (--seed or harness.seed)");
  if (k < 2) throw ConfigError("walks.k", "must be >= 2");
  if (ladder.empty()) throw ConfigError("walks.ladder", "must not be empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1) throw ConfigError("walks.ladder", "entries must be positive");
    if (i && ladder[i] <= ladder[i - 1]) throw ConfigError("walks.ladder", "must be strictly increasing");
  }
  if (replicas < 2) throw ConfigError("walks.replicas", "must be >= 2");
  if (env_replicas < 0) throw ConfigError("harness.env_replicas", "must be >= 0");
  if (chaos_replicas < 1) throw ConfigError("chaos.replicas", "must be positive");
  if (!(dt > 0) || !(dx > 0) || !(L > 0)) throw ConfigError("chaos", "dt, dx and L must be positive");
  if (M < 0) throw ConfigError("chaos.M", "must be >= 0");
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
  if (norm_samples < 1) throw ConfigError("harness.norm_samples", "must be positive");
  if (norm_orders < 1) throw ConfigError("harness.norm_orders", "must be positive");
  if (m_ladder.empty()) throw ConfigError("harness.m_ladder", "must not be empty");
  if (generator != "polymer" && generator != "deterministic" && generator != "zero")
    throw ConfigError("harness.generator", "unknown generator '" + generator + "'");
  (void)test_function();
}

RunConfig load_config(const json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "walks" && key != "environment" && key != "chaos" && key != "harness")
      throw ConfigError(key, "unknown section");
  if (j.contains("walks")) {
    const auto& s = j["walks"];
    reject_unknown(s, "walks", {"k", "ladder", "N", "replicas"});
    read(s, "walks", "k", c.k);
    read(s, "walks", "ladder", c.ladder);
    if (s.contains("N")) {
      int N = 0;
      read(s, "walks", "N", N);
      c.ladder = {N};
    }
    read(s, "walks", "replicas", c.replicas);
  }
  if (j.contains("environment")) {
    const auto& s = j["environment"];
    reject_unknown(s, "environment", {"amplitude", "alpha", "sigma", "halfwidth", "beta"});
    read(s, "environment", "amplitude", c.amplitude);
    read(s, "environment", "alpha", c.alpha);
    read(s, "environment", "sigma", c.sigma);
    read(s, "environment", "halfwidth", c.halfwidth);
    read(s, "environment", "beta", c.beta);
  }
  if (j.contains("chaos")) {
    const auto& s = j["chaos"];
    reject_unknown(s, "chaos", {"dt", "dx", "L", "M", "gamma", "replicas", "target"});
    read(s, "chaos", "dt", c.dt);
    read(s, "chaos", "dx", c.dx);
    read(s, "chaos", "L", c.L);
    read(s, "chaos", "M", c.M);
    read(s, "chaos", "gamma", c.gamma);
    read(s, "chaos", "replicas", c.chaos_replicas);
    read(s, "chaos", "target", c.chaos_target);
  }
  if (j.contains("harness")) {
    const auto& s = j["harness"];
    reject_unknown(s, "harness",
                   {"seed", "workers", "out", "raw", "env_replicas", "m_ladder", "generator", "norm_samples",
                    "norm_orders", "clt_budget", "gap_shrink", "plateau_z", "final_level", "chaos_z",
                    "identity_tol", "norm_tol"});
    if (s.contains("seed")) {
      std::uint64_t seed = 0;
      read(s, "harness", "seed", seed);
      c.seed = seed;
    }
    read(s, "harness", "workers", c.workers);
    read(s, "harness", "out", c.out);
    read(s, "harness", "raw", c.raw);
    read(s, "harness", "env_replicas", c.env_replicas);
    read(s, "harness", "m_ladder", c.m_ladder);
    read(s, "harness", "generator", c.generator);
    read(s, "harness", "norm_samples", c.norm_samples);
    read(s, "harness", "norm_orders", c.norm_orders);
    read(s, "harness", "clt_budget", c.clt_budget);
    read(s, "harness", "gap_shrink", c.gap_shrink);
    read(s, "harness", "plateau_z", c.plateau_z);
    read(s, "harness", "final_level", c.final_level);
    read(s, "harness", "chaos_z", c.chaos_z);
    read(s, "harness", "identity_tol", c.identity_tol);
    read(s, "harness", "norm_tol", c.norm_tol);
  }
  return c;
}

harness::ExperimentReport execute(const RunConfig& c) {
  c.validate();
  const auto seed = *c.seed;
  ExperimentReport rep;
  if (c.command == "collisions") return collisions_command(c);
  if (c.command == "partition") return partition_command(c);
  if (c.command == "kernels-check") return kernels_command(c);
  if (c.command == "ustat-check") return ustat_command(c);
  const chaos::WhiteNoiseGrid grid{c.dt, c.dx, c.L, 0};
  if (c.command == "chaos") {
    harness::ChaosConfig h{grid, c.gamma, c.M, c.k, c.chaos_replicas, c.chaos_z, seed, c.workers};
    rep = harness::chaos_moments(h);
  } else if (c.command == "duality") {
    harness::DualityConfig h;
    h.ladder = c.ladder;
    h.k = c.k;
    h.f = c.test_function();
    h.walk_replicas = c.replicas;
    h.env_replicas = c.env_replicas;
    h.gap_shrink = c.gap_shrink;
    if (c.chaos_target) h.chaos_grid = grid;
    h.chaos_order = c.M;
    h.chaos_replicas = c.chaos_replicas;
    h.chaos_z = c.chaos_z;
    h.seed = seed;
    h.workers = c.workers;
    rep = harness::duality_experiment(h);
  } else if (c.command == "expmoment") {
    harness::ExpMomentConfig h{c.beta, c.ladder, c.replicas, c.plateau_z, seed, c.workers};
    rep = harness::exponential_moment_probe(h);
  } else if (c.command == "tightness") {
    harness::TightnessConfig h{c.k, c.ladder, c.m_ladder, c.replicas, c.final_level, seed, c.workers};
    rep = harness::tightness_probe(h);
  } else if (c.command == "convergence") {
    harness::ConvergenceConfig h{c.k, c.test_function(), c.ladder, c.replicas, seed, c.workers};
    rep = harness::convergence_study(h);
  }
  rep.config = c.echo();
  return rep;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  err << "running " << cfg.command << " (seed " << *cfg.seed << ", " << cfg.workers << " workers)\n";
  const auto rep = execute(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::ordered_json manifest;
  manifest["command"] = cfg.command;
  manifest["seed"] = *cfg.seed;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["hash"] = hash_id();
  manifest["timestamp"] = timestamp_utc();

  nlohmann::ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["manifest"] = manifest;
  doc["report"] = harness::to_json(rep);
  const std::string text = doc.dump(2) + "\n";

  namespace fs = std::filesystem;
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  std::ofstream(dir / "report.json") << text;

  nlohmann::ordered_json full = manifest;
  full["schema_version"] = kSchemaVersion;
  full["config"] = cfg.echo();
  full["workers"] = cfg.workers;
  full["runtime_seconds"] = seconds;
  full["files"] = {"report.json"};
  if (cfg.raw) {
    fs::create_directories(dir / "raw");
    nlohmann::ordered_json line = manifest;
    line.erase("timestamp");
    for (const auto& t : rep.raw) {
      write_csv(dir / "raw" / (t.name + ".csv"), t, line);
      full["files"].push_back("raw/" + t.name + ".csv");
    }
  }
  std::ofstream(dir / "manifest.json") << full.dump(2) << "\n";

  err << harness::to_text(rep);
  if (cfg.to_stdout) out << text;
  return rep.passed() ? 0 : 1;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collision measures, polymer partition functions and their chaos limits"};
  std::string command, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<long long> replicas;
  std::optional<int> workers;
  bool raw = false, to_stdout = false;
  app.add_option("command", command, "Experiment to run")->required()->check(CLI::IsMember(commands()));
  app.add_option("--config", config_path, "JSON config with sections walks, environment, chaos, harness");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--replicas", replicas, "Replicate count for every estimator of the command");
  app.add_option("--workers", workers, "Worker threads (default: hardware threads)");
  app.add_flag("--raw", raw, "Write per-replicate CSV under raw/");
  app.add_flag("--stdout", to_stdout, "Print report JSON to standard output");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, err, err);
  }
  try {
    RunConfig cfg;
    cfg.workers = default_workers();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("--config", "cannot open " + config_path);
      json j;
      try {
        j = json::parse(is);
      } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("parse error: ") + e.what());
      }
      cfg = load_config(j, cfg);
    }
    cfg.command = command;
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (replicas) {
      cfg.replicas = *replicas;
      cfg.env_replicas = *replicas;
      cfg.chaos_replicas = static_cast<int>(*replicas);
    }
    if (workers) cfg.workers = *workers;
    cfg.raw = cfg.raw || raw;
    cfg.to_stdout = to_stdout;
    cfg.validate();
    return run(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace collide::cli
