#include "collide/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "collide/errors.hpp"
#include "collide/parallel.hpp"
#include "collide/polymer.hpp"
#include "collide/walks.hpp"

namespace collide::harness {

namespace {

std::string fmt(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::vector<std::string> summary_columns(const std::string& p) {
  return {p + "_mean", p + "_stderr", p + "_ci_lo", p + "_ci_hi"};
}

nlohmann::ordered_json ladder_json(const std::vector<int>& ladder) { return nlohmann::ordered_json(ladder); }

void check_ladder(const std::vector<int>& ladder) {
  if (ladder.empty()) throw DomainError("empty N ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1) throw DomainError("ladder entries must be >= 1");
    if (i > 0 && ladder[i] <= ladder[i - 1]) throw DomainError("ladder must be strictly increasing");
  }
}

bool all_integers(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return x == std::floor(x); });
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t tag, std::uint64_t N) { return derive_seed(seed, {tag, N}); }

}  // namespace

MonteCarloSummary mc_estimate(const Sampler& sampler, long long R, std::uint64_t master, int workers,
                              std::vector<double>* samples) {
  if (R < 2) throw DomainError("mc_estimate needs R >= 2");
  auto xs = parallel_map(static_cast<std::size_t>(R), workers, [&](std::size_t r) {
    Stream stream = Stream::substream(master, r);
    return sampler(stream, r);
  });
  auto s = summarize(xs);
  if (samples) *samples = std::move(xs);
  return s;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double q = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double t = std::exp(-2.0 * j * j * lambda * lambda);
    q += (j % 2 ? 2.0 : -2.0) * t;
    if (t < 1e-18) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys, std::uint64_t jitter_seed) {
  if (xs.empty() || ys.empty()) throw DomainError("ks_two_sample needs nonempty samples");
  KsResult res;
  std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
  if (all_integers(xs) && all_integers(ys)) {
    res.discrete = true;
    Stream stream(jitter_seed);
    std::vector<double> u(std::max(a.size(), b.size()));
    for (auto& v : u) v = stream.uniform();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += u[i];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += u[i];
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  res.statistic = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  res.p_value = d == 0.0 ? 1.0 : kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return res;
}

bool ExperimentReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

const Verdict& ExperimentReport::verdict(const std::string& rule) const {
  for (const auto& v : verdicts)
    if (v.rule == rule) return v;
  throw DomainError("no verdict named " + rule);
}

const Table& ExperimentReport::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  throw DomainError("no table named " + name);
}

nlohmann::ordered_json to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["config"] = report.config;
  j["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : report.tables)
    j["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
  j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : report.verdicts)
    j["verdicts"].push_back({{"rule", v.rule}, {"passed", v.passed}, {"detail", v.detail}});
  j["passed"] = report.passed();
  return j;
}

std::string to_text(const ExperimentReport& report) {
  std::ostringstream os;
  os << "== " << report.experiment << " ==\n";
  for (const auto& t : report.tables) {
    os << "\n[" << t.name << "]\n";
    std::vector<std::vector<std::string>> cells{t.columns};
    for (const auto& r : t.rows) {
      std::vector<std::string> line;
      for (double x : r) line.push_back(fmt(x));
      cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(t.columns.size(), 0);
    for (const auto& line : cells)
      for (std::size_t c = 0; c < line.size() && c < width.size(); ++c) width[c] = std::max(width[c], line[c].size());
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size() && c < width.size(); ++c) {
        os << std::string(width[c] - line[c].size() + (c ? 2 : 0), ' ') << line[c];
      }
      os << '\n';
    }
  }
  os << '\n';
  for (const auto& v : report.verdicts)
    os << (v.passed ? "PASS " : "FAIL ") << v.rule << ": " << v.detail << '\n';
  return os.str();
}

void append_summary(std::vector<double>& row, const MonteCarloSummary& s) {
  row.insert(row.end(), {s.mean, s.std_err, s.ci_lo, s.ci_hi});
}

ExperimentReport duality_experiment(const DualityConfig& cfg) {
  check_ladder(cfg.ladder);
  if (cfg.k < 2) throw DomainError("duality needs k >= 2");
  ExperimentReport rep;
  rep.experiment = "duality";
  rep.config = {{"ladder", ladder_json(cfg.ladder)}, {"k", cfg.k},
                {"walk_replicas", cfg.walk_replicas}, {"env_replicas", cfg.env_replicas},
                {"gap_shrink", cfg.gap_shrink}, {"seed", cfg.seed}};
  Table est{"estimates", {"N"}, {}};
  for (const char* p : {"a", "b", "c", "gap"}) {
    auto c = summary_columns(p);
    est.columns.insert(est.columns.end(), c.begin(), c.end());
  }
  const bool with_env = cfg.env_replicas > 0;
  bool bridge = true;
  std::string bridge_detail;
  std::vector<double> gaps;
  MonteCarloSummary last_a;

  for (int N : cfg.ladder) {
    auto pairs = parallel_map(static_cast<std::size_t>(cfg.walk_replicas), cfg.workers, [&](std::size_t r) {
      Stream stream = Stream::substream(stream_key(cfg.seed, 1, N), r);
      return polymer::duality_pair(walks::sample_ensemble(cfg.k, N, stream), cfg.f);
    });
    std::vector<double> a(pairs.size()), b(pairs.size()), gap(pairs.size());
    for (std::size_t r = 0; r < pairs.size(); ++r) {
      a[r] = pairs[r].exp_pi;
      b[r] = pairs[r].prod_x;
      gap[r] = a[r] - b[r];
    }
    const auto sa = summarize(a), sb = summarize(b), sg = summarize(gap);
    last_a = sa;
    gaps.push_back(std::fabs(sg.mean));
    std::vector<double> row{static_cast<double>(N)};
    append_summary(row, sa);
    append_summary(row, sb);

    Table raw{"walks_N" + std::to_string(N), {"replicate", "exp_pi", "prod_x"}, {}};
    for (std::size_t r = 0; r < a.size(); ++r) raw.rows.push_back({static_cast<double>(r), a[r], b[r]});
    rep.raw.push_back(std::move(raw));

    if (with_env) {
      const auto A = polymer::duality_amplitude(cfg.f, N);
      std::vector<double> zs;
      const auto sc = mc_estimate(
          [&](Stream&, std::size_t r) {
            const environment::EnvironmentField field{derive_seed(stream_key(cfg.seed, 2, N), {r})};
            return std::pow(polymer::partition_dp(N, A, field).value, cfg.k);
          },
          cfg.env_replicas, stream_key(cfg.seed, 2, N), cfg.workers, &zs);
      append_summary(row, sc);
      const bool ok = ci_overlap(sb, sc);
      bridge = bridge && ok;
      bridge_detail += "N=" + std::to_string(N) + (ok ? " overlap; " : " disjoint; ");
      Table rawc{"env_N" + std::to_string(N), {"replicate", "z_pow_k"}, {}};
      for (std::size_t r = 0; r < zs.size(); ++r) rawc.rows.push_back({static_cast<double>(r), zs[r]});
      rep.raw.push_back(std::move(rawc));
    } else {
      row.insert(row.end(), 4, NAN);
    }
    append_summary(row, sg);
    est.rows.push_back(std::move(row));
  }
  rep.tables.push_back(std::move(est));

  if (with_env) rep.verdicts.push_back({"exact_bridge", bridge, bridge_detail});
  if (cfg.ladder.size() >= 2) {
    const bool ok = gaps.back() <= gaps.front() / cfg.gap_shrink;
    rep.verdicts.push_back({"asymptotic_gap", ok,
                            "|a-b| " + fmt(gaps.front()) + " -> " + fmt(gaps.back()) + ", needs shrink by " +
                                fmt(cfg.gap_shrink)});
  }
  if (cfg.chaos_grid) {
    environment::ContinuumAmplitude amp{
        [f = cfg.f.eval](double t, double x) { return std::sqrt(2.0 * std::max(0.0, f(t, x))); },
        std::sqrt(2.0 * std::max(0.0, cfg.f.bound)), cfg.f.time_homogeneous};
    const auto z = chaos::estimate_Z_moments(amp, *cfg.chaos_grid, cfg.chaos_order, cfg.k, cfg.chaos_replicas,
                                             derive_seed(cfg.seed, {3}), cfg.workers);
    const auto& target = z.extrapolated[static_cast<std::size_t>(cfg.k) - 1];
    Table t{"chaos_target", {"k"}, {}};
    for (const char* p : {"fine", "coarse", "extrapolated"}) {
      auto c = summary_columns(p);
      t.columns.insert(t.columns.end(), c.begin(), c.end());
    }
    t.columns.insert(t.columns.end(), {"drift", "truncation_bound", "spatial_loss"});
    std::vector<double> row{static_cast<double>(cfg.k)};
    append_summary(row, z.fine.back());
    append_summary(row, z.coarse.back());
    append_summary(row, target);
    row.insert(row.end(), {z.drift.back(), z.truncation_bound, z.spatial_loss});
    t.rows.push_back(std::move(row));
    rep.tables.push_back(std::move(t));
    const bool ok = within_combined(last_a, target, cfg.chaos_z);
    rep.verdicts.push_back({"chaos_target", ok,
                            "(a) at N=" + std::to_string(cfg.ladder.back()) + " = " + fmt(last_a.mean) +
                                ", chaos moment = " + fmt(target.mean) + " within " + fmt(cfg.chaos_z) +
                                " combined stderr"});
  }
  return rep;
}

ExperimentReport exponential_moment_probe(const ExpMomentConfig& cfg) {
  check_ladder(cfg.ladder);
  if (cfg.beta < 0.0) throw DomainError("beta must be >= 0");
  ExperimentReport rep;
  rep.experiment = "expmoment";
  rep.config = {{"beta", cfg.beta}, {"ladder", ladder_json(cfg.ladder)}, {"replicas", cfg.replicas},
                {"plateau_z", cfg.plateau_z}, {"seed", cfg.seed}};
  Table t{"estimates", {"N"}, {}};
  auto c = summary_columns("moment");
  t.columns.insert(t.columns.end(), c.begin(), c.end());
  std::vector<MonteCarloSummary> ests;
  bool finite = true;
  std::string finite_detail = "all estimates finite";
  for (int N : cfg.ladder) {
    const double scale = cfg.beta / std::sqrt(static_cast<double>(N));
    try {
      ests.push_back(mc_estimate(
          [&](Stream& s, std::size_t) {
            return std::exp(scale * walks::local_time_zero(walks::sample_walk(N, s), N));
          },
          cfg.replicas, stream_key(cfg.seed, 4, N), cfg.workers));
    } catch (const NonFiniteSample& e) {
      finite = false;
      finite_detail = "N=" + std::to_string(N) + ": " + e.what();
      break;
    }
    std::vector<double> row{static_cast<double>(N)};
    append_summary(row, ests.back());
    t.rows.push_back(std::move(row));
  }
  rep.tables.push_back(std::move(t));
  rep.verdicts.push_back({"finite", finite, finite_detail});
  if (finite && ests.size() >= 2) {
    const auto& x = ests[ests.size() - 2];
    const auto& y = ests.back();
    rep.verdicts.push_back({"plateau", within_combined(x, y, cfg.plateau_z),
                            fmt(x.mean) + " vs " + fmt(y.mean) + ", |diff| / combined stderr = " +
                                fmt(std::fabs(x.mean - y.mean) / std::hypot(x.std_err, y.std_err))});
  }
  return rep;
}

ExperimentReport tightness_probe(const TightnessConfig& cfg) {
  check_ladder(cfg.ladder);
  if (cfg.m_ladder.empty() || !std::is_sorted(cfg.m_ladder.begin(), cfg.m_ladder.end()))
    throw DomainError("m ladder must be nonempty and increasing");
  ExperimentReport rep;
  rep.experiment = "tightness";
  rep.config = {{"k", cfg.k}, {"ladder", ladder_json(cfg.ladder)}, {"m_ladder", cfg.m_ladder},
                {"replicas", cfg.replicas}, {"final_level", cfg.final_level}, {"seed", cfg.seed}};
  Table t{"tails", {"N", "m", "p_mass", "p_max"}, {}};
  const std::size_t nm = cfg.m_ladder.size();
  std::vector<double> sup_mass(nm, 0.0), sup_max(nm, 0.0);
  for (int N : cfg.ladder) {
    const double root = std::sqrt(static_cast<double>(N));
    auto obs = parallel_map(static_cast<std::size_t>(cfg.replicas), cfg.workers, [&](std::size_t r) {
      Stream s = Stream::substream(stream_key(cfg.seed, 5, N), r);
      const auto ens = walks::sample_ensemble(cfg.k, N, s);
      int mx = 0;
      for (const auto& w : ens.walks())
        for (int p : w.positions()) mx = std::max(mx, std::abs(p));
      const auto mass = collisions::detect_collisions(ens).with_multiplicity.total_mass();
      return std::pair<double, double>{mass / root, mx / root};
    });
    for (std::size_t i = 0; i < nm; ++i) {
      const double m = cfg.m_ladder[i];
      double cm = 0, cx = 0;
      for (const auto& [mass, mx] : obs) {
        cm += mass > m;
        cx += mx > m;
      }
      const double R = static_cast<double>(obs.size());
      t.rows.push_back({static_cast<double>(N), m, cm / R, cx / R});
      sup_mass[i] = std::max(sup_mass[i], cm / R);
      sup_max[i] = std::max(sup_max[i], cx / R);
    }
  }
  rep.tables.push_back(std::move(t));
  auto judge = [&](const std::string& name, const std::vector<double>& sup) {
    bool mono = true;
    for (std::size_t i = 1; i < sup.size(); ++i) mono = mono && sup[i] <= sup[i - 1];
    const bool ok = mono && sup.back() < cfg.final_level;
    rep.verdicts.push_back({name, ok,
                            std::string(mono ? "sup over N non-increasing in m" : "sup over N increases in m") +
                                ", at m=" + fmt(cfg.m_ladder.back()) + " sup = " + fmt(sup.back())});
  };
  judge("mass_tail", sup_mass);
  judge("max_tail", sup_max);
  return rep;
}

WeightGenerator zero_weights() {
  return [](int N, Stream&) { return std::vector<double>(static_cast<std::size_t>(N), 0.0); };
}

WeightGenerator deterministic_weights() {
  return [](int N, Stream&) { return std::vector<double>(static_cast<std::size_t>(N), 1.0 / N); };
}

WeightGenerator polymer_weights(int k, const collisions::TestFunction& f) {
  return [k, f](int N, Stream& s) {
    return polymer::collision_weights(walks::sample_ensemble(k, N, s), polymer::duality_amplitude(f, N)).per_step;
  };
}

ExperimentReport product_sum_property_check(const WeightGenerator& gen, const ProductSumConfig& cfg) {
  check_ladder(cfg.ladder);
  ExperimentReport rep;
  rep.experiment = "product_sum";
  rep.config = {{"ladder", ladder_json(cfg.ladder)}, {"replicas", cfg.replicas},
                {"generator", cfg.generator}, {"seed", cfg.seed}};
  Table t{"concentration", {"N", "c_N_max", "violations", "p99_deviation", "mean_sum"}, {}};
  struct Obs {
    double sum, cmax, dev;
    bool ok;
  };
  long long violations = 0;
  std::vector<double> p99;
  for (int N : cfg.ladder) {
    auto obs = parallel_map(static_cast<std::size_t>(cfg.replicas), cfg.workers, [&](std::size_t r) {
      Stream s = Stream::substream(stream_key(cfg.seed, 6, N), r);
      const auto X = gen(N, s);
      double sum = 0, sq = 0, lp = 0, cmax = 0;
      for (double x : X) {
        if (x < 0.0) throw ContractError("generated weight is negative");
        sum += x;
        sq += x * x;
        lp += std::log1p(x);
        cmax = std::max(cmax, x);
      }
      // rounding slack for the two summations
      const double eps = 1e-12 * (1.0 + sum);
      const bool ok = lp <= sum + eps && lp >= sum - 0.5 * sq - eps;
      return Obs{sum, cmax, std::fabs(std::expm1(lp - sum)), ok};
    });
    double cmax = 0, msum = 0;
    long long bad = 0;
    std::vector<double> devs;
    for (const auto& o : obs) {
      cmax = std::max(cmax, o.cmax);
      msum += o.sum;
      bad += !o.ok;
      devs.push_back(o.dev);
    }
    const auto q = static_cast<std::size_t>(std::ceil(0.99 * devs.size())) - 1;
    std::nth_element(devs.begin(), devs.begin() + static_cast<std::ptrdiff_t>(q), devs.end());
    p99.push_back(devs[q]);
    violations += bad;
    t.rows.push_back({static_cast<double>(N), cmax, static_cast<double>(bad), devs[q], msum / obs.size()});
  }
  rep.tables.push_back(std::move(t));
  rep.verdicts.push_back({"sandwich", violations == 0, std::to_string(violations) + " replicates outside the bounds"});
  bool mono = true;
  for (std::size_t i = 1; i < p99.size(); ++i) mono = mono && p99[i] <= p99[i - 1];
  const bool shrink = p99.front() == 0.0 || p99.back() < p99.front();
  rep.verdicts.push_back({"concentration", mono && shrink,
                          "99th percentile |ratio - 1| " + fmt(p99.front()) + " -> " + fmt(p99.back())});
  return rep;
}

ExperimentReport convergence_study(const ConvergenceConfig& cfg) {
  check_ladder(cfg.ladder);
  ExperimentReport rep;
  rep.experiment = "convergence";
  rep.config = {{"k", cfg.k}, {"ladder", ladder_json(cfg.ladder)}, {"replicas", cfg.replicas}, {"seed", cfg.seed}};
  struct Obs {
    double pi, pi_prime, excess;
  };
  std::vector<std::vector<double>> pis, primes;
  Table t{"levels", {"N"}, {}};
  for (const char* p : {"pi", "pi_prime", "excess"}) {
    auto c = summary_columns(p);
    t.columns.insert(t.columns.end(), c.begin(), c.end());
  }
  std::vector<MonteCarloSummary> excess;
  for (int N : cfg.ladder) {
    const double root = std::sqrt(static_cast<double>(N));
    auto obs = parallel_map(static_cast<std::size_t>(cfg.replicas), cfg.workers, [&](std::size_t r) {
      Stream s = Stream::substream(stream_key(cfg.seed, 7, N), r);
      const auto m = collisions::detect_collisions(walks::sample_ensemble(cfg.k, N, s));
      return Obs{collisions::integrate(m.with_multiplicity, cfg.f) / root,
                 collisions::integrate(m.distinct, cfg.f) / root,
                 (m.with_multiplicity.total_mass() - m.distinct.total_mass()) / root};
    });
    std::vector<double> a, b, e;
    for (const auto& o : obs) {
      a.push_back(o.pi);
      b.push_back(o.pi_prime);
      e.push_back(o.excess);
    }
    std::vector<double> row{static_cast<double>(N)};
    append_summary(row, summarize(a));
    append_summary(row, summarize(b));
    excess.push_back(summarize(e));
    append_summary(row, excess.back());
    t.rows.push_back(std::move(row));
    Table raw{"samples_N" + std::to_string(N), {"replicate", "pi", "pi_prime"}, {}};
    for (std::size_t r = 0; r < a.size(); ++r) raw.rows.push_back({static_cast<double>(r), a[r], b[r]});
    rep.raw.push_back(std::move(raw));
    pis.push_back(std::move(a));
    primes.push_back(std::move(b));
  }
  rep.tables.push_back(std::move(t));

  Table ks{"ks", {"N_from", "N_to", "statistic", "p_value"}, {}};
  std::vector<double> consecutive;
  for (std::size_t i = 0; i + 1 < pis.size(); ++i) {
    const auto r = ks_two_sample(pis[i], pis[i + 1], cfg.seed);
    consecutive.push_back(r.statistic);
    ks.rows.push_back({static_cast<double>(cfg.ladder[i]), static_cast<double>(cfg.ladder[i + 1]), r.statistic,
                       r.p_value});
  }
  const auto merge = ks_two_sample(pis.back(), primes.back(), cfg.seed);
  ks.rows.push_back({static_cast<double>(cfg.ladder.back()), static_cast<double>(cfg.ladder.back()),
                     merge.statistic, merge.p_value});
  rep.tables.push_back(std::move(ks));

  if (consecutive.size() >= 2) {
    bool dec = true;
    for (std::size_t i = 1; i < consecutive.size(); ++i) dec = dec && consecutive[i] < consecutive[i - 1];
    rep.verdicts.push_back({"ks_consecutive", dec,
                            "consecutive KS " + fmt(consecutive.front()) + " -> " + fmt(consecutive.back())});
  }
  const bool merged = merge.statistic == 0.0 || (!consecutive.empty() && merge.statistic < consecutive.back());
  rep.verdicts.push_back({"merge", merged,
                          "KS(Pi, Pi') at N=" + std::to_string(cfg.ladder.back()) + " = " + fmt(merge.statistic) +
                              (consecutive.empty() ? std::string() : ", last consecutive = " + fmt(consecutive.back()))});
  bool dec = true;
  for (std::size_t i = 1; i < excess.size(); ++i) dec = dec && excess[i].mean < excess[i - 1].mean;
  const bool all_zero = std::all_of(excess.begin(), excess.end(), [](const auto& s) { return s.mean == 0.0; });
  rep.verdicts.push_back({"excess_decay", dec || all_zero,
                          "mean N^-1/2 ||Pi - Pi'|| " + fmt(excess.front().mean) + " -> " + fmt(excess.back().mean)});
  return rep;
}

ExperimentReport moment_plateau(const PlateauConfig& cfg) {
  check_ladder(cfg.ladder);
  ExperimentReport rep;
  rep.experiment = "partition";
  rep.config = {{"k", cfg.k}, {"ladder", ladder_json(cfg.ladder)}, {"replicas", cfg.replicas},
                {"plateau_z", cfg.plateau_z}, {"seed", cfg.seed}};
  Table t{"moments", {"N"}, {}};
  auto c = summary_columns("moment");
  t.columns.insert(t.columns.end(), c.begin(), c.end());
  std::vector<MonteCarloSummary> ests;
  for (int N : cfg.ladder) {
    const auto A = polymer::duality_amplitude(cfg.f, N);
    ests.push_back(mc_estimate(
        [&](Stream&, std::size_t r) {
          const environment::EnvironmentField field{derive_seed(stream_key(cfg.seed, 8, N), {r})};
          return std::pow(polymer::partition_dp(N, A, field).value, cfg.k);
        },
        cfg.replicas, stream_key(cfg.seed, 8, N), cfg.workers));
    std::vector<double> row{static_cast<double>(N)};
    append_summary(row, ests.back());
    t.rows.push_back(std::move(row));
  }
  rep.tables.push_back(std::move(t));
  if (ests.size() >= 2) {
    const auto& x = ests[ests.size() - 2];
    const auto& y = ests.back();
    rep.verdicts.push_back({"plateau", within_combined(x, y, cfg.plateau_z),
                            fmt(x.mean) + " vs " + fmt(y.mean) + ", |diff| / combined stderr = " +
                                fmt(std::fabs(x.mean - y.mean) / std::hypot(x.std_err, y.std_err))});
    bool rising = true;
    for (std::size_t i = 1; i < ests.size(); ++i)
      rising = rising && ests[i].mean - ests[i - 1].mean >
                             cfg.plateau_z * std::hypot(ests[i].std_err, ests[i - 1].std_err);
    rep.verdicts.push_back({"no_blowup", !rising,
                            rising ? "every step rises significantly" : "no significant rise at every step"});
  }
  return rep;
}

ExperimentReport chaos_moments(const ChaosConfig& cfg) {
  ExperimentReport rep;
  rep.experiment = "chaos";
  rep.config = {{"dt", cfg.grid.dt}, {"dx", cfg.grid.dx}, {"L", cfg.grid.L}, {"M", cfg.order},
                {"gamma", cfg.gamma}, {"k", cfg.k}, {"replicas", cfg.replicas}, {"seed", cfg.seed}};
  std::vector<chaos::ZReplica> rows;
  const auto z = chaos::estimate_Z_moments(environment::ContinuumAmplitude::constant(cfg.gamma), cfg.grid,
                                           cfg.order, cfg.k, cfg.replicas, cfg.seed, cfg.workers, 0.5, &rows);
  Table t{"moments", {"p"}, {}};
  for (const char* p : {"fine", "coarse", "extrapolated"}) {
    auto c = summary_columns(p);
    t.columns.insert(t.columns.end(), c.begin(), c.end());
  }
  t.columns.push_back("drift");
  for (int p = 0; p < cfg.k; ++p) {
    std::vector<double> row{static_cast<double>(p + 1)};
    append_summary(row, z.fine[p]);
    append_summary(row, z.coarse[p]);
    append_summary(row, z.extrapolated[p]);
    row.push_back(z.drift[p]);
    t.rows.push_back(std::move(row));
  }
  rep.tables.push_back(std::move(t));
  const double series = chaos::second_moment_series(cfg.gamma);
  rep.tables.push_back({"diagnostics",
                        {"series", "truncation_bound", "spatial_loss", "rate"},
                        {{series, z.truncation_bound, z.spatial_loss, z.rate}}});
  Table raw{"replicas", {"replicate", "fine", "coarse"}, {}};
  for (std::size_t r = 0; r < rows.size(); ++r)
    raw.rows.push_back({static_cast<double>(r), rows[r].fine.value, rows[r].coarse.value});
  rep.raw.push_back(std::move(raw));

  const auto& m1 = z.fine[0];
  rep.verdicts.push_back({"centered", std::fabs(m1.mean - 1.0) <= 4.0 * m1.std_err,
                          "first moment " + fmt(m1.mean) + " +- " + fmt(m1.std_err)});
  if (cfg.k >= 2) {
    const auto& m2 = z.extrapolated[1];
    const double dev = std::fabs(m2.mean - series);
    rep.verdicts.push_back({"second_moment", dev <= cfg.z * m2.std_err,
                            "extrapolated " + fmt(m2.mean) + " +- " + fmt(m2.std_err) + " vs series " + fmt(series)});
  }
  return rep;
}

}  // namespace collide::harness
