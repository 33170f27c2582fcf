#include "collide/kernels.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>

#include "collide/environment.hpp"
#include "collide/errors.hpp"
#include "collide/numeric.hpp"

namespace collide::kernels {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_heat_kernel(double t, double x) { return -x * x / (2.0 * t) - 0.5 * (kLog2Pi + std::log(t)); }

// Welford accumulator for the Monte-Carlo estimators below.
struct Moments {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double y) {
    ++n;
    const double d = y - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (y - mean);
  }
  Estimate estimate() const {
    const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n))};
  }
};

// Stick-breaking draw of 0 < t_1 < ... < t_n < 1. Each gap takes a fraction
// u = V^2 of the remaining length; returns log of the proposal density.
double draw_times(int n, Stream& stream, std::vector<double>& t, std::vector<double>& gaps) {
  t.resize(static_cast<std::size_t>(n));
  gaps.resize(static_cast<std::size_t>(n));
  double rest = 1.0;
  double prev = 0.0;
  double logq = 0.0;
  for (int j = 0; j < n; ++j) {
    const double v = stream.uniform_pos();
    const double gap = rest * v * v;
    logq += -std::numbers::ln2 - 0.5 * std::log(gap) - 0.5 * std::log(rest);
    rest -= gap;
    prev += gap;
    gaps[static_cast<std::size_t>(j)] = gap;
    t[static_cast<std::size_t>(j)] = prev;
  }
  return logq;
}

struct GaussLegendre {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;  // sum to 1

  explicit GaussLegendre(int q) {
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
        table(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(q)),
              &gsl_integration_glfixed_table_free);
    if (!table) throw QuadratureFailure("cannot build a Gauss-Legendre rule");
    nodes.resize(static_cast<std::size_t>(q));
    weights.resize(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
      gsl_integration_glfixed_point(0.0, 1.0, static_cast<std::size_t>(i), &nodes[static_cast<std::size_t>(i)],
                                    &weights[static_cast<std::size_t>(i)], table.get());
    }
  }
};

}  // namespace

bool SimplexPoint::in_simplex() const noexcept {
  double prev = 0.0;
  for (double ti : t) {
    if (!(ti > prev)) return false;
    prev = ti;
  }
  return t.empty() || t.back() <= 1.0;
}

double rw_transition(int i, long long x) {
  if (i < 0) return 0.0;
  const long long ax = x < 0 ? -x : x;
  if (ax > i || ((i + ax) & 1) != 0) return 0.0;
  if (i == 0) return 1.0;
  return std::exp(log_choose(i, (i + x) / 2) - i * std::numbers::ln2);
}

double heat_kernel(double t, double x) {
  if (!(t > 0.0)) throw DomainError("heat_kernel: t must be positive");
  return std::exp(log_heat_kernel(t, x));
}

double chain_density_discrete(const LatticeChain& chain) {
  if (chain.times.size() != chain.sites.size()) return 0.0;
  int prev_i = 0;
  long long prev_z = 0;
  double p = 1.0;
  for (std::size_t j = 0; j < chain.times.size(); ++j) {
    const int i = chain.times[j];
    if (i <= prev_i) return 0.0;
    p *= rw_transition(i - prev_i, chain.sites[j] - prev_z);
    if (p == 0.0) return 0.0;
    prev_i = i;
    prev_z = chain.sites[j];
  }
  return p;
}

double chain_density_gaussian(const SimplexPoint& pt) {
  if (pt.t.size() != pt.x.size() || !pt.in_simplex()) return 0.0;
  double logp = 0.0;
  double pt_prev = 0.0;
  double px_prev = 0.0;
  for (std::size_t j = 0; j < pt.t.size(); ++j) {
    logp += log_heat_kernel(pt.t[j] - pt_prev, pt.x[j] - px_prev);
    pt_prev = pt.t[j];
    px_prev = pt.x[j];
  }
  return std::exp(logp);
}

double discrete_kernel_pNn(const SimplexPoint& pt, int N, int n) {
  if (N < 1) throw DomainError("discrete_kernel_pNn: N must be >= 1");
  if (static_cast<int>(pt.order()) != n || pt.x.size() != pt.t.size())
    throw DomainError("discrete_kernel_pNn: point order does not match n");
  if (n > N) return 0.0;
  LatticeChain chain;
  chain.times.reserve(static_cast<std::size_t>(n));
  chain.sites.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double tj = pt.t[static_cast<std::size_t>(j)];
    if (!(tj > 0.0) || tj > 1.0) return 0.0;
    const auto [i, z] = environment::cell_of(tj, pt.x[static_cast<std::size_t>(j)], N);
    chain.times.push_back(i);
    chain.sites.push_back(z);
  }
  return std::ldexp(chain_density_discrete(chain), -n);
}

double block_average_cell(const Integrand& g, std::span<const int> times, std::span<const int> sites,
                          int N, int nodes) {
  const std::size_t n = times.size();
  if (sites.size() != n) throw DomainError("block_average: times and sites differ in length");
  if (nodes < 1) throw DomainError("block_average: need at least one node");
  thread_local std::vector<std::unique_ptr<GaussLegendre>> rules;
  if (rules.size() <= static_cast<std::size_t>(nodes)) rules.resize(static_cast<std::size_t>(nodes) + 1);
  auto& slot = rules[static_cast<std::size_t>(nodes)];
  if (!slot) slot = std::make_unique<GaussLegendre>(nodes);
  const GaussLegendre& rule = *slot;
  const double sqrtN = std::sqrt(static_cast<double>(N));
  const std::size_t dims = 2 * n;
  std::vector<double> lo(dims), width(dims);
  for (std::size_t j = 0; j < n; ++j) {
    lo[j] = (times[j] - 1.0) / N;
    width[j] = 1.0 / N;
    lo[n + j] = (sites[j] - 1.0) / sqrtN;
    width[n + j] = 2.0 / sqrtN;
  }
  std::vector<double> t(n), x(n);
  std::vector<int> idx(dims, 0);
  CompensatedSum sum;
  const auto q = static_cast<std::size_t>(nodes);
  while (true) {
    double w = 1.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const auto k = static_cast<std::size_t>(idx[d]);
      const double v = lo[d] + width[d] * rule.nodes[k];
      w *= rule.weights[k];
      if (d < n)
        t[d] = v;
      else
        x[d - n] = v;
    }
    const double gv = g(t, x);
    if (!std::isfinite(gv)) throw QuadratureFailure("block_average: integrand is not finite on the rectangle");
    sum += w * gv;
    std::size_t d = 0;
    while (d < dims && static_cast<std::size_t>(++idx[d]) == q) idx[d++] = 0;
    if (d == dims) break;
  }
  return sum.value();
}

double block_average(const Integrand& g, const SimplexPoint& pt, int N, int nodes) {
  std::vector<int> times, sites;
  for (std::size_t j = 0; j < pt.order(); ++j) {
    const auto [i, z] = environment::cell_of(pt.t[j], pt.x[j], N);
    times.push_back(i);
    sites.push_back(z);
  }
  return block_average_cell(g, times, sites, N, nodes);
}

double rho_chain_norm_sq(int n) {
  if (n < 0) throw DomainError("rho_chain_norm_sq: n must be >= 0");
  return std::exp(-n * std::numbers::ln2 - std::lgamma(n / 2.0 + 1.0));
}

Estimate rho_chain_norm_sq_mc(int n, long long samples, Stream& stream) {
  if (n < 0) throw DomainError("rho_chain_norm_sq_mc: n must be >= 0");
  if (n == 0) return {1.0, 0.0};
  Moments acc;
  std::vector<double> t, gaps;
  for (long long s = 0; s < samples; ++s) {
    const double logq = draw_times(n, stream, t, gaps);
    double logrho = 0.0;
    for (int j = 0; j < n; ++j) {
      const double gap = gaps[static_cast<std::size_t>(j)];
      const double y = std::sqrt(gap) * stream.normal();
      logrho += log_heat_kernel(gap, y);
    }
    acc.add(std::exp(logrho - logq));
  }
  return acc.estimate();
}

double scaled_pNn_norm_sq(int n, int N) {
  if (n < 0 || N < 1) throw DomainError("scaled_pNn_norm_sq: need n >= 0, N >= 1");
  if (n == 0) return 1.0;
  if (n > N) return 0.0;
  // Sum_z p_n(i, z)^2 factorizes into prod_j p(2 (i_j - i_{j-1}), 0).
  std::vector<double> ret(static_cast<std::size_t>(N) + 1);
  for (int d = 1; d <= N; ++d) ret[static_cast<std::size_t>(d)] = rw_transition(2 * d, 0);
  std::vector<double> level(static_cast<std::size_t>(N) + 1, 0.0);
  for (int i = 1; i <= N; ++i) level[static_cast<std::size_t>(i)] = ret[static_cast<std::size_t>(i)];
  for (int m = 2; m <= n; ++m) {
    std::vector<double> next(static_cast<std::size_t>(N) + 1, 0.0);
    for (int i = m; i <= N; ++i) {
      CompensatedSum s;
      for (int ip = m - 1; ip < i; ++ip)
        s += level[static_cast<std::size_t>(ip)] * ret[static_cast<std::size_t>(i - ip)];
      next[static_cast<std::size_t>(i)] = s.value();
    }
    level.swap(next);
  }
  CompensatedSum total;
  for (int i = 1; i <= N; ++i) total += level[static_cast<std::size_t>(i)];
  return std::ldexp(total.value(), -n) * std::pow(static_cast<double>(N), -0.5 * n);
}

Estimate local_clt_l2_error(int n, int N, long long budget, Stream& stream) {
  if (n < 1 || n > 3) throw DomainError("local_clt_l2_error: n must be 1, 2 or 3");
  if (N < 1) throw DomainError("local_clt_l2_error: N must be >= 1");
  if (budget < 10000) throw DomainError("local_clt_l2_error: budget must be >= 1e4");
  const double scale = std::pow(static_cast<double>(N), 0.5 * n);
  const double widen = 2.0 / N;
  Moments acc;
  std::vector<double> t, gaps;
  SimplexPoint pt;
  pt.t.resize(static_cast<std::size_t>(n));
  pt.x.resize(static_cast<std::size_t>(n));
  for (long long s = 0; s < budget; ++s) {
    double logq = draw_times(n, stream, t, gaps);
    double x = 0.0;
    double logrho = 0.0;
    for (int j = 0; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double gap = gaps[uj];
      // Half the mass tracks the Gaussian kernel, half the lattice spread.
      const double v1 = 2.0 * gap;
      const double v2 = 2.0 * (gap + widen);
      const double v = stream.uniform() < 0.5 ? v1 : v2;
      const double y = std::sqrt(v) * stream.normal();
      const double q1 = std::exp(log_heat_kernel(v1, y));
      const double q2 = std::exp(log_heat_kernel(v2, y));
      logq += std::log(0.5 * q1 + 0.5 * q2);
      logrho += log_heat_kernel(gap, y);
      x += y;
      pt.t[uj] = t[uj];
      pt.x[uj] = x;
    }
    const double diff = std::exp(logrho) - scale * discrete_kernel_pNn(pt, N, n);
    acc.add(diff * diff * std::exp(-logq));
  }
  const Estimate sq = acc.estimate();
  const double norm = std::sqrt(std::max(sq.value, 0.0));
  return {norm, norm > 0.0 ? sq.std_err / (2.0 * norm) : std::sqrt(sq.std_err)};
}

void write_norm_table_csv(std::ostream& os, std::span<const NormRow> rows) {
  os << "n,closed_form,mc_estimate,stderr\n";
  os.precision(17);
  for (const auto& r : rows) os << r.n << ',' << r.closed_form << ',' << r.mc.value << ',' << r.mc.std_err << '\n';
}

}  // namespace collide::kernels
