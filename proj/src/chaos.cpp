#include "collide/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "collide/errors.hpp"
#include "collide/kernels.hpp"
#include "collide/numeric.hpp"
#include "collide/parallel.hpp"
#include "collide/random.hpp"

namespace collide::chaos {

namespace {

int half_width(const WhiteNoiseGrid& g) { return static_cast<int>(std::ceil(g.L / g.dx - 1e-9)); }

// Kernel entries below this fraction of the row peak are dropped.
constexpr double kKernelFloor = 1e-18;

struct Kernel {
  int S = 0;
  std::vector<std::vector<double>> rows;  // rows[d][e + S - 1], d >= 1
  std::vector<int> reach;                 // largest |e| kept at lag d
};

Kernel build_kernel(const WhiteNoiseGrid& g, int T, int S, bool squared) {
  Kernel k;
  k.S = S;
  k.rows.resize(T);
  k.reach.assign(T, 0);
  const double cut = std::sqrt(-2.0 * std::log(kKernelFloor));
  for (int d = 1; d < T; ++d) {
    const double t = d * g.dt;
    k.reach[d] = std::min(S - 1, static_cast<int>(std::ceil(cut * std::sqrt(t) / g.dx)));
    auto& row = k.rows[d];
    row.assign(2 * S - 1, 0.0);
    for (int e = -k.reach[d]; e <= k.reach[d]; ++e) {
      const double v = kernels::heat_kernel(t, e * g.dx);
      row[e + S - 1] = squared ? v * v : v;
    }
  }
  return k;
}

std::vector<double> amplitude_table(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& g, int T,
                                    int S) {
  std::vector<double> amp(static_cast<std::size_t>(T) * S);
  for (int j = 0; j < T; ++j)
    for (int l = 0; l < S; ++l) amp[static_cast<std::size_t>(j) * S + l] = a(g.t_center(j), g.x_center(l));
  return amp;
}

// out[j][l] = sum_{j' < j} sum_{l'} in[j'][l'] K[j - j'][l - l']
void propagate(const std::vector<double>& in, std::vector<double>& out, const Kernel& k, int T) {
  const int S = k.S;
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 1; j < T; ++j) {
    double* acc = out.data() + static_cast<std::size_t>(j) * S;
    for (int jp = 0; jp < j; ++jp) {
      const int d = j - jp;
      const double* src = in.data() + static_cast<std::size_t>(jp) * S;
      const double* row = k.rows[d].data() + (S - 1);
      const int r = k.reach[d];
      for (int lp = 0; lp < S; ++lp) {
        const double v = src[lp];
        if (v == 0.0) continue;
        const int lo = std::max(0, lp - r);
        const int hi = std::min(S - 1, lp + r);
        for (int l = lo; l <= hi; ++l) acc[l] += v * row[l - lp];
      }
    }
  }
}

void check_resolution(const WhiteNoiseGrid& g, int M) {
  g.validate();
  if (M < 0) throw DomainError("truncation order must be >= 0");
  if (M > 0 && g.dt >= 1.0 / M)
    throw ResolutionError("dt = " + std::to_string(g.dt) + " cannot hold time-ordered chains of length " +
                          std::to_string(M));
  if (g.dx > std::sqrt(g.dt) * (1.0 + 1e-12))
    throw ResolutionError("dx = " + std::to_string(g.dx) + " exceeds sqrt(dt)");
}

double truncation_tail(double sup, int M) {
  double tail = 0.0;
  for (int n = M + 1; n < M + 400; ++n) {
    const double t = std::exp(2.0 * n * std::log(sup)) * kernels::rho_chain_norm_sq(n);
    tail += t;
    if (t < 1e-18 * tail || t == 0.0) break;
  }
  return sup == 0.0 ? 0.0 : tail;
}

}  // namespace

int WhiteNoiseGrid::time_cells() const { return static_cast<int>(std::lround(1.0 / dt)); }

int WhiteNoiseGrid::space_cells() const { return 2 * half_width(*this); }

double WhiteNoiseGrid::x_center(int l) const { return (l - half_width(*this) + 0.5) * dx; }

WhiteNoiseGrid WhiteNoiseGrid::coarser() const { return {2 * dt, 2 * dx, L, seed}; }

void WhiteNoiseGrid::validate() const {
  if (!(dt > 0.0) || !(dx > 0.0) || !(L > 0.0)) throw DomainError("grid needs dt, dx, L > 0");
  if (std::fabs(1.0 / dt - std::round(1.0 / dt)) > 1e-9) throw DomainError("1/dt must be an integer");
}

NoiseSample sample_noise(const WhiteNoiseGrid& grid) {
  grid.validate();
  NoiseSample ns;
  ns.T = grid.time_cells();
  ns.S = grid.space_cells();
  ns.xi.resize(static_cast<std::size_t>(ns.T) * ns.S);
  Stream stream(grid.seed);
  const double sd = std::sqrt(grid.area());
  for (auto& x : ns.xi) x = sd * stream.normal();
  return ns;
}

NoiseSample coarsen(const NoiseSample& fine) {
  if (fine.T % 2 != 0) throw DomainError("coarsening needs an even number of time cells");
  const int Xf = fine.S / 2;
  const int Xc = (Xf + 1) / 2;
  NoiseSample c;
  c.T = fine.T / 2;
  c.S = 2 * Xc;
  c.xi.assign(static_cast<std::size_t>(c.T) * c.S, 0.0);
  for (int j = 0; j < fine.T; ++j)
    for (int l = 0; l < fine.S; ++l) {
      const int signed_l = l - Xf;
      const int lc = (signed_l >= 0 ? signed_l / 2 : -((1 - signed_l) / 2)) + Xc;
      c.xi[static_cast<std::size_t>(j / 2) * c.S + lc] += fine.at(j, l);
    }
  return c;
}

ChaosApproximation simulate_Z(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& grid, int M) {
  check_resolution(grid, M);
  return simulate_Z(a, grid, sample_noise(grid), M);
}

ChaosApproximation simulate_Z(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& grid,
                              const NoiseSample& noise, int M) {
  check_resolution(grid, M);
  const int T = grid.time_cells();
  const int S = grid.space_cells();
  if (noise.T != T || noise.S != S) throw DomainError("noise sample does not match the grid");
  ChaosApproximation out;
  out.terms.assign(M + 1, 0.0);
  out.terms[0] = 1.0;
  out.truncation_bound = truncation_tail(a.sup_bound, M);
  if (M == 0) return out;

  const auto amp = amplitude_table(a, grid, T, S);
  std::vector<double> weight(amp.size());
  for (std::size_t i = 0; i < amp.size(); ++i) weight[i] = amp[i] * noise.xi[i];

  std::vector<double> v(amp.size()), acc(amp.size());
  for (int j = 0; j < T; ++j)
    for (int l = 0; l < S; ++l) {
      const std::size_t i = static_cast<std::size_t>(j) * S + l;
      v[i] = weight[i] * kernels::heat_kernel(grid.t_center(j), grid.x_center(l));
    }
  const Kernel k = build_kernel(grid, T, S, false);
  for (int n = 1; n <= M; ++n) {
    if (n > 1) {
      propagate(v, acc, k, T);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = weight[i] * acc[i];
    }
    CompensatedSum s;
    for (double x : v) s += x;
    out.terms[n] = s.value();
  }
  CompensatedSum total;
  for (double t : out.terms) total += t;
  out.value = total.value();
  return out;
}

std::vector<double> discrete_second_moments(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& grid,
                                            int M) {
  check_resolution(grid, M);
  const int T = grid.time_cells();
  const int S = grid.space_cells();
  std::vector<double> out(M + 1, 0.0);
  out[0] = 1.0;
  if (M == 0) return out;
  const auto amp = amplitude_table(a, grid, T, S);
  std::vector<double> w(amp.size());
  for (std::size_t i = 0; i < amp.size(); ++i) w[i] = amp[i] * amp[i] * grid.area();
  std::vector<double> q(amp.size()), acc(amp.size());
  for (int j = 0; j < T; ++j)
    for (int l = 0; l < S; ++l) {
      const std::size_t i = static_cast<std::size_t>(j) * S + l;
      const double r = kernels::heat_kernel(grid.t_center(j), grid.x_center(l));
      q[i] = w[i] * r * r;
    }
  const Kernel k = build_kernel(grid, T, S, true);
  for (int n = 1; n <= M; ++n) {
    if (n > 1) {
      propagate(q, acc, k, T);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] = w[i] * acc[i];
    }
    CompensatedSum s;
    for (double x : q) s += x;
    out[n] = s.value();
  }
  return out;
}

double second_moment_series(double gamma, double tol) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const double x = gamma * gamma / 2.0;
  if (x == 0.0) return 1.0;
  CompensatedSum sum;
  for (int n = 0;; ++n) {
    sum += std::exp(n * std::log(x) - std::lgamma(n / 2.0 + 1.0));
    // terms two apart shrink by q = x^2 / ((m + 2) / 2) for m > n
    const double q = x * x / ((n + 1) / 2.0 + 1.0);
    if (q < 1.0) {
      const double t1 = std::exp((n + 1) * std::log(x) - std::lgamma((n + 1) / 2.0 + 1.0));
      const double t2 = std::exp((n + 2) * std::log(x) - std::lgamma((n + 2) / 2.0 + 1.0));
      if ((t1 + t2) / (1.0 - q) < tol) break;
    }
  }
  return sum.value();
}

double spatial_mass_loss(double L) { return std::erfc(L / std::sqrt(2.0)); }

ZMoments estimate_Z_moments(const environment::ContinuumAmplitude& a, const WhiteNoiseGrid& grid, int M, int k,
                            int R, std::uint64_t master, int workers, double rate, std::vector<ZReplica>* replicas) {
  if (R < 1000) throw DomainError("estimate_Z_moments needs R >= 1000");
  if (k < 1) throw DomainError("k must be >= 1");
  const WhiteNoiseGrid coarse_grid = grid.coarser();
  check_resolution(grid, M);
  check_resolution(coarse_grid, M);

  auto rows = parallel_map(static_cast<std::size_t>(R), workers, [&](std::size_t r) {
    WhiteNoiseGrid g = grid;
    g.seed = derive_seed(master, {r});
    const NoiseSample noise = sample_noise(g);
    WhiteNoiseGrid gc = coarse_grid;
    gc.seed = g.seed;
    return ZReplica{g.seed, simulate_Z(a, g, noise, M), simulate_Z(a, gc, coarsen(noise), M)};
  });

  ZMoments z;
  z.k = k;
  z.rate = rate;
  z.truncation_bound = rows.front().fine.truncation_bound;
  z.spatial_loss = spatial_mass_loss(grid.L);
  const double f = std::pow(2.0, rate);
  std::vector<double> pf(R), pc(R), pe(R);
  for (int p = 1; p <= k; ++p) {
    for (int r = 0; r < R; ++r) {
      pf[r] = std::pow(rows[r].fine.value, p);
      pc[r] = std::pow(rows[r].coarse.value, p);
      pe[r] = (f * pf[r] - pc[r]) / (f - 1.0);
    }
    z.fine.push_back(summarize(pf));
    z.coarse.push_back(summarize(pc));
    z.extrapolated.push_back(summarize(pe));
    z.drift.push_back(std::fabs(z.fine.back().mean - z.coarse.back().mean));
  }
  if (replicas) *replicas = std::move(rows);
  return z;
}

void write_replicas_csv(std::ostream& os, const WhiteNoiseGrid& grid, int M, const std::vector<ZReplica>& replicas) {
  os << "# dt=" << grid.dt << " dx=" << grid.dx << " L=" << grid.L << " M=" << M << '\n';
  os << "seed,grid,value";
  for (int n = 0; n <= M; ++n) os << ",term_" << n;
  os << '\n';
  os.precision(17);
  auto row = [&](std::uint64_t seed, const char* which, const ChaosApproximation& c) {
    os << seed << ',' << which << ',' << c.value;
    for (double t : c.terms) os << ',' << t;
    os << '\n';
  };
  for (const auto& r : replicas) {
    row(r.seed, "fine", r.fine);
    row(r.seed, "coarse", r.coarse);
  }
}

}  // namespace collide::chaos
