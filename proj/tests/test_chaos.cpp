#include "doctest.h"

#include <cmath>
#include <functional>
#include <sstream>

#include "collide/chaos.hpp"
#include "collide/errors.hpp"
#include "collide/kernels.hpp"

using namespace collide;
using namespace collide::chaos;
using environment::ContinuumAmplitude;

namespace {

ContinuumAmplitude wavy() {
  ContinuumAmplitude a;
  a.eval = [](double t, double x) { return 0.7 + 0.2 * t - 0.1 * x * x; };
  a.sup_bound = 0.9;
  return a;
}

struct Cell {
  int j, l;
};

// Every strictly time-ordered chain of n cells, with its coefficient
// a(c_1) rho(c_1) prod a(c_i) rho(c_i - c_{i-1}).
void each_chain(const WhiteNoiseGrid& g, const ContinuumAmplitude& a, int n,
                const std::function<void(const std::vector<Cell>&, double)>& fn) {
  const int T = g.time_cells(), S = g.space_cells();
  std::vector<Cell> chain;
  std::function<void(double)> rec = [&](double coef) {
    if (static_cast<int>(chain.size()) == n) {
      fn(chain, coef);
      return;
    }
    const int j0 = chain.empty() ? 0 : chain.back().j + 1;
    for (int j = j0; j < T; ++j)
      for (int l = 0; l < S; ++l) {
        const double t = g.t_center(j), x = g.x_center(l);
        const double r = chain.empty() ? kernels::heat_kernel(t, x)
                                       : kernels::heat_kernel(t - g.t_center(chain.back().j),
                                                              x - g.x_center(chain.back().l));
        chain.push_back({j, l});
        rec(coef * a(t, x) * r);
        chain.pop_back();
      }
  };
  rec(1.0);
}

double mittag_leffler_half(double z) { return std::exp(z * z) * std::erfc(-z); }

}  // namespace

TEST_CASE("grid geometry") {
  WhiteNoiseGrid g{1.0 / 32, 1.0 / 8, 6.0, 1};
  CHECK(g.time_cells() == 32);
  CHECK(g.space_cells() == 96);
  CHECK(g.x_center(0) == doctest::Approx(-6.0 + 1.0 / 16));
  CHECK(g.x_center(95) == doctest::Approx(6.0 - 1.0 / 16));
  CHECK(g.t_center(31) == doctest::Approx(1.0 - 1.0 / 64));
  CHECK_THROWS_AS((WhiteNoiseGrid{0.3, 0.1, 1.0, 0}.validate()), DomainError);
}

TEST_CASE("noise cells have variance equal to their area") {
  WhiteNoiseGrid g{1.0 / 16, 1.0 / 4, 4.0, 5};
  const auto ns = sample_noise(g);
  double s = 0, s2 = 0;
  for (double x : ns.xi) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(ns.xi.size());
  const double var = s2 / n;
  // var of the sample second moment: 2 area^2 / n
  CHECK(std::fabs(var - g.area()) < 4.0 * std::sqrt(2.0 / n) * g.area());
  CHECK(std::fabs(s / n) < 4.0 * std::sqrt(g.area() / n));
}

TEST_CASE("coarsening sums 2x2 blocks") {
  for (double L : {4.0, 3.9}) {
    WhiteNoiseGrid g{1.0 / 8, 1.0 / 4, L, 9};
    const auto fine = sample_noise(g);
    const auto c = coarsen(fine);
    const auto gc = g.coarser();
    CHECK(c.T == gc.time_cells());
    CHECK(c.S == gc.space_cells());
    double total_f = 0, total_c = 0;
    for (double x : fine.xi) total_f += x;
    for (double x : c.xi) total_c += x;
    CHECK(total_c == doctest::Approx(total_f).epsilon(1e-12));
    // a coarse cell holds the fine cells whose centres it contains
    for (int j = 0; j < fine.T; ++j)
      for (int l = 0; l < fine.S; ++l) {
        const double x = g.x_center(l);
        const int lc = static_cast<int>(std::floor(x / gc.dx)) + gc.space_cells() / 2;
        CHECK(gc.x_center(lc) - gc.dx / 2 <= x);
        CHECK(x < gc.x_center(lc) + gc.dx / 2);
      }
    double block = 0;
    const int Xf = fine.S / 2;
    for (int j = 0; j < 2; ++j)
      for (int l = Xf; l < Xf + 2; ++l) block += fine.at(j, l);
    CHECK(c.at(0, c.S / 2) == doctest::Approx(block).epsilon(1e-14));
  }
}

TEST_CASE("trivial amplitudes and orders") {
  WhiteNoiseGrid g{1.0 / 8, 1.0 / 4, 2.0, 3};
  auto z0 = simulate_Z(ContinuumAmplitude::constant(0.0), g, 4);
  CHECK(z0.value == 1.0);
  CHECK(z0.truncation_bound == 0.0);
  auto m0 = simulate_Z(ContinuumAmplitude::constant(1.0), g, 0);
  CHECK(m0.value == 1.0);
  CHECK(m0.order() == 0);
}

TEST_CASE("resolution errors") {
  auto a = ContinuumAmplitude::constant(0.5);
  CHECK_THROWS_AS(simulate_Z(a, WhiteNoiseGrid{1.0 / 8, 1.0 / 4, 2.0, 0}, 8), ResolutionError);
  CHECK_THROWS_AS(simulate_Z(a, WhiteNoiseGrid{1.0 / 16, 1.0 / 2, 2.0, 0}, 4), ResolutionError);
  CHECK_NOTHROW(simulate_Z(a, WhiteNoiseGrid{1.0 / 16, 1.0 / 4, 2.0, 0}, 8));
}

TEST_CASE("recursion equals the explicit chain sum") {
  WhiteNoiseGrid g{1.0 / 4, 1.0 / 2, 1.0, 17};
  const auto a = wavy();
  const auto noise = sample_noise(g);
  const auto z = simulate_Z(a, g, noise, 3);
  for (int n = 1; n <= 3; ++n) {
    double term = 0.0;
    each_chain(g, a, n, [&](const std::vector<Cell>& c, double coef) {
      double p = coef;
      for (const auto& cell : c) p *= noise.at(cell.j, cell.l);
      term += p;
    });
    CHECK(z.terms[n] == doctest::Approx(term).epsilon(1e-12));
  }
  CHECK(z.value == doctest::Approx(z.terms[0] + z.terms[1] + z.terms[2] + z.terms[3]).epsilon(1e-14));
}

TEST_CASE("discrete second moments equal the chain sum of squares") {
  WhiteNoiseGrid g{1.0 / 4, 1.0 / 2, 1.0, 0};
  const auto a = wavy();
  const auto q = discrete_second_moments(a, g, 3);
  CHECK(q[0] == 1.0);
  for (int n = 1; n <= 3; ++n) {
    double s = 0.0;
    each_chain(g, a, n, [&](const std::vector<Cell>&, double coef) { s += coef * coef * std::pow(g.area(), n); });
    CHECK(q[n] == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("per-order variances, centering and orthogonality") {
  WhiteNoiseGrid g{1.0 / 8, 1.0 / 4, 3.0, 0};
  const auto a = ContinuumAmplitude::constant(1.0);
  const int M = 4, R = 4000;
  const auto exact = discrete_second_moments(a, g, M);
  std::vector<ChaosApproximation> zs;
  for (int r = 0; r < R; ++r) {
    g.seed = derive_seed(77, {static_cast<std::uint64_t>(r)});
    zs.push_back(simulate_Z(a, g, M));
  }
  std::vector<double> v(R);
  for (int n = 1; n <= M; ++n) {
    for (int r = 0; r < R; ++r) v[r] = zs[r].terms[n];
    const auto mean = summarize(v);
    CHECK(std::fabs(mean.mean) < 4.0 * mean.std_err);
    for (int r = 0; r < R; ++r) v[r] = zs[r].terms[n] * zs[r].terms[n];
    const auto sq = summarize(v);
    CHECK(std::fabs(sq.mean - exact[n]) < 4.0 * sq.std_err);
  }
  for (int n1 = 1; n1 <= M; ++n1)
    for (int n2 = n1 + 1; n2 <= M; ++n2) {
      for (int r = 0; r < R; ++r) v[r] = zs[r].terms[n1] * zs[r].terms[n2];
      const auto cov = summarize(v);
      CHECK(std::fabs(cov.mean) < 4.0 * cov.std_err);
    }
  // variance of the value is the sum of the per-order variances
  for (int r = 0; r < R; ++r) v[r] = zs[r].value;
  const auto val = summarize(v, true);
  double sum = 0;
  for (int n = 1; n <= M; ++n) sum += exact[n];
  CHECK(std::fabs((*val.extra)[0] - sum) < 4.0 * std::sqrt(((*val.extra)[2] - sum * sum) / R));
  CHECK(std::fabs(val.mean - 1.0) < 4.0 * val.std_err);
}

TEST_CASE("grid sums approach the simplex norms under refinement") {
  const auto a = ContinuumAmplitude::constant(std::sqrt(2.0) * 0.5);
  const double target = second_moment_series(std::sqrt(2.0) * 0.5);
  double prev_gap = INFINITY;
  for (int level = 0; level < 3; ++level) {
    const double dt = 1.0 / (16 << level), dx = 1.0 / (4 << level);
    const auto q = discrete_second_moments(a, WhiteNoiseGrid{dt, dx, 6.0, 0}, 8);
    double s = 0;
    for (double x : q) s += x;
    const double gap = target - s;
    CHECK(gap > 0.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  // one refinement step with rate 1/2 from the (1/16, 1/4) and (1/32, 1/8) grids
  auto total = [&](double dt, double dx) {
    double s = 0;
    for (double x : discrete_second_moments(a, WhiteNoiseGrid{dt, dx, 6.0, 0}, 8)) s += x;
    return s;
  };
  const double ex = (std::sqrt(2.0) * total(1.0 / 32, 1.0 / 8) - total(1.0 / 16, 1.0 / 4)) / (std::sqrt(2.0) - 1.0);
  CHECK(std::fabs(ex - target) < 0.01);
}

TEST_CASE("second moment series") {
  CHECK(second_moment_series(0.0) == 1.0);
  CHECK(std::fabs(second_moment_series(std::sqrt(2.0)) - std::exp(1.0) * std::erfc(-1.0)) < 1e-10);
  for (double g : {0.3, std::sqrt(2.0) * 0.5, 1.0, 2.5})
    CHECK(std::fabs(second_moment_series(g, 1e-14) - mittag_leffler_half(g * g / 2)) <
          1e-12 * mittag_leffler_half(g * g / 2));
  CHECK(second_moment_series(std::sqrt(2.0) * 0.5) == doctest::Approx(1.358642370104722).epsilon(1e-13));
  // partial sums against the closed-form norms are increasing
  double partial = 0, last = -1;
  for (int n = 0; n < 12; ++n) {
    partial += std::pow(0.5, n) * kernels::rho_chain_norm_sq(n);
    CHECK(partial > last);
    last = partial;
  }
  CHECK(partial == doctest::Approx(second_moment_series(std::sqrt(0.5))).epsilon(1e-3));
  CHECK_THROWS_AS(second_moment_series(1.0, 0.0), DomainError);
}

TEST_CASE("truncation bound is the series tail") {
  const double g = 1.2;
  WhiteNoiseGrid grid{1.0 / 8, 1.0 / 4, 2.0, 0};
  for (int M : {1, 3, 6}) {
    const auto z = simulate_Z(ContinuumAmplitude::constant(g), grid, M);
    double head = 0;
    for (int n = 0; n <= M; ++n) head += std::pow(g, 2 * n) * kernels::rho_chain_norm_sq(n);
    CHECK(z.truncation_bound == doctest::Approx(second_moment_series(g) - head).epsilon(1e-9));
  }
}

TEST_CASE("spatial mass loss") {
  CHECK(spatial_mass_loss(6.0) == doctest::Approx(1.973175290075e-9).epsilon(1e-9));
}

TEST_CASE("estimate_Z_moments") {
  WhiteNoiseGrid g{1.0 / 16, 1.0 / 8, 4.0, 0};
  SUBCASE("zero amplitude gives moments exactly 1") {
    auto z = estimate_Z_moments(ContinuumAmplitude::constant(0.0), g, 6, 3, 1000, 1, 2);
    for (int p = 0; p < 3; ++p) {
      CHECK(z.fine[p].mean == 1.0);
      CHECK(z.coarse[p].mean == 1.0);
      CHECK(z.extrapolated[p].mean == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(z.drift[p] == 0.0);
    }
  }
  SUBCASE("first moment is 1 and runs are reproducible") {
    std::vector<ZReplica> rows;
    auto z = estimate_Z_moments(wavy(), g, 6, 2, 1000, 42, 3, 0.5, &rows);
    CHECK(std::fabs(z.fine[0].mean - 1.0) < 4.0 * z.fine[0].std_err);
    CHECK(std::fabs(z.coarse[0].mean - 1.0) < 4.0 * z.coarse[0].std_err);
    auto again = estimate_Z_moments(wavy(), g, 6, 2, 1000, 42, 1);
    CHECK(again.fine[1].mean == z.fine[1].mean);
    CHECK(again.extrapolated[1].std_err == z.extrapolated[1].std_err);
    std::ostringstream os;
    write_replicas_csv(os, g, 6, rows);
    const auto s = os.str();
    CHECK(s.rfind("# dt=0.0625 dx=0.125 L=4 M=6\nseed,grid,value,term_0", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 2 + 2 * 1000);
  }
  CHECK_THROWS_AS(estimate_Z_moments(wavy(), g, 6, 2, 999, 1), DomainError);
}
