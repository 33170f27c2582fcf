#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

#include "collide/errors.hpp"
#include "collide/kernels.hpp"
#include "collide/polymer.hpp"
#include "collide/ustat.hpp"

using namespace collide;
using namespace collide::polymer;
using environment::DisorderFunction;
using environment::EnvironmentField;

namespace {

// The paper's subset form: X = sum over nonempty I subset [k] in which every
// site is hit an even number of times of prod_{i in I} theta(n, S^i_n).
double subset_X(const std::vector<int>& pos, const std::vector<double>& theta) {
  const int k = static_cast<int>(pos.size());
  double X = 0.0;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::map<int, int> hits;
    double prod = 1.0;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        ++hits[pos[static_cast<std::size_t>(i)]];
        prod *= theta[static_cast<std::size_t>(i)];
      }
    bool even = true;
    for (const auto& [z, c] : hits) even = even && c % 2 == 0;
    if (even) X += prod;
  }
  return X;
}

// Band DP with an explicit omega table indexed [n][j], z = -n + 2j.
double dp_with_table(int N, const DisorderFunction& A, const std::vector<std::vector<int>>& omega) {
  std::vector<double> w{1.0};
  for (int n = 1; n <= N; ++n) {
    std::vector<double> nw(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 0; j <= n; ++j) {
      const int z = -n + 2 * j;
      double s = 0.0;
      if (j >= 1) s += w[static_cast<std::size_t>(j - 1)];
      if (j < n) s += w[static_cast<std::size_t>(j)];
      nw[static_cast<std::size_t>(j)] = 0.5 * s * (1.0 + A(n, z) * omega[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)]);
    }
    w = std::move(nw);
  }
  double v = 0.0;
  for (double x : w) v += x;
  return v;
}

}  // namespace

TEST_CASE("one-step partition function") {
  const auto A = DisorderFunction::random_uniform(5, 0.7);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EnvironmentField w{seed};
    const double expect = 1.0 + (A(1, 1) * w.omega(1, 1) + A(1, -1) * w.omega(1, -1)) / 2.0;
    CHECK(partition_dp(1, A, w).value == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("zero amplitude gives 1") {
  for (int N : {1, 7, 100, 1000})
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const double v = partition_dp(N, DisorderFunction::constant(0.0), EnvironmentField{seed}).value;
      // Exact while the binomial weights 2^-N C(N, j) are representable.
      if (N <= 50)
        CHECK(v == 1.0);
      else
        CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("partition_dp equals path enumeration") {
  for (int N = 1; N <= 10; ++N)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto A = DisorderFunction::random_uniform(seed * 31 + 7, 1.0);
      const EnvironmentField w{seed};
      CHECK(std::fabs(partition_dp(N, A, w).value - partition_enumerated(N, A, w)) <= 1e-12);
    }
}

TEST_CASE("time-homogeneous caching does not change the value") {
  const auto A = DisorderFunction::constant(0.4);
  auto B = A;
  B.time_homogeneous = false;
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    CHECK(partition_dp(300, A, EnvironmentField{seed}).value == partition_dp(300, B, EnvironmentField{seed}).value);
}

TEST_CASE("large partition functions stay finite in the rescaled band") {
  // Every step multiplies by 1 + 0.9 or 1 - 0.9; values reach well beyond 2^500.
  const auto A = DisorderFunction::constant(0.9);
  const EnvironmentField w{3};
  const auto r = partition_dp(1500, A, w);
  CHECK(std::isfinite(r.value));
  CHECK(r.value > 0.0);
}

TEST_CASE("term breakdown sums to the value") {
  const auto A = DisorderFunction::random_uniform(1, 0.8);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = partition_dp(40, A, EnvironmentField{seed}, true);
    REQUIRE(r.term_breakdown.has_value());
    double s = 0.0;
    for (double t : *r.term_breakdown) s += t;
    CHECK(s == doctest::Approx(r.value).epsilon(1e-10));
    CHECK((*r.term_breakdown)[0] == 1.0);
  }
}

TEST_CASE("chaos terms: small cases") {
  const auto A = DisorderFunction::random_uniform(2, 1.0);
  const EnvironmentField w{4};
  for (auto engine : {ChaosEngine::Exact, ChaosEngine::Recursive}) {
    const auto t = chaos_terms(1, 0.6, A, w, engine);
    CHECK(t.terms[0] == 1.0);
    CHECK(t.terms[1] == doctest::Approx(0.6 * (A(1, 1) * w.omega(1, 1) + A(1, -1) * w.omega(1, -1)) / 2));
  }
  const auto e = chaos_terms(3, 1.0, A, w, ChaosEngine::Exact);
  CHECK(std::fabs(e.sum() - partition_dp(3, A, w).value) <= 1e-12);
}

TEST_CASE("exact chaos engine: chains of D^3 by hand") {
  // term_n = sum_{i in D^3_n} sum_z p_n(i, z) A omega, listed chain by chain.
  const auto A = DisorderFunction::random_uniform(8, 0.9);
  const EnvironmentField w{21};
  std::vector<double> expect(4, 0.0);
  expect[0] = 1.0;
  for (unsigned mask = 1; mask < 8; ++mask) {
    kernels::LatticeChain c;
    for (int i = 1; i <= 3; ++i)
      if (mask & (1u << (i - 1))) c.times.push_back(i);
    const auto n = c.times.size();
    c.sites.assign(n, 0);
    // All site tuples with |z_j| <= 3.
    const int combos = static_cast<int>(std::pow(7, n));
    for (int code = 0; code < combos; ++code) {
      int r = code;
      double aw = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        c.sites[j] = r % 7 - 3;
        r /= 7;
        aw *= A(c.times[j], c.sites[j]) * w.omega(c.times[j], c.sites[j]);
      }
      expect[n] += kernels::chain_density_discrete(c) * aw;
    }
  }
  const auto t = chaos_terms(3, 1.0, A, w, ChaosEngine::Exact);
  for (std::size_t m = 0; m < 4; ++m) CHECK(t.terms[m] == doctest::Approx(expect[m]).epsilon(1e-13));
}

TEST_CASE("chaos engines agree and match the DP") {
  for (int N : {2, 5, 9, 12}) {
    for (double beta : {0.3, 1.0}) {
      const auto A = DisorderFunction::random_uniform(static_cast<std::uint64_t>(N), 1.0);
      const EnvironmentField w{static_cast<std::uint64_t>(N * 10)};
      const auto ex = chaos_terms(N, beta, A, w, ChaosEngine::Exact);
      const auto re = chaos_terms(N, beta, A, w, ChaosEngine::Recursive);
      for (int m = 0; m <= N; ++m)
        CHECK(re.terms[static_cast<std::size_t>(m)] ==
              doctest::Approx(ex.terms[static_cast<std::size_t>(m)]).epsilon(1e-10).scale(1e-12));
      const double z = partition_dp(N, A.scaled(beta), w).value;
      CHECK(std::fabs(ex.sum() - z) <= 1e-10 * std::fabs(z));
      CHECK(re.truncation_bound == 0.0);
    }
  }
  CHECK_THROWS_AS(chaos_terms(15, 1.0, DisorderFunction::constant(1.0), EnvironmentField{1}, ChaosEngine::Exact),
                  HorizonTooLarge);
}

TEST_CASE("truncated recursion reports a valid tail bound") {
  const int N = 200;
  const auto A = DisorderFunction::random_uniform(3, 1.0);
  const double beta = std::pow(N, -0.25);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EnvironmentField w{seed};
    const auto t = chaos_terms(N, beta, A, w, ChaosEngine::Recursive, 12);
    const double z = partition_dp(N, A.scaled(beta), w).value;
    CHECK(std::fabs(z - t.sum()) <= t.truncation_bound);
    CHECK(t.truncation_bound > 0.0);
    CHECK_THROWS_AS(t.sum(13), TruncationOrderError);
  }
}

TEST_CASE("tail bound arithmetic") {
  // sum_{m > 2} C(4, m) 0.5^m = 4/8 + 1/16.
  CHECK(chaos_tail_bound(4, 2, 0.5) == doctest::Approx(0.5625).epsilon(1e-14));
  CHECK(chaos_tail_bound(4, 4, 0.5) == 0.0);
}

TEST_CASE("chaos identity through U-statistics of p^N_n") {
  for (int N : {1, 3, 5}) {
    for (double beta : {0.3, 1.0}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto A = DisorderFunction::random_uniform(seed + 100, 1.0);
        const EnvironmentField w{seed};
        double total = 1.0;
        for (int n = 1; n <= N; ++n) {
          ustat::UStatSpec spec;
          spec.n = n;
          spec.N = N;
          spec.A = A;
          spec.support_radius = std::sqrt(double(N));
          spec.cell_constant = true;
          spec.ordered_support = true;
          spec.g = [N, n](std::span<const double> t, std::span<const double> x) {
            return kernels::discrete_kernel_pNn({{t.begin(), t.end()}, {x.begin(), x.end()}}, N, n);
          };
          total += std::pow(2.0, n / 2.0) * std::pow(beta, n) * ustat::u_statistic(spec, w);
        }
        const double z = partition_dp(N, A.scaled(beta), w).value;
        CHECK(std::fabs(total - z) <= 1e-10 * std::fabs(z));
      }
    }
  }
}

TEST_CASE("collision weights on simple configurations") {
  const double theta = 0.3;
  const auto A = DisorderFunction::constant(theta);
  using walks::WalkEnsemble;
  using walks::WalkPath;
  // Three walks on distinct sites at step 2, two share a site at step 1.
  const WalkEnsemble e({WalkPath({0, 1, 2}), WalkPath({0, 1, 0}), WalkPath({0, -1, -2})});
  const auto w = collision_weights(e, A);
  CHECK(w.per_step[0] == doctest::Approx(theta * theta).epsilon(1e-14));
  CHECK(w.per_step[1] == 0.0);
  const WalkEnsemble triple({WalkPath({0, 1}), WalkPath({0, 1}), WalkPath({0, 1})});
  const auto t = collision_weights(triple, A);
  CHECK(t.per_step[0] == doctest::Approx(3 * theta * theta).epsilon(1e-14));
  CHECK(t.per_step[0] == doctest::Approx(subset_X({1, 1, 1}, {theta, theta, theta})).epsilon(1e-14));
  CHECK(t.sum == t.per_step[0]);
}

TEST_CASE("collision weights equal the subset sum") {
  Stream s(77);
  const auto A = DisorderFunction::random_uniform(9, 0.8);
  for (int k : {2, 3, 5, 8}) {
    for (int r = 0; r < 100; ++r) {
      const auto e = walks::sample_ensemble(k, 6, s);
      const auto w = collision_weights(e, A);
      double sum = 0.0;
      for (int n = 1; n <= 6; ++n) {
        std::vector<int> pos;
        std::vector<double> th;
        for (int i = 0; i < k; ++i) {
          pos.push_back(e[i][n]);
          th.push_back(A(n, e[i][n]));
        }
        const double X = w.per_step[static_cast<std::size_t>(n - 1)];
        CHECK(X == doctest::Approx(subset_X(pos, th)).epsilon(1e-12).scale(1e-15));
        sum += X;
      }
      CHECK(w.sum == doctest::Approx(sum).epsilon(1e-14));
    }
  }
}

TEST_CASE("collision weights are nonnegative and bounded") {
  Stream s(5);
  const double c = 1.5;
  for (int k : {2, 3, 6}) {
    const int N = 256;
    const auto A = DisorderFunction::random_uniform(k, c).scaled(std::pow(N, -0.25));
    for (int r = 0; r < 200; ++r) {
      const auto w = collision_weights(walks::sample_ensemble(k, N, s), A);
      for (double X : w.per_step) {
        CHECK(X >= 0.0);
        CHECK(X <= std::pow(c + 1, k) / std::sqrt(double(N)));
      }
    }
  }
}

TEST_CASE("duality pair") {
  using walks::WalkEnsemble;
  using walks::WalkPath;
  const auto f = collisions::TestFunction::gaussian_bump(1.3, 0.8);
  const WalkEnsemble apart({WalkPath({0, 1, 2}), WalkPath({0, -1, -2})});
  const auto d0 = duality_pair(apart, f);
  CHECK(d0.exp_pi == 1.0);
  CHECK(d0.prod_x == 1.0);

  const WalkEnsemble once({WalkPath({0, 1, 0, 1}), WalkPath({0, -1, 0, -1})});
  const auto d1 = duality_pair(once, f);
  const double expect = f(2.0 / 3.0, 0.0) / std::sqrt(3.0);
  CHECK(d1.scaled_pi == doctest::Approx(expect).epsilon(1e-14));
  CHECK(d1.t_sum == doctest::Approx(expect).epsilon(1e-14));
  CHECK(std::log(d1.exp_pi) == doctest::Approx(d1.t_sum).epsilon(1e-14));

  const collisions::TestFunction neg{[](double, double) { return -1.0; }, 1.0, false};
  CHECK_THROWS_AS(duality_pair(once, neg), NegativityError);
}

TEST_CASE("collision sum dominates the scaled measure for k = 3") {
  Stream s(64);
  const auto f = collisions::TestFunction::gaussian_bump(1.0, 1.0);
  int failures = 0;
  for (int r = 0; r < 10000; ++r) {
    const auto d = duality_pair(walks::sample_ensemble(3, 64, s), f);
    failures += d.t_sum - d.scaled_pi < -1e-15 || d.exp_pi > std::exp(d.t_sum) * (1 + 1e-15);
  }
  CHECK(failures == 0);
}

TEST_CASE("partition function has mean 1 and stays positive") {
  const int N = 256;
  const double c = 2.0;  // N > c^4
  const auto A = DisorderFunction::random_uniform(12, c).scaled(std::pow(N, -0.25));
  const int R = 4000;
  double sum = 0.0, sumsq = 0.0;
  bool positive = true;
  for (int r = 0; r < R; ++r) {
    const double z = partition_dp(N, A, EnvironmentField{derive_seed(1, {std::uint64_t(r)})}).value;
    positive = positive && z > 0.0;
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / R;
  const double se = std::sqrt((sumsq / R - mean * mean) / R);
  CHECK(std::fabs(mean - 1.0) <= 4.0 * se);
  CHECK(positive);
}

TEST_CASE("exact bridge on a tiny lattice") {
  // E_omega[z^k] over every omega on the band cells against E_walks[prod(1 + X)]
  // over every k-tuple of paths.
  const int N = 4;
  const auto A = DisorderFunction::random_uniform(31, 0.9);
  std::vector<std::pair<int, int>> cells;
  for (int n = 1; n <= N; ++n)
    for (int j = 0; j <= n; ++j) cells.emplace_back(n, j);
  const auto paths = walks::enumerate_paths(N);
  for (int k : {2, 3}) {
    double lhs = 0.0;
    const unsigned configs = 1u << cells.size();
    for (unsigned code = 0; code < configs; ++code) {
      std::vector<std::vector<int>> omega(N + 1);
      for (int n = 0; n <= N; ++n) omega[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(n) + 1, 1);
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (code & (1u << c)) omega[static_cast<std::size_t>(cells[c].first)][static_cast<std::size_t>(cells[c].second)] = -1;
      lhs += std::pow(dp_with_table(N, A, omega), k);
    }
    lhs /= configs;

    double rhs = 0.0;
    const std::size_t P = paths.size();
    std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
    while (true) {
      std::vector<walks::WalkPath> ws;
      for (auto i : idx) ws.push_back(paths[i].first);
      const auto w = collision_weights(walks::WalkEnsemble(ws), A);
      double prod = 1.0;
      for (double X : w.per_step) prod *= 1.0 + X;
      rhs += prod;
      std::size_t d = 0;
      while (d < idx.size() && ++idx[d] == P) idx[d++] = 0;
      if (d == idx.size()) break;
    }
    rhs /= std::pow(double(P), k);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("replicate csv") {
  std::ostringstream os;
  write_replicates_csv(os, {{7, 64, 1.5, 2.25}}, 2, "const");
  CHECK(os.str().find("seed,N,value,power\n7,64,1.5,2.25\n") != std::string::npos);
  CHECK(os.str().rfind("# k=2 amplitude=const hash=splitmix64-fmix-v1", 0) == 0);
}

TEST_CASE("compiled chaos identity matches the DP up to N = 8") {
  const auto A = DisorderFunction::random_uniform(4, 1.0);
  for (int N : {3, 8}) {
    const auto plans = chaos_identity_plans(N, A);
    CHECK(plans.size() == static_cast<std::size_t>(N));
    for (double beta : {0.3, 1.0})
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const EnvironmentField w{seed};
        const double z = partition_dp(N, A.scaled(beta), w).value;
        CHECK(std::fabs(chaos_identity_value(plans, beta, w) - z) <= 1e-10 * std::fabs(z));
      }
  }
}
