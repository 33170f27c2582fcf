#include "doctest.h"

#include <cmath>
#include <vector>

#include "collide/environment.hpp"
#include "collide/errors.hpp"

using namespace collide;
using namespace collide::environment;

namespace {

bool in_cell(double t, double x, int N, int i, int z) {
  const double sq = std::sqrt(double(N));
  return t > (i - 1.0) / N && t <= double(i) / N && x > (z - 1.0) / sq && x <= (z + 1.0) / sq &&
         ((i - z) & 1) == 0;
}

}  // namespace

TEST_CASE("omega is a deterministic sign") {
  const EnvironmentField f{123};
  for (int n = 1; n < 50; ++n)
    for (int z = -n; z <= n; z += 2) {
      const int w = omega_at(f, n, z);
      CHECK((w == 1 || w == -1));
      CHECK(w == f.omega(n, z));
    }
}

TEST_CASE("omega is balanced on a large block") {
  const EnvironmentField f{77};
  long long sum = 0, count = 0;
  for (int n = 1; n <= 1000; ++n)
    for (int z = -1000 + (n & 1); z <= 1000; z += 2) {
      sum += f.omega(n, z);
      ++count;
    }
  CHECK(std::fabs(double(sum)) <= 4.0 * std::sqrt(double(count)));
}

TEST_CASE("omega on disjoint cells looks independent") {
  // 2x2 contingency table of (omega(c), omega(c')) over disjoint cell pairs.
  const EnvironmentField f{5};
  double table[2][2] = {{0, 0}, {0, 0}};
  const int pairs = 100000;
  for (int r = 0; r < pairs; ++r) {
    const int n = 1 + r / 300;
    const int z = 2 * (r % 300) - 300 + (n & 1);
    table[f.omega(n, z) > 0][f.omega(n + 2000, z) > 0] += 1;
  }
  double chi2 = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double row = table[a][0] + table[a][1];
      const double col = table[0][b] + table[1][b];
      const double e = row * col / pairs;
      chi2 += (table[a][b] - e) * (table[a][b] - e) / e;
    }
  // p = 0.001 for one degree of freedom.
  CHECK(chi2 < 10.828);
}

TEST_CASE("different seeds give different fields") {
  const EnvironmentField a{1}, b{2};
  int agree = 0;
  for (int z = -999; z <= 999; z += 2) agree += a.omega(1, z) == b.omega(1, z);
  CHECK(agree > 400);
  CHECK(agree < 600);
}

TEST_CASE("disorder_from_function") {
  const auto A = disorder_from_function(ContinuumAmplitude::constant(0.7), 100);
  CHECK(A(3, 1) == 0.7);
  CHECK(A.sup_bound == 0.7);
  const ContinuumAmplitude g{[](double, double x) { return std::exp(-x * x); }, 1.0, true};
  const int N = 400;
  CHECK(disorder_from_function(g, N)(N, 0) == 1.0);
}

TEST_CASE("sampled amplitude converges to the continuum function") {
  const ContinuumAmplitude a{[](double t, double x) { return std::sin(3 * t) * std::exp(-x * x); }, 1.0, false};
  auto worst = [&](int N) {
    const auto A = disorder_from_function(a, N);
    double err = 0.0;
    for (double t = 0.05; t <= 1.0; t += 0.05)
      for (double x = -2.0; x <= 2.0; x += 0.1) {
        const auto [i, z] = cell_of(t, x, N);
        err = std::max(err, std::fabs(A(i, z) - a(t, x)));
      }
    return err;
  };
  CHECK(worst(1000000) < worst(100));
}

TEST_CASE("cell_of boundary examples") {
  for (int N : {1, 4, 9, 100, 1000}) {
    const auto c = cell_of(1.0 / N, 0.0, N);
    // x = 0 is the right end of ((-2)/sqrt N, 0], the odd cell z = -1.
    CHECK(c == std::pair{1, -1});
    int found = 0;
    for (int z = -5; z <= 5; ++z) found += in_cell(1.0 / N, 0.0, N, 1, z) ? 1 : 0;
    CHECK(found == 1);
    CHECK(in_cell(1.0 / N, 0.0, N, 1, -1));
    if (N >= 2) CHECK(cell_of(2.0 / N, 0.0, N) == std::pair{2, 0});
  }
  CHECK_THROWS_AS(cell_of(0.0, 0.0, 4), DomainError);
  CHECK_THROWS_AS(cell_of(1.5, 0.0, 4), DomainError);
}

TEST_CASE("cell_of inverts the lattice rectangles") {
  Stream s(3);
  for (int N : {1, 7, 64}) {
    const double sq = std::sqrt(double(N));
    for (int i = 1; i <= N; ++i)
      for (int z = -i; z <= i; z += 2)
        for (int r = 0; r < 5; ++r) {
          const double t = (i - s.uniform()) / N;
          const double x = (z + 1 - 2 * s.uniform()) / sq;
          if (!in_cell(t, x, N, i, z)) continue;
          CHECK(cell_of(t, x, N) == std::pair{i, z});
        }
  }
}

TEST_CASE("random_uniform stays in its bound") {
  const auto A = DisorderFunction::random_uniform(11, 0.5);
  for (int n = 1; n < 40; ++n)
    for (int z = -n; z <= n; z += 2) {
      CHECK(std::fabs(A(n, z)) <= 0.5);
      CHECK(A(n, z) == A(n, z));
    }
  const auto B = A.scaled(-2.0);
  CHECK(B.sup_bound == 1.0);
  CHECK(B(3, 1) == -2.0 * A(3, 1));
}
