#include "doctest.h"

#include <cmath>
#include <sstream>

#include "collide/collisions.hpp"
#include "collide/errors.hpp"

using namespace collide;
using namespace collide::collisions;
using walks::WalkEnsemble;
using walks::WalkPath;

namespace {

// Pair scan straight from the paths.
double brute_force(const WalkEnsemble& e, const TestFunction& f) {
  const int N = e.horizon();
  double s = 0.0;
  for (int n = 1; n <= N; ++n)
    for (int i = 0; i < e.k(); ++i)
      for (int j = i + 1; j < e.k(); ++j)
        if (e[i][n] == e[j][n]) s += f(double(n) / N, e[i][n] / std::sqrt(double(N)));
  return s;
}

}  // namespace

TEST_CASE("three walks on one site") {
  const WalkEnsemble e({WalkPath({0, 1}), WalkPath({0, 1}), WalkPath({0, 1})});
  const auto c = detect_collisions(e);
  REQUIRE(c.with_multiplicity.atoms().size() == 1);
  CHECK(c.with_multiplicity.atoms()[0] == Atom{1, 1, 3});
  CHECK(c.distinct.atoms()[0] == Atom{1, 1, 1});
}

TEST_CASE("hand example with k = 2") {
  const WalkEnsemble e({WalkPath({0, 1, 0, 1}), WalkPath({0, -1, 0, 1})});
  const auto c = detect_collisions(e);
  const std::vector<Atom> expect{{2, 0, 1}, {3, 1, 1}};
  CHECK(c.with_multiplicity.atoms() == expect);
  CHECK(c.distinct.atoms() == expect);
  CHECK(integrate(c.with_multiplicity, TestFunction::constant(1.0)) == 2.0);
  CHECK(total_mass_identity_check(e) == std::pair<long long, long long>{2, 2});
}

TEST_CASE("walks that never meet") {
  const WalkEnsemble e({WalkPath({0, 1, 2, 3}), WalkPath({0, -1, -2, -3})});
  const auto c = detect_collisions(e);
  CHECK(c.with_multiplicity.empty());
  CHECK(c.distinct.empty());
  CHECK(integrate(c.with_multiplicity, TestFunction::gaussian_bump(1, 1)) == 0.0);
  CHECK(total_mass_identity_check(e) == std::pair<long long, long long>{0, 0});
}

TEST_CASE("mass identity needs k = 2") {
  const WalkEnsemble e({WalkPath({0, 1}), WalkPath({0, 1}), WalkPath({0, 1})});
  CHECK_THROWS_AS(total_mass_identity_check(e), WrongEnsembleSize);
}

TEST_CASE("CollisionMeasure validates atoms") {
  CHECK_THROWS(CollisionMeasure(4, 2, {{1, 0, 1}}));   // parity
  CHECK_THROWS(CollisionMeasure(4, 2, {{5, 1, 1}}));   // time range
  CHECK_THROWS(CollisionMeasure(4, 2, {{1, 1, 2}}));   // weight above k(k-1)/2
  CHECK_THROWS(CollisionMeasure(4, 2, {{1, 1, 1}, {1, 1, 1}}));
  CHECK_NOTHROW(CollisionMeasure(4, 3, {{2, 0, 3}, {1, 1, 1}}));
}

TEST_CASE("integrate matches a pair scan and the sandwich holds") {
  const auto f = TestFunction{[](double, double x) { return std::exp(-x * x); }, 1.0, true};
  for (int k : {2, 3, 5, 20}) {
    Stream s(100 + k);
    for (int r = 0; r < 200; ++r) {
      const auto e = walks::sample_ensemble(k, 64, s);
      const auto c = detect_collisions(e);
      const double pi = integrate(c.with_multiplicity, f);
      const double pd = integrate(c.distinct, f);
      CHECK(pi == doctest::Approx(brute_force(e, f)).epsilon(1e-13));
      CHECK(pd <= pi + 1e-12);
      CHECK(pi <= k * (k - 1) / 2.0 * pd + 1e-12);
      long long excess = 0;
      for (const auto& a : c.with_multiplicity.atoms()) {
        CHECK(((a.n - a.z) & 1) == 0);
        excess += a.weight - 1;
      }
      CHECK(c.with_multiplicity.total_mass() - c.distinct.total_mass() == excess);
    }
  }
}

TEST_CASE("mass identity holds pathwise at N = 256") {
  Stream s(9);
  for (int r = 0; r < 10000; ++r) {
    const auto e = walks::sample_ensemble(2, 256, s);
    const auto [mass, zeros] = total_mass_identity_check(e);
    REQUIRE(mass == zeros);
  }
}

TEST_CASE("excess mass over sqrt N decays") {
  auto mean_excess = [](int N, int R) {
    Stream s(static_cast<std::uint64_t>(N));
    double sum = 0.0;
    for (int r = 0; r < R; ++r) {
      const auto c = detect_collisions(walks::sample_ensemble(3, N, s));
      sum += double(c.with_multiplicity.total_mass() - c.distinct.total_mass());
    }
    return sum / R / std::sqrt(double(N));
  };
  const double a = mean_excess(256, 2000);
  const double b = mean_excess(65536, 2000);
  CHECK(a >= 3.0 * b);
}

TEST_CASE("csv export") {
  const CollisionMeasure m(4, 2, {{2, 0, 1}, {3, 1, 1}});
  std::ostringstream os;
  write_csv(os, m);
  const std::string out = os.str();
  CHECK(out.rfind("# N=4 k=2", 0) == 0);
  CHECK(out.find("n,z,weight\n2,0,1\n3,1,1\n") != std::string::npos);
}

TEST_CASE("test function factories") {
  CHECK(TestFunction::gaussian_bump(2.0, 0.5)(0.3, 0.0) == 2.0);
  CHECK(TestFunction::gaussian_bump(2.0, 0.5)(0.3, 0.5) == doctest::Approx(2.0 * std::exp(-0.5)));
  CHECK(TestFunction::window(0.3, 1.0)(0.5, 1.0) == 0.3);
  CHECK(TestFunction::window(0.3, 1.0)(0.5, 1.01) == 0.0);
}
