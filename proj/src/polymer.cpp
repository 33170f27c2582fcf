#include "collide/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "collide/errors.hpp"
#include "collide/kernels.hpp"
#include "collide/numeric.hpp"

namespace collide::polymer {

namespace {

// Multiplier 1 + A(n, z) omega(n, z) along the band of step n. A
// time-homogeneous amplitude is read from a row cached once per sweep.
class StepFactors {
 public:
  StepFactors(int N, const environment::DisorderFunction& A, const environment::EnvironmentField& field)
      : A_(A), field_(field), N_(N), salt_(mix64(field.seed)) {
    if (A.time_homogeneous) {
      row_.resize(2 * static_cast<std::size_t>(N) + 1);
      for (int z = -N; z <= N; ++z) row_[static_cast<std::size_t>(z + N)] = A(1, z);
    }
  }

  double amplitude(int n, int z) const {
    return row_.empty() ? A_(n, z) : row_[static_cast<std::size_t>(z + N_)];
  }
  double disorder(int n, int z) const { return amplitude(n, z) * field_.omega(n, z); }

  /// out[j] = 1 + A(n, z) omega(n, z) for z = -n + 2j, j = 0..n.
  void fill(int n, double* out) const {
    const std::uint64_t hi = static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)) << 32;
    const auto len = static_cast<std::size_t>(n) + 1;
    for (std::size_t j = 0; j < len; ++j) {
      const int z = -n + 2 * static_cast<int>(j);
      const std::uint64_t key = hi | static_cast<std::uint32_t>(z);
      // Same bit as EnvironmentField::omega.
      out[j] = static_cast<double>(mix64(mix64(key ^ salt_)) & 1U) * 2.0 - 1.0;
    }
    if (row_.empty()) {
      for (std::size_t j = 0; j < len; ++j) out[j] = 1.0 + A_(n, -n + 2 * static_cast<int>(j)) * out[j];
    } else {
      const double* a = row_.data() + (N_ - n);
      for (std::size_t j = 0; j < len; ++j) out[j] = 1.0 + a[2 * j] * out[j];
    }
  }

 private:
  const environment::DisorderFunction& A_;
  const environment::EnvironmentField& field_;
  int N_;
  std::uint64_t salt_;
  std::vector<double> row_;
};

// Keeps band values in range by exact power-of-two rescaling.
void renormalize(std::vector<double>& w, std::size_t len, int& exponent) {
  double peak = 0.0;
  for (std::size_t j = 0; j < len; ++j) peak = std::max(peak, std::fabs(w[j]));
  if (peak == 0.0 || (peak < 0x1.0p+500 && peak > 0x1.0p-500)) return;
  int e = 0;
  std::frexp(peak, &e);
  for (std::size_t j = 0; j < len; ++j) w[j] = std::ldexp(w[j], -e);
  exponent += e;
}

double band_sum(const std::vector<double>& w, std::size_t len) {
  CompensatedSum s;
  for (std::size_t j = 0; j < len; ++j) s += w[j];
  return s.value();
}

ChaosTerms chaos_exact(int N, double beta, const StepFactors& factors) {
  ChaosTerms out;
  out.terms.assign(static_cast<std::size_t>(N) + 1, 0.0);
  std::vector<CompensatedSum> sums(static_cast<std::size_t>(N) + 1);
  // p(d, y) for d = 1..N, y = -d..d.
  std::vector<std::vector<double>> p(static_cast<std::size_t>(N) + 1);
  for (int d = 1; d <= N; ++d) {
    p[static_cast<std::size_t>(d)].resize(2 * static_cast<std::size_t>(d) + 1);
    for (int y = -d; y <= d; ++y) p[static_cast<std::size_t>(d)][static_cast<std::size_t>(y + d)] = kernels::rw_transition(d, y);
  }
  auto extend = [&](auto&& self, int order, int last_i, int last_z, double weight) -> void {
    for (int i = last_i + 1; i <= N; ++i) {
      const int d = i - last_i;
      const auto& pd = p[static_cast<std::size_t>(d)];
      for (int y = -d; y <= d; y += 2) {
        const int z = last_z + y;
        const double w = weight * pd[static_cast<std::size_t>(y + d)] * beta * factors.disorder(i, z);
        sums[static_cast<std::size_t>(order + 1)] += w;
        if (i < N) self(self, order + 1, i, z, w);
      }
    }
  };
  sums[0] += 1.0;
  extend(extend, 0, 0, 0, 1.0);
  for (std::size_t m = 0; m < sums.size(); ++m) out.terms[m] = sums[m].value();
  return out;
}

ChaosTerms chaos_recursive(int N, double beta, const StepFactors& factors, int M) {
  // w[m][j] holds order-m weight at site z = -n + 2j after step n.
  const auto width = static_cast<std::size_t>(N) + 1;
  const auto orders = static_cast<std::size_t>(M) + 1;
  std::vector<std::vector<double>> w(orders, std::vector<double>(width, 0.0));
  std::vector<std::vector<double>> next = w;
  w[0][0] = 1.0;
  for (int n = 1; n <= N; ++n) {
    const auto len = static_cast<std::size_t>(n) + 1;
    const std::size_t top = std::min<std::size_t>(orders - 1, static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < len; ++j) {
      const int z = -n + 2 * static_cast<int>(j);
      const double bw = beta * factors.disorder(n, z);
      for (std::size_t m = 0; m <= top; ++m) {
        const double left = j > 0 ? w[m][j - 1] : 0.0;
        const double right = j + 1 < len ? w[m][j] : 0.0;
        double v = 0.5 * (left + right);
        if (m > 0) {
          const double pl = j > 0 ? w[m - 1][j - 1] : 0.0;
          const double pr = j + 1 < len ? w[m - 1][j] : 0.0;
          v += 0.5 * bw * (pl + pr);
        }
        next[m][j] = v;
      }
    }
    std::swap(w, next);
  }
  ChaosTerms out;
  out.terms.resize(orders);
  for (std::size_t m = 0; m < orders; ++m) out.terms[m] = band_sum(w[m], width);
  return out;
}

}  // namespace

PartitionResult partition_dp(int N, const environment::DisorderFunction& A,
                             const environment::EnvironmentField& field, bool breakdown) {
  if (N < 1) throw DomainError("partition_dp: N must be >= 1");
  const StepFactors factors(N, A, field);
  const auto width = static_cast<std::size_t>(N) + 1;
  std::vector<double> w(width, 0.0), next(width, 0.0), f(width);
  w[0] = 1.0;
  int exponent = 0;
  for (int n = 1; n <= N; ++n) {
    const auto last = static_cast<std::size_t>(n);
    factors.fill(n, f.data());
    next[0] = 0.5 * w[0] * f[0];
    for (std::size_t j = 1; j < last; ++j) next[j] = 0.5 * (w[j - 1] + w[j]) * f[j];
    next[last] = 0.5 * w[last - 1] * f[last];
    std::swap(w, next);
    if ((n & 31) == 0 || n == N) renormalize(w, last + 1, exponent);
  }
  PartitionResult out;
  out.N = N;
  out.value = std::ldexp(band_sum(w, w.size()), exponent);
  if (breakdown) out.term_breakdown = chaos_recursive(N, 1.0, factors, N).terms;
  return out;
}

double partition_enumerated(int N, const environment::DisorderFunction& A,
                            const environment::EnvironmentField& field) {
  CompensatedSum total;
  for (const auto& [path, prob] : walks::enumerate_paths(N)) {
    double prod = 1.0;
    for (int n = 1; n <= N; ++n) prod *= 1.0 + A(n, path[n]) * field.omega(n, path[n]);
    total += prob * prod;
  }
  return total.value();
}

double ChaosTerms::sum(int upto) const {
  if (upto > order())
    throw TruncationOrderError("chaos terms truncated at order " + std::to_string(order()) +
                               ", order " + std::to_string(upto) + " requested");
  CompensatedSum s;
  for (int m = 0; m <= upto; ++m) s += terms[static_cast<std::size_t>(m)];
  return s.value();
}

double chaos_tail_bound(int N, int M, double x) {
  if (M >= N || x == 0.0) return 0.0;
  CompensatedSum s;
  for (int m = std::max(M + 1, 0); m <= N; ++m) s += std::exp(log_choose(N, m) + m * std::log(x));
  return s.value();
}

ChaosTerms chaos_terms(int N, double beta, const environment::DisorderFunction& A,
                       const environment::EnvironmentField& field, ChaosEngine engine, int M) {
  if (N < 1) throw DomainError("chaos_terms: N must be >= 1");
  const StepFactors factors(N, A, field);
  if (engine == ChaosEngine::Exact) {
    if (N > kMaxExactChaosHorizon)
      throw HorizonTooLarge("chaos_terms: exact engine needs N <= " + std::to_string(kMaxExactChaosHorizon));
    return chaos_exact(N, beta, factors);
  }
  if (M < 0 || M > N) M = N;
  ChaosTerms out = chaos_recursive(N, beta, factors, M);
  out.truncation_bound = chaos_tail_bound(N, M, std::fabs(beta) * A.sup_bound);
  return out;
}

CollisionWeights collision_weights(const walks::WalkEnsemble& ensemble, const environment::DisorderFunction& A) {
  const int N = ensemble.horizon();
  CollisionWeights out;
  out.per_step.assign(static_cast<std::size_t>(N), 0.0);
  std::vector<collisions::SiteCount> sites;
  CompensatedSum total;
  for (int n = 1; n <= N; ++n) {
    collisions::crowded_sites(ensemble, n, sites);
    if (sites.empty()) continue;
    double log_prod = 0.0;
    for (const auto& s : sites) {
      const double theta = A(n, s.z);
      // Even part of (1 + theta)^m minus 1: sum over even l >= 2 of C(m, l) theta^l.
      double x = 0.0;
      double c = 1.0;
      double tp = 1.0;
      for (int l = 1; l <= s.count; ++l) {
        c = c * (s.count - l + 1) / l;
        tp *= theta;
        if (l % 2 == 0) x += c * tp;
      }
      log_prod += std::log1p(x);
    }
    const double X = std::expm1(log_prod);
    out.per_step[static_cast<std::size_t>(n - 1)] = X;
    total += X;
  }
  out.sum = total.value();
  return out;
}

environment::DisorderFunction duality_amplitude(const collisions::TestFunction& f, int N) {
  if (N < 1) throw DomainError("duality_amplitude: N must be >= 1");
  const double dN = N;
  const double sqrtN = std::sqrt(dN);
  const double scale = std::pow(dN, -0.25);
  return {[eval = f.eval, dN, sqrtN, scale](int n, int z) {
            const double v = eval(n / dN, z / sqrtN);
            if (v < 0.0)
              throw NegativityError("test function is negative at (" + std::to_string(n) + ", " +
                                    std::to_string(z) + ")");
            return scale * std::sqrt(v);
          },
          scale * std::sqrt(std::max(f.bound, 0.0)), f.time_homogeneous};
}

DualityPair duality_pair(const walks::WalkEnsemble& ensemble, const collisions::TestFunction& f) {
  const int N = ensemble.horizon();
  if (N < 1) throw DomainError("duality_pair: N must be >= 1");
  const auto measures = collisions::detect_collisions(ensemble);
  DualityPair out;
  for (const auto& a : measures.with_multiplicity.atoms()) {
    if (f(static_cast<double>(a.n) / N, a.z / std::sqrt(static_cast<double>(N))) < 0.0)
      throw NegativityError("test function is negative on a collision site");
  }
  out.scaled_pi = collisions::integrate(measures.with_multiplicity, f) / std::sqrt(static_cast<double>(N));
  out.exp_pi = std::exp(out.scaled_pi);
  const auto w = collision_weights(ensemble, duality_amplitude(f, N));
  out.t_sum = w.sum;
  double log_prod = 0.0;
  for (double X : w.per_step) log_prod += std::log1p(X);
  out.prod_x = std::exp(log_prod);
  return out;
}

void write_replicates_csv(std::ostream& os, const std::vector<ReplicateRow>& rows, int k,
                          const std::string& amplitude) {
  os << "# k=" << k << " amplitude=" << amplitude << " hash=" << kHashName << "-v" << kHashVersion << "\n";
  os << "seed,N,value,power\n";
  os.precision(17);
  for (const auto& r : rows) os << r.seed << ',' << r.N << ',' << r.value << ',' << r.power << '\n';
}

std::vector<ustat::UStatPlan> chaos_identity_plans(int N, const environment::DisorderFunction& A) {
  std::vector<ustat::UStatPlan> plans;
  for (int n = 1; n <= N; ++n) {
    ustat::UStatSpec spec;
    spec.n = n;
    spec.N = N;
    spec.A = A;
    spec.support_radius = std::sqrt(static_cast<double>(N));
    spec.cell_constant = true;
    spec.ordered_support = true;
    spec.g = [N, n](std::span<const double> t, std::span<const double> x) {
      return kernels::discrete_kernel_pNn({{t.begin(), t.end()}, {x.begin(), x.end()}}, N, n);
    };
    spec.prefix_feasible = [](std::span<const int> times, std::span<const int> sites) {
      const std::size_t j = times.size() - 1;
      const int di = j == 0 ? times[0] : times[j] - times[j - 1];
      const int dz = j == 0 ? sites[0] : sites[j] - sites[j - 1];
      return di > 0 && std::abs(dz) <= di;
    };
    plans.emplace_back(spec);
  }
  return plans;
}

double chaos_identity_value(const std::vector<ustat::UStatPlan>& plans, double beta,
                            const environment::EnvironmentField& field) {
  CompensatedSum total;
  total += 1.0;
  for (const auto& p : plans) {
    const int n = p.order();
    total += std::pow(2.0, n / 2.0) * std::pow(beta, n) * p.evaluate(field);
  }
  return total.value();
}

}  // namespace collide::polymer
