#include "collide/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "collide/errors.hpp"
#include "collide/numeric.hpp"
#include "collide/random.hpp"

namespace collide::ustat {

namespace {

class Enumerator {
 public:
  Enumerator(const UStatSpec& spec, std::vector<Term>& terms, std::vector<int>& cells)
      : spec_(spec), terms_(terms), cells_(cells) {
    const auto n = static_cast<std::size_t>(spec.n);
    times_.resize(n);
    sites_.resize(n);
    used_.assign(static_cast<std::size_t>(spec.N) + 1, false);
    sqrtN_ = std::sqrt(static_cast<double>(spec.N));
    // Cells ((z-1)/sqrtN, (z+1)/sqrtN] meeting [-R, R].
    const double reach = spec.support_radius * sqrtN_ + 1.0;
    zmax_ = static_cast<int>(std::ceil(reach)) - 1;
    ordered_ = spec.ordered_support || spec.symmetric;
    double factor = 1.0;
    if (spec.symmetric && !spec.ordered_support) factor = std::tgamma(spec.n + 1.0);
    prefactor_ = factor * std::pow(2.0, 0.5 * spec.n);
  }

  void run() {
    if (!spec_.prefix_feasible) {
      const double per_axis = static_cast<double>(spec_.N) * (zmax_ + 1);
      if (std::pow(per_axis, spec_.n) > kMaxCells)
        throw ComplexityGuard("u_statistic: (N * spatial range)^n = " +
                              std::to_string(std::pow(per_axis, spec_.n)) + " exceeds 1e8 cells");
    }
    descend(0);
  }

 private:
  void descend(int j) {
    if (j == spec_.n) {
      emit();
      return;
    }
    const auto uj = static_cast<std::size_t>(j);
    const int lo = ordered_ && j > 0 ? times_[uj - 1] + 1 : 1;
    const int hi = ordered_ ? spec_.N - (spec_.n - 1 - j) : spec_.N;
    for (int i = lo; i <= hi; ++i) {
      if (!ordered_ && used_[static_cast<std::size_t>(i)]) continue;
      used_[static_cast<std::size_t>(i)] = true;
      times_[uj] = i;
      int z = -zmax_;
      if (((z - i) & 1) != 0) ++z;
      for (; z <= zmax_; z += 2) {
        if (++visited_ > kMaxCells) throw ComplexityGuard("u_statistic: enumeration exceeds 1e8 cells");
        sites_[uj] = z;
        if (spec_.prefix_feasible &&
            !spec_.prefix_feasible(std::span<const int>(times_).first(uj + 1),
                                   std::span<const int>(sites_).first(uj + 1)))
          continue;
        descend(j + 1);
      }
      used_[static_cast<std::size_t>(i)] = false;
    }
  }

  void emit() {
    const auto n = static_cast<std::size_t>(spec_.n);
    double amp = 1.0;
    for (std::size_t j = 0; j < n; ++j) amp *= spec_.A(times_[j], sites_[j]);
    if (amp == 0.0) return;
    double gbar;
    if (spec_.cell_constant) {
      std::vector<double> t(n), x(n);
      for (std::size_t j = 0; j < n; ++j) {
        t[j] = (times_[j] - 0.5) / spec_.N;
        x[j] = sites_[j] / sqrtN_;
      }
      gbar = spec_.g(t, x);
    } else {
      gbar = kernels::block_average_cell(spec_.g, times_, sites_, spec_.N, spec_.quad_nodes);
    }
    if (gbar == 0.0) return;
    terms_.push_back({prefactor_ * gbar * amp, static_cast<std::uint32_t>(cells_.size())});
    for (std::size_t j = 0; j < n; ++j) {
      cells_.push_back(times_[j]);
      cells_.push_back(sites_[j]);
    }
  }

  const UStatSpec& spec_;
  std::vector<Term>& terms_;
  std::vector<int>& cells_;
  std::vector<int> times_, sites_;
  std::vector<bool> used_;
  double sqrtN_ = 1.0;
  int zmax_ = 0;
  bool ordered_ = false;
  double prefactor_ = 1.0;
  double visited_ = 0.0;
};

bool within(double value, double target, double se, double slack) {
  return std::fabs(value - target) <= 4.0 * se + slack;
}

}  // namespace

UStatPlan::UStatPlan(const UStatSpec& spec) : n_(spec.n) {
  if (spec.n < 1 || spec.N < 1) throw DomainError("u_statistic: need n >= 1 and N >= 1");
  if (!spec.g) throw DomainError("u_statistic: integrand is empty");
  if (spec.n > spec.N) return;  // E^N_n is empty
  Enumerator(spec, terms_, cells_).run();
}

double UStatPlan::evaluate(const environment::EnvironmentField& field) const {
  CompensatedSum sum;
  const auto n = static_cast<std::size_t>(n_);
  for (const auto& term : terms_) {
    int sign = 1;
    const int* c = cells_.data() + term.offset;
    for (std::size_t j = 0; j < n; ++j) sign *= field.omega(c[2 * j], c[2 * j + 1]);
    sum += sign * term.coef;
  }
  return sum.value();
}

double UStatPlan::exact_second_moment() const {
  const auto n = static_cast<std::size_t>(n_);
  std::map<std::vector<std::pair<int, int>>, double> merged;
  std::vector<std::pair<int, int>> key(n);
  for (const auto& term : terms_) {
    const int* c = cells_.data() + term.offset;
    for (std::size_t j = 0; j < n; ++j) key[j] = {c[2 * j], c[2 * j + 1]};
    std::sort(key.begin(), key.end());
    merged[key] += term.coef;
  }
  CompensatedSum sum;
  for (const auto& [cells, coef] : merged) sum += coef * coef;
  return sum.value();
}

double u_statistic(const UStatSpec& spec, const environment::EnvironmentField& field) {
  return UStatPlan(spec).evaluate(field);
}

MomentSuite ustat_moment_suite(const UStatSpec& spec, double g_norm_sq, int replicas,
                               std::uint64_t master_seed, const UStatSpec* other) {
  if (replicas < 1000) throw DomainError("ustat_moment_suite: need at least 1000 replicas");
  const UStatPlan plan(spec);
  std::optional<UStatPlan> other_plan;
  if (other != nullptr) other_plan.emplace(*other);

  std::vector<double> s(static_cast<std::size_t>(replicas)), s2(s.size()), cross(s.size());
  for (int r = 0; r < replicas; ++r) {
    const environment::EnvironmentField field{derive_seed(master_seed, {static_cast<std::uint64_t>(r)})};
    const double v = plan.evaluate(field);
    const auto ur = static_cast<std::size_t>(r);
    s[ur] = v;
    s2[ur] = v * v;
    if (other_plan) cross[ur] = v * other_plan->evaluate(field);
  }
  auto summarize = [replicas](const std::vector<double>& xs) {
    const double mean = tree_sum(xs) / replicas;
    CompensatedSum ss;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss.value() / (replicas - 1);
    return MomentEstimate{mean, std::sqrt(var / replicas)};
  };

  MomentSuite out;
  out.replicas = replicas;
  out.mean = summarize(s);
  out.second_moment = summarize(s2);
  out.exact_second_moment = plan.exact_second_moment();
  const double c = spec.A.sup_bound;
  // Tuples that are permutations of one another share their omega product,
  // so without ordered support up to n! coefficients add up before squaring.
  const double perms = spec.ordered_support ? 1.0 : std::tgamma(spec.n + 1.0);
  out.l2_bound =
      perms * std::pow(c, 2.0 * spec.n) * std::pow(static_cast<double>(spec.N), 1.5 * spec.n) * g_norm_sq;
  out.mean_ok = within(out.mean.value, 0.0, out.mean.std_err, 1e-12);
  out.second_moment_ok = within(out.second_moment.value, out.exact_second_moment, out.second_moment.std_err,
                                1e-9 * out.exact_second_moment);
  out.bound_ok = out.exact_second_moment <= out.l2_bound * (1.0 + 1e-9);
  if (other_plan) {
    out.cross_moment = summarize(cross);
    out.cross_ok = within(out.cross_moment->value, 0.0, out.cross_moment->std_err, 1e-12);
  }
  return out;
}

}  // namespace collide::ustat
