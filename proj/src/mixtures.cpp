#include <algorithm>
#include <cmath>
#include <limits>

#include "roughmarket/error.hpp"
#include "roughmarket/strategies.hpp"
#include "summation.hpp"

namespace roughmarket {

namespace {

constexpr double kCapitalTolerance = 1e-9;
// Series terms below this are dropped from the tail bookkeeping.
constexpr double kNegligible = 1e-20;
// Members are indexed by int64 and priced as k * 2^-j in double.
constexpr int kMaxGridBits = 52;
constexpr int kProp1SeriesLimit = 1 << 20;

}  // namespace

double StrategyMixture::simulated_initial() const {
  detail::Neumaier sum;
  for (const auto& c : components) sum.add(c.weight * c.strategy.initial_capital);
  for (const auto& g : grids) sum.add(kernels::doob_grid_initial(g.spec));
  return sum.value();
}

std::size_t StrategyMixture::member_count() const {
  std::size_t n = components.size();
  for (const auto& g : grids) n += static_cast<std::size_t>(g.spec.count);
  return n;
}

std::vector<WeightedStrategy> StrategyMixture::expand() const {
  std::vector<WeightedStrategy> out = components;
  for (const auto& g : grids) {
    for (std::int64_t k = 0; k < g.spec.count; ++k) {
      const double a = static_cast<double>(k) * g.spec.step;
      const double b = static_cast<double>(k + 1) * g.spec.step;
      out.push_back({g.spec.member_weight, doob_strategy(a, b)});
    }
  }
  return out;
}

MixtureRun run_mixture(const StrategyMixture& mixture, const PricePath& path, MixtureRoute route) {
  const auto x = path.values();
  const std::size_t n = x.size();
  std::vector<detail::Neumaier> capital(n), position(n);
  CapitalTrace out;

  auto absorb = [&](double weight, const std::vector<double>& k, const std::vector<double>& h,
                    const std::string& label) {
    for (std::size_t s = 0; s < n; ++s) {
      if (k[s] < -kCapitalTolerance) {
        throw Error(ErrorCode::NegativeComponent,
                    label + " reached capital " + format_double(k[s]) + " at sample " + std::to_string(s));
      }
      capital[s].add(weight * k[s]);
      position[s].add(weight * h[s]);
    }
  };

  const bool expanded = route == MixtureRoute::Expanded;
  const auto members = expanded ? mixture.expand() : mixture.components;
  for (const auto& member : members) {
    const auto trace = run_simple(member.strategy, path, RunOptions{false});
    absorb(member.weight, trace.capital, trace.position, member.strategy.descriptor);
    out.fired.insert(out.fired.end(), trace.fired.begin(), trace.fired.end());
  }
  if (!expanded && !mixture.grids.empty()) {
    std::vector<kernels::DoobGridSpec> specs;
    specs.reserve(mixture.grids.size());
    for (const auto& g : mixture.grids) specs.push_back(g.spec);
    const auto aggregates = kernels::parallel::doob_grids(x, specs);
    for (std::size_t g = 0; g < aggregates.size(); ++g) {
      absorb(1.0, aggregates[g].capital, aggregates[g].position,
             "grid L=" + std::to_string(mixture.grids[g].level) + " j=" + std::to_string(mixture.grids[g].depth));
    }
  }
  std::stable_sort(out.fired.begin(), out.fired.end(), [](const Firing& a, const Firing& b) { return a.sample < b.sample; });

  out.capital.resize(n);
  out.position.resize(n);
  out.cash.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    capital[s].add(mixture.analytic_tail_capital);
    out.capital[s] = capital[s].value();
    out.position[s] = position[s].value();
    out.cash[s] = out.capital[s] - out.position[s] * x[s];
  }
  return {std::move(out), mixture.total_initial()};
}

Prop1WeightTable::Prop1WeightTable(VariationFunctional phi) : phi_(std::move(phi)) {
  const auto report = phi_admissible(phi_);
  if (!report.admissible) throw Error(ErrorCode::InadmissiblePhi, phi_.name() + " fails the dyadic series probe");
  if (phi_.kind() == VariationFunctional::Kind::Power) {
    normalizer_ = 1.0 / (1.0 - std::exp2(2.0 - phi_.exponent()));
    j_limit_ = std::numeric_limits<int>::max();
  } else {
    detail::Neumaier sum;
    for (int j = 0; j <= kProp1SeriesLimit; ++j) sum.add(std::ldexp(phi_(std::ldexp(1.0, -j)), 2 * j));
    normalizer_ = sum.value();
    j_limit_ = kProp1SeriesLimit;
  }
}

double Prop1WeightTable::operator()(int j) const {
  if (j < 0 || j > j_limit_) return 0.0;
  return std::ldexp(phi_(std::ldexp(1.0, -j)), 2 * j) / normalizer_;
}

double prop3_depth_weight(double epsilon, int level, int j) {
  if (j < 2 - level) return 0.0;
  return (1.0 - std::exp2(-epsilon)) * std::exp2(epsilon * (2 - level) - epsilon * j);
}

double prop3_level_weight(double delta, int level) { return (1.0 - std::exp2(-delta)) * std::exp2(-delta * level); }

double prop3_total_initial(double epsilon) {
  return 1.0 - 0.5 * (std::exp2(epsilon) - 1.0) / (std::exp2(1.0 + epsilon) - 1.0);
}

double min_value_gap(const PricePath& path) {
  std::vector<double> v(path.values().begin(), path.values().end());
  std::sort(v.begin(), v.end());
  double gap = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    if (d > 0.0 && (gap == 0.0 || d < gap)) gap = d;
  }
  return gap;
}

namespace {

struct TailAccount {
  detail::Neumaier inactive;
  detail::Neumaier truncated;
};

// Members k*h < floor of the hint path never reach [0, a]; on a constant hint
// path nobody's capital moves.
void account_truncated(TailAccount& tail, double scale, double weight, int level, int j, const PricePath* hint) {
  const double h = std::ldexp(1.0, -j);
  const double count = std::ldexp(1.0, level + j);
  // Total initial: scale * weight * 2^{-L-j} * h * K(K-1)/2 = scale * weight * (2^{L-1} - 2^{-j-1}).
  const double total = scale * weight * (std::ldexp(1.0, level - 1) - std::ldexp(1.0, -j - 1));
  double idle = 0.0;
  if (hint != nullptr) {
    if (hint->min_value() == hint->max_value()) {
      idle = total;
    } else {
      const double m = std::min(count, std::ceil(std::ldexp(hint->min_value(), j)));
      if (m > 0.0) idle = scale * weight * (m * h) * std::ldexp(m - 1.0, -level - j) / 2.0;
    }
  }
  tail.inactive.add(idle);
  tail.truncated.add(total - idle);
}

int cutoff_depth(const JPolicy& policy, const PricePath* hint, int level, int j_lo) {
  int cut = std::numeric_limits<int>::max();
  if (policy.j_max) cut = *policy.j_max;
  if (hint != nullptr) {
    const double gap = min_value_gap(*hint);
    // Keep every j with 2^-j >= gap / 4.
    const int from_hint = gap > 0.0 ? static_cast<int>(std::floor(std::log2(4.0 / gap))) : j_lo - 1;
    cut = std::min(cut, from_hint);
  }
  return std::min(cut, kMaxGridBits - level);
}

}  // namespace

StrategyMixture volatility_mixture(const VolatilityWeights& weights, int level_max, const JPolicy& policy,
                                   const PricePath* path_hint) {
  if (level_max < 0) throw Error(ErrorCode::BadSpec, "level must be non-negative");
  if (!policy.j_max && path_hint == nullptr) {
    throw Error(ErrorCode::TruncationUnsafe, "need a path hint or an explicit j cutoff");
  }
  StrategyMixture mix;
  TailAccount tail;

  auto add_level = [&](int level, double scale, int j_lo, auto&& depth_weight, bool simulate, int j_end) {
    const int cut = simulate ? cutoff_depth(policy, path_hint, level, j_lo) : j_lo - 1;
    for (int j = j_lo; j <= j_end; ++j) {
      const double w = depth_weight(j);
      if (j > cut && scale * w * std::ldexp(1.0, level) < kNegligible) break;
      if (w == 0.0) continue;
      if (j <= cut) {
        kernels::DoobGridSpec spec;
        spec.step = std::ldexp(1.0, -j);
        spec.count = std::int64_t{1} << (level + j);
        spec.member_weight = scale * w * std::ldexp(1.0, -level - j);
        mix.grids.push_back({level, j, spec});
      } else {
        account_truncated(tail, scale, w, level, j, path_hint);
      }
    }
  };

  if (const auto* p1 = std::get_if<Prop1Weights>(&weights)) {
    const Prop1WeightTable table(p1->phi);
    const int level = level_max;
    const int j_end = table.j_limit() == std::numeric_limits<int>::max() ? 100000 : table.j_limit();
    add_level(level, 1.0, 0, [&](int j) { return table(j); }, true, j_end);
    mix.descriptor = "prop1(" + p1->phi.name() + ", L=" + std::to_string(level) + ")";
  } else {
    const auto& p3 = std::get<Prop3Weights>(weights);
    if (!(p3.epsilon > 0.0) || !(p3.delta > 0.0)) throw Error(ErrorCode::BadSpec, "epsilon and delta must be positive");
    for (int level = 0;; ++level) {
      const double mixing = prop3_level_weight(p3.delta, level);
      if (level > level_max && mixing < kNegligible) break;
      const double scale = mixing * std::ldexp(1.0, 1 - level);
      add_level(level, scale, 2 - level, [&](int j) { return prop3_depth_weight(p3.epsilon, level, j); },
                level <= level_max, 100000);
    }
    mix.descriptor = "prop3(eps=" + format_double(p3.epsilon) + ", delta=" + format_double(p3.delta) +
                     ", L<=" + std::to_string(level_max) + ")";
  }
  mix.analytic_tail_capital = tail.inactive.value();
  mix.truncated_initial = tail.truncated.value();
  return mix;
}

double prop3_rhs(double epsilon, double delta, double var_p, double sup) {
  const double coef = (1.0 - std::exp2(-epsilon)) * (1.0 - std::exp2(-delta)) * std::exp2(-6.0 - epsilon - delta);
  return coef * var_p / std::pow(std::max(1.0, sup), 2.0 + epsilon + delta) - 0.25;
}

Prop3Report evaluate_prop3_bound(const PricePath& path, double epsilon, double delta, std::size_t n_steps) {
  if (!(epsilon > 0.0) || !(delta > 0.0) || n_steps < 1) {
    throw Error(ErrorCode::BadSpec, "need epsilon > 0, delta > 0, N >= 1");
  }
  const auto coarse = discretize(path, n_steps);
  Prop3Report r;
  r.epsilon = epsilon;
  r.delta = delta;
  r.n_steps = n_steps;
  r.sup = coarse.max_value();
  r.level = 0;
  while (std::ldexp(1.0, r.level) < std::max(1.0, r.sup)) ++r.level;

  const auto mix = volatility_mixture(Prop3Weights{epsilon, delta}, r.level, JPolicy{}, &coarse);
  const auto run = run_mixture(mix, coarse);
  r.s0 = run.initial_capital;
  r.s_final = run.trace.final();
  r.var_p = var_phi(coarse, VariationFunctional::power(2.0 + epsilon));
  r.rhs = prop3_rhs(epsilon, delta, r.var_p, r.sup);
  r.margin = r.s_final - r.rhs;
  r.holds = r.s_final > r.rhs;
  return r;
}

Prop3Report verify_prop3_bound(const PricePath& path, double epsilon, double delta, std::size_t n_steps) {
  auto r = evaluate_prop3_bound(path, epsilon, delta, n_steps);
  if (!r.holds) {
    throw Error(ErrorCode::BoundViolated, "S_T = " + format_double(r.s_final) + " <= rhs = " + format_double(r.rhs));
  }
  return r;
}

StrategyMixture unboundedness_mixture(int m_max, double omega0_hint) {
  if (m_max < 1) throw Error(ErrorCode::BadSpec, "m_max must be at least 1");
  StrategyMixture mix;
  for (int m = 1; m <= m_max; ++m) {
    const double target = std::ldexp(1.0, m);
    const double weight = std::ldexp(1.0, -m);
    if (omega0_hint > 0.0 && target <= omega0_hint) {
      mix.analytic_tail_capital += weight;  // sells at time 0
      continue;
    }
    SimpleStrategy g;
    g.initial_capital = 1.0;
    g.rules = {{StoppingRule::at_time(0.0), PositionRule::capital_fraction(1.0, 1.0)},
               {StoppingRule::hit_above(target), PositionRule::units(0.0)}};
    g.descriptor = "unbounded(m=" + std::to_string(m) + ")";
    mix.components.push_back({weight, std::move(g)});
  }
  mix.truncated_initial = std::ldexp(1.0, -m_max);
  mix.descriptor = "unboundedness(m<=" + std::to_string(m_max) + ")";
  return mix;
}

StrategyMixture crossing_explosion_mixture(const std::vector<CrossingInterval>& intervals) {
  if (intervals.empty()) throw Error(ErrorCode::BadWeights, "no intervals");
  detail::Neumaier total;
  for (const auto& iv : intervals) {
    if (!(iv.weight > 0.0)) throw Error(ErrorCode::BadWeights, "weights must be positive");
    if (!(iv.a >= 0.0) || !(iv.a < iv.b)) throw Error(ErrorCode::BadInterval, "need 0 <= a < b");
    total.add(iv.weight);
  }
  if (std::abs(total.value() - 1.0) > 1e-12) throw Error(ErrorCode::BadWeights, "weights must sum to 1");
  StrategyMixture mix;
  for (const auto& iv : intervals) {
    auto g = doob_strategy(iv.a, iv.b);
    g.capital_cap = 1.0 / iv.weight;
    g.descriptor += " cap " + format_double(*g.capital_cap);
    mix.components.push_back({iv.weight, std::move(g)});
  }
  mix.descriptor = "crossing-explosion(" + std::to_string(intervals.size()) + ")";
  return mix;
}

}  // namespace roughmarket
