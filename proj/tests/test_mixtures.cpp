#include "check_error.hpp"
#include "doctest.h"
#include "roughmarket/strategies.hpp"
#include "test_support.hpp"

using namespace roughmarket;

namespace {

SimpleStrategy idle(double c) {
  SimpleStrategy g;
  g.initial_capital = c;
  return g;
}

int level_for(const PricePath& p) {
  int level = 0;
  while (std::ldexp(1.0, level) < std::max(1.0, p.max_value())) ++level;
  return level;
}

}  // namespace

TEST_SUITE("mixtures") {

TEST_CASE("run_mixture examples") {
  const auto saw = path_from_values({1, 0.5, 1.5, 0.5, 1.5});
  StrategyMixture one;
  one.components.push_back({1.0, doob_strategy(0.5, 1.5)});
  CHECK(run_mixture(one, saw).trace.capital == run_simple(doob_strategy(0.5, 1.5), saw).capital);

  StrategyMixture pair;
  pair.components = {{1.0, idle(0.3)}, {1.0, idle(0.7)}};
  const auto run = run_mixture(pair, saw);
  CHECK(run.initial_capital == 1.0);
  for (double k : run.trace.capital) CHECK(k == 1.0);

  StrategyMixture fall;
  fall.components.push_back({1.0, doob_strategy(0.5, 1.5)});
  CHECK(run_mixture(fall, path_from_values({1, 0.5, 0})).trace.min_capital() >= 0.0);

  SimpleStrategy shorty;
  shorty.initial_capital = 1;
  shorty.rules = {{StoppingRule::at_time(0), PositionRule::units(-1)}};
  StrategyMixture bad;
  bad.components.push_back({0.5, shorty});
  CHECK_ERROR(run_mixture(bad, path_from_values({1, 3})), NegativeComponent);
}

TEST_CASE("Prop-1 weights") {
  const Prop1WeightTable w(VariationFunctional::power(3));
  CHECK(w.normalizer() == doctest::Approx(2.0));
  double total = 0.0;
  for (int j = 0; j < 200; ++j) total += w(j);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w(0) == doctest::Approx(0.5));
  CHECK(w(-1) == 0.0);
  CHECK_ERROR(Prop1WeightTable(VariationFunctional::power(2)), InadmissiblePhi);

  const auto psi_like = VariationFunctional::custom(
      [](double u) {
        const double r = u / binary_log_star(u);
        return r * r;
      },
      "(u/log*u)^2");
  const Prop1WeightTable slow(psi_like);
  CHECK(slow(1) == doctest::Approx(1.0 / slow.normalizer()));
  CHECK(slow(4) == doctest::Approx(1.0 / 16.0 / slow.normalizer()));
}

TEST_CASE("Prop-3 weights") {
  for (double eps : {0.5, 1.0}) {
    for (int level : {0, 1, 3}) {
      double total = 0.0;
      for (int j = 2 - level; j < 2 - level + 400; ++j) total += prop3_depth_weight(eps, level, j);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(prop3_depth_weight(eps, level, 1 - level) == 0.0);
    }
  }
  double mix = 0.0;
  for (int level = 0; level < 200; ++level) mix += prop3_level_weight(0.5, level);
  CHECK(mix == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(prop3_total_initial(1.0) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("truncation requires a hint or a cutoff") {
  CHECK_ERROR(volatility_mixture(Prop3Weights{1, 1}, 0, JPolicy{}), TruncationUnsafe);
  CHECK_ERROR(volatility_mixture(Prop1Weights{VariationFunctional::power(2)}, 0, JPolicy{4}), InadmissiblePhi);
}

TEST_CASE("Prop-3 mixture: initial capital accounting") {
  std::mt19937_64 rng(131);
  for (double eps : {0.5, 1.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto path = testing::random_positive_path(rng, testing::random_size(rng, 2, 60));
      const auto mix = volatility_mixture(Prop3Weights{eps, 1.0}, level_for(path), JPolicy{}, &path);
      CHECK(mix.total_initial() == doctest::Approx(prop3_total_initial(eps)).epsilon(1e-12));
      CHECK(mix.total_initial() <= 1.0);
      CHECK(mix.analytic_tail_capital >= 0.0);
      CHECK(mix.truncated_initial >= 0.0);
    }
  }
}

TEST_CASE("constant path: the mixture never moves") {
  const auto flat = path_from_values({1.5, 1.5, 1.5, 1.5});
  const auto mix = volatility_mixture(Prop3Weights{1, 1}, 1, JPolicy{}, &flat);
  CHECK(mix.grids.empty());
  CHECK(mix.truncated_initial == 0.0);
  const auto run = run_mixture(mix, flat);
  CHECK(run.trace.final() == doctest::Approx(run.initial_capital).epsilon(1e-15));

  const auto p1 = volatility_mixture(Prop1Weights{VariationFunctional::power(3)}, 1, JPolicy{6}, &flat);
  const auto r1 = run_mixture(p1, flat);
  for (double k : r1.trace.capital) CHECK(k == doctest::Approx(r1.trace.initial()).epsilon(1e-15));
}

TEST_CASE("aggregated and expanded routes agree") {
  std::mt19937_64 rng(137);
  for (int trial = 0; trial < 40; ++trial) {
    const auto path = testing::random_path(rng, testing::random_size(rng, 2, 30), 2.0, trial % 2 == 0);
    const int level = level_for(path);
    for (const auto& w : {VolatilityWeights{Prop3Weights{1, 0.5}},
                          VolatilityWeights{Prop1Weights{VariationFunctional::power(2.5)}}}) {
      const auto mix = volatility_mixture(w, level, JPolicy{3}, &path);
      const auto agg = run_mixture(mix, path, MixtureRoute::Aggregated);
      const auto exp = run_mixture(mix, path, MixtureRoute::Expanded);
      CHECK(agg.initial_capital == exp.initial_capital);
      for (std::size_t s = 0; s < path.size(); ++s) {
        CHECK(agg.trace.capital[s] == doctest::Approx(exp.trace.capital[s]).epsilon(1e-12));
        CHECK(agg.trace.position[s] == doctest::Approx(exp.trace.position[s]).epsilon(1e-12));
      }
      CHECK(mix.member_count() == mix.expand().size());
    }
  }
}

TEST_CASE("Prop-1 crossing inequality on [0,1,0,1]") {
  const auto saw = path_from_values({0, 1, 0, 1});
  const auto phi = VariationFunctional::power(3);
  const auto mix = volatility_mixture(Prop1Weights{phi}, 0, JPolicy{}, &saw);
  const auto run = run_mixture(mix, saw);
  // Grid step 2^-j up to 1/4 of the unit gap; w(j) = 2^-j / 2 for p = 3.
  REQUIRE(mix.grids.size() == 3);
  double rhs = 0.0;
  for (int j = 0; j <= 2; ++j) {
    std::uint64_t m = 0;
    for (int k = 0; k < (1 << j); ++k) m += crossings(saw, std::ldexp(k, -j), std::ldexp(k + 1, -j)).up;
    CHECK(m == static_cast<std::uint64_t>(2 << j));
    rhs += std::ldexp(0.5, -j) * std::ldexp(1.0, -2 * j) * static_cast<double>(m);
  }
  CHECK(rhs == doctest::Approx(1.0 + 0.25 + 1.0 / 16.0));
  CHECK(run.trace.final() >= rhs);
}

TEST_CASE("Prop-3 pipeline on [0,1,0,1]") {
  const auto saw = path_from_values({0, 1, 0, 1});
  const auto r = verify_prop3_bound(saw, 1.0, 1.0, 3);
  // One simulated grid (L = 0, j = 2): member weight 1/8, members end at a_k + 2.
  const double s_final = (0.0 + 0.25 + 0.5 + 0.75 + 4 * 2.0) / 8.0;
  const double rhs = 3.0 / 1024.0 - 0.25;
  CHECK(r.level == 0);
  CHECK(r.var_p == 3.0);
  CHECK(r.s_final == doctest::Approx(s_final).epsilon(1e-15));
  CHECK(r.rhs == doctest::Approx(rhs).epsilon(1e-15));
  CHECK(r.margin == doctest::Approx(1.4345703125).epsilon(1e-15));
  CHECK(r.s0 == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(r.holds);

  const auto flat = verify_prop3_bound(path_from_values({1, 1, 1}), 1.0, 1.0, 8);
  CHECK(flat.rhs == -0.25);
  CHECK(flat.s_final == doctest::Approx(flat.s0).epsilon(1e-15));
  CHECK_ERROR(evaluate_prop3_bound(saw, 0.0, 1.0, 3), BadSpec);
}

TEST_CASE("min value gap") {
  CHECK(min_value_gap(path_from_values({1, 3, 1.5, 3})) == 0.5);
  CHECK(min_value_gap(path_from_values({2, 2})) == 0.0);
}

TEST_CASE("unboundedness mixture") {
  const auto flat = path_from_values({1, 1, 1});
  const auto m_flat = unboundedness_mixture(10, 1.0);
  const auto r_flat = run_mixture(m_flat, flat);
  CHECK(r_flat.trace.final() == doctest::Approx(r_flat.initial_capital - m_flat.truncated_initial));
  CHECK(r_flat.initial_capital == doctest::Approx(1.0));

  const auto rocket = path_from_values({1, 1024});
  const auto r = run_mixture(unboundedness_mixture(10, 1.0), rocket);
  CHECK(r.trace.final() == 1023.0);

  // w(0) = 0: one unit bought for free.
  const auto from_zero = path_from_values({0, 4});
  CHECK(run_mixture(unboundedness_mixture(2, 0.0), from_zero).trace.final() == 3.75);
  CHECK_ERROR(unboundedness_mixture(0), BadSpec);

  // Start above some targets: those members are folded into the tail.
  const auto high = unboundedness_mixture(4, 5.0);
  CHECK(high.components.size() == 2);
  CHECK(high.analytic_tail_capital == 0.75);
}

TEST_CASE("crossing explosion mixture") {
  const auto saw = path_from_values({1, 0.5, 1.5, 0.5, 1.5, 0.5, 1.5, 0.5, 1.0, 1.5, 0.5, 1.5});
  const auto single = crossing_explosion_mixture({{0.5, 1.5, 1.0}});
  auto capped = doob_strategy(0.5, 1.5);
  capped.capital_cap = 1.0;
  CHECK(run_mixture(single, saw).trace.capital == run_simple(capped, saw).capital);

  const auto two = crossing_explosion_mixture({{0.5, 1.5, 0.25}, {0.25, 0.75, 0.75}});
  const auto& quarter = two.components[0];
  CHECK(*quarter.strategy.capital_cap == 4.0);
  CHECK(run_simple(quarter.strategy, saw).final() == 4.0);
  CHECK(two.total_initial() == doctest::Approx(0.25 * 0.5 + 0.75 * 0.25));

  double bound = 0.0;
  for (const auto& c : two.components) {
    const double a = c.strategy.initial_capital;
    const double b = c.strategy.rules[1].when.level;
    const double k = static_cast<double>(crossings(saw, a, b).up);
    bound += c.weight * std::min((b - a) * k, 1.0 / c.weight);
  }
  CHECK(run_mixture(two, saw).trace.final() >= bound);

  CHECK_ERROR(crossing_explosion_mixture({{0.5, 1.5, 0.5}}), BadWeights);
  CHECK_ERROR(crossing_explosion_mixture({{0.5, 1.5, -0.5}, {0.5, 1.5, 1.5}}), BadWeights);
  CHECK_ERROR(crossing_explosion_mixture({}), BadWeights);
  CHECK_ERROR(crossing_explosion_mixture({{1.5, 0.5, 1.0}}), BadInterval);
}

TEST_CASE("mixtures pass the borrowing audit") {
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 20; ++trial) {
    const auto path = testing::random_positive_path(rng, testing::random_size(rng, 2, 80));
    const int level = level_for(path);
    CHECK(borrowing_free_check(volatility_mixture(Prop3Weights{1, 1}, level, JPolicy{}, &path), path).ok);
    CHECK(borrowing_free_check(volatility_mixture(Prop1Weights{VariationFunctional::power(3)}, level, JPolicy{5}, &path),
                               path)
              .ok);
    CHECK(borrowing_free_check(unboundedness_mixture(6, path.front()), path).ok);
  }
}

}
