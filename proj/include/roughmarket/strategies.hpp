#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "roughmarket/kernels.hpp"
#include "roughmarket/paths.hpp"
#include "roughmarket/variation.hpp"

namespace roughmarket {

/// When a rule fires. Hitting rules use closed sets, so on a step path the
/// hitting time is the first eligible sample inside the set.
struct StoppingRule {
  enum class Kind { AtTime, HitBelow, HitAbove };
  Kind kind = Kind::AtTime;
  double level = 0.0;  // time for AtTime, price level otherwise

  static StoppingRule at_time(double t) { return {Kind::AtTime, t}; }
  /// First time w(t) is in [0, a].
  static StoppingRule hit_below(double a) { return {Kind::HitBelow, a}; }
  /// First time w(t) is in [b, inf).
  static StoppingRule hit_above(double b) { return {Kind::HitAbove, b}; }
};

struct PositionRule {
  enum class Kind { Units, CapitalFraction };
  Kind kind = Kind::Units;
  double value = 0.0;
  double zero_price_units = 0.0;  // CapitalFraction at a zero price

  static PositionRule units(double h) { return {Kind::Units, h, 0.0}; }
  /// h = f * K / w at the firing time.
  static PositionRule capital_fraction(double f, double zero_price_units = 0.0) {
    return {Kind::CapitalFraction, f, zero_price_units};
  }
};

struct TradingRule {
  StoppingRule when;
  PositionRule position;
};

/// Initial capital plus an ordered list of (stopping rule, position) pairs.
/// Rules are tried in order; the n-th rule can only fire at or after the
/// sample where rule n-1 fired. A cyclic strategy restarts its list forever.
struct SimpleStrategy {
  double initial_capital = 0.0;
  std::vector<TradingRule> rules;
  bool cyclic = false;
  /// Liquidate and stop trading once capital reaches this value.
  std::optional<double> capital_cap;
  std::string descriptor;
};

struct Firing {
  std::size_t sample = 0;
  std::size_t rule = 0;  // kLiquidation for cap stops
  double position = 0.0;
  static constexpr std::size_t kLiquidation = std::numeric_limits<std::size_t>::max();
};

/// Per-sample capital K, position h held over (t_s, t_{s+1}], and cash K - h w(t_s).
struct CapitalTrace {
  std::vector<double> capital;
  std::vector<double> position;
  std::vector<double> cash;
  std::vector<Firing> fired;

  double initial() const { return capital.front(); }
  double final() const { return capital.back(); }
  double min_capital() const;
};

#ifdef NDEBUG
inline constexpr bool kVerifyAdaptedByDefault = false;
#else
inline constexpr bool kVerifyAdaptedByDefault = true;
#endif

struct RunOptions {
  bool verify_adapted = kVerifyAdaptedByDefault;
};

CapitalTrace run_simple(const SimpleStrategy& strategy, const PricePath& path, RunOptions options = {});

/// c + sum_n h_n (w(tau_{n+1} ^ t) - w(tau_n ^ t)), evaluated from the firing record.
double telescoped_capital(const SimpleStrategy& strategy, const CapitalTrace& trace,
                          const PricePath& path, std::size_t sample);

/// Suffix-perturbation test: traces must agree up to each cut point when
/// the path is altered strictly after it. Throws NonAdapted.
void check_adapted(const SimpleStrategy& strategy, const PricePath& path, std::uint64_t seed = 1,
                   std::size_t cut_points = 4);

/// Upcrossing strategy: capital a, buy one unit on hitting [0,a],
/// sell on hitting [b, inf), repeat.
SimpleStrategy doob_strategy(double a, double b);

struct WeightedStrategy {
  double weight = 1.0;
  SimpleStrategy strategy;
};

struct DoobGrid {
  int level = 0;  // L: grid covers [0, 2^L]
  int depth = 0;  // j: step 2^-j
  kernels::DoobGridSpec spec;
};

/// Weighted family of positive simple strategies. Grids stand for 2^(L+j)
/// Doob members each; tail terms account for members that are not simulated.
struct StrategyMixture {
  std::vector<WeightedStrategy> components;
  std::vector<DoobGrid> grids;
  /// Initial capital of members that provably never change capital on the hint path.
  double analytic_tail_capital = 0.0;
  /// Initial capital of truncated members that may trade; counted in S_0, not in S_t.
  double truncated_initial = 0.0;
  std::string descriptor;

  double simulated_initial() const;
  double total_initial() const { return simulated_initial() + analytic_tail_capital + truncated_initial; }
  std::size_t member_count() const;
  /// Explicit components followed by every grid member; only for small grids.
  std::vector<WeightedStrategy> expand() const;
};

enum class MixtureRoute { Aggregated, Expanded };

struct MixtureRun {
  CapitalTrace trace;      // simulated members plus analytic tail
  double initial_capital;  // total_initial, including truncated members
};

/// Throws NegativeComponent if an explicit (or, on the expanded route, any) member
/// or an aggregated grid goes below zero.
MixtureRun run_mixture(const StrategyMixture& mixture, const PricePath& path,
                       MixtureRoute route = MixtureRoute::Aggregated);

struct Prop1Weights {
  VariationFunctional phi;
};

struct Prop3Weights {
  double epsilon = 1.0;
  double delta = 1.0;
};

using VolatilityWeights = std::variant<Prop1Weights, Prop3Weights>;

struct JPolicy {
  std::optional<int> j_max;  // deepest simulated j, inclusive
};

/// Normalised w(j) = 2^{2j} phi(2^-j) / sum_i 2^{2i} phi(2^-i).
class Prop1WeightTable {
 public:
  explicit Prop1WeightTable(VariationFunctional phi);
  double operator()(int j) const;
  double normalizer() const { return normalizer_; }
  /// Largest j carrying weight (the series is summed this far for non-power phi).
  int j_limit() const { return j_limit_; }

 private:
  VariationFunctional phi_;
  double normalizer_ = 1.0;
  int j_limit_ = 0;
};

/// w_L(j) = (1 - 2^-eps) 2^{eps(2-L)} 2^{-eps j}, j >= 2 - L.
double prop3_depth_weight(double epsilon, int level, int j);
/// (1 - 2^-delta) 2^{-delta L}.
double prop3_level_weight(double delta, int level);
/// Exact total initial capital of the untruncated Prop-3 mixture.
double prop3_total_initial(double epsilon);

/// Dyadic Doob mixture. Prop1Weights: single level L = level_max, j >= 0.
/// Prop3Weights: levels 0..level_max, j >= 2 - L, scaled by 2^{1-L}.
/// Throws InadmissiblePhi, TruncationUnsafe.
StrategyMixture volatility_mixture(const VolatilityWeights& weights, int level_max, const JPolicy& policy,
                                   const PricePath* path_hint = nullptr);

/// Smallest positive gap between distinct sample values (0 for a constant path).
double min_value_gap(const PricePath& path);

struct Prop3Report {
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t n_steps = 0;
  int level = 0;
  double sup = 0.0;
  double var_p = 0.0;
  double s0 = 0.0;
  double s_final = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool holds = false;
};

double prop3_rhs(double epsilon, double delta, double var_p, double sup);

/// Runs the truncated Prop-3 mixture on w_N and compares S_T with the explicit bound.
Prop3Report evaluate_prop3_bound(const PricePath& path, double epsilon, double delta, std::size_t n_steps);
/// As evaluate_prop3_bound, but throws BoundViolated when S_T <= rhs.
Prop3Report verify_prop3_bound(const PricePath& path, double epsilon, double delta, std::size_t n_steps);

struct ClairvoyantResult {
  SimpleStrategy strategy;
  double achieved_factor = 1.0;
};

/// Full reinvestment before every up-move; requires strictly positive values.
ClairvoyantResult clairvoyant_strategy(const PricePath& path);

struct UpperProbForms {
  double from_total_variation = 1.0;  // sqrt(w(0)/w(T) e^{-var(ln w)})
  double from_plus_variation = 1.0;   // e^{-var+(ln w)}
};

UpperProbForms upper_prob_forms(const PricePath& path);
/// Upper probability of {w}; throws ZeroPrice, FormMismatch.
double upper_prob_singleton(const PricePath& path);

struct BorrowViolation {
  enum class Kind { NegativeInitialCapital, ShortPosition, NegativeCash };
  Kind kind = Kind::ShortPosition;
  std::size_t sample = 0;
  double position = 0.0;
  double cash = 0.0;
  std::size_t component = 0;
  /// Path agreeing with the input up to `sample` and adversarial afterwards.
  std::optional<PricePath> continuation;
  /// Capital of the strategy on the continuation, one sample after the violation.
  double adversarial_capital = 0.0;
};

struct BorrowReport {
  bool ok = true;
  std::optional<BorrowViolation> first_violation;
};

BorrowReport borrowing_free_check(const SimpleStrategy& strategy, const PricePath& path);
BorrowReport borrowing_free_check(const StrategyMixture& mixture, const PricePath& path);

/// Weights 2^-m on strategies that buy 1/w(0) units at time 0 and sell on
/// reaching 2^m. Members with 2^m <= w0_hint sell immediately and are folded
/// into the analytic tail; members beyond m_max are truncated.
StrategyMixture unboundedness_mixture(int m_max, double omega0_hint = 0.0);

struct CrossingInterval {
  double a = 0.0;
  double b = 1.0;
  double weight = 1.0;
};

/// Doob strategies capped at capital 1/w(a,b). Throws BadWeights, BadInterval.
StrategyMixture crossing_explosion_mixture(const std::vector<CrossingInterval>& intervals);

std::string_view to_string(BorrowViolation::Kind kind);

}  // namespace roughmarket
