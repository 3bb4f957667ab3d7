#include <algorithm>
#include <cmath>
#include <random>

#include "roughmarket/error.hpp"
#include "roughmarket/strategies.hpp"
#include "summation.hpp"

namespace roughmarket {

double CapitalTrace::min_capital() const { return *std::min_element(capital.begin(), capital.end()); }

namespace {

constexpr std::int64_t kExpandGridLimit = 4096;

bool triggers(const StoppingRule& rule, double time, double price) {
  switch (rule.kind) {
    case StoppingRule::Kind::AtTime: return time >= rule.level;
    case StoppingRule::Kind::HitBelow: return price <= rule.level;
    case StoppingRule::Kind::HitAbove: return price >= rule.level;
  }
  return false;
}

double position_for(const PositionRule& rule, double capital, double price) {
  switch (rule.kind) {
    case PositionRule::Kind::Units: return rule.value;
    case PositionRule::Kind::CapitalFraction:
      return price > 0.0 ? rule.value * capital / price : rule.zero_price_units;
  }
  return 0.0;
}

CapitalTrace execute(const SimpleStrategy& strategy, const PricePath& path) {
  const auto x = path.values();
  const auto t = path.times();
  const std::size_t n = x.size();
  CapitalTrace trace;
  trace.capital.resize(n);
  trace.position.resize(n);
  trace.cash.resize(n);

  detail::Neumaier capital;
  capital.add(strategy.initial_capital);
  double held = 0.0;
  std::size_t next_rule = 0;
  bool stopped = false;
  const std::size_t rule_count = strategy.rules.size();

  for (std::size_t s = 0; s < n; ++s) {
    if (s > 0 && held != 0.0) capital.add(held * (x[s] - x[s - 1]));
    double k_now = capital.value();

    if (!stopped && strategy.capital_cap && k_now >= *strategy.capital_cap) {
      stopped = true;
      if (held != 0.0) {
        held = 0.0;
        trace.fired.push_back({s, Firing::kLiquidation, 0.0});
      }
    }
    while (!stopped && rule_count > 0 && (strategy.cyclic || next_rule < rule_count)) {
      const auto& rule = strategy.rules[next_rule % rule_count];
      if (!triggers(rule.when, t[s], x[s])) break;
      held = position_for(rule.position, k_now, x[s]);
      if (!std::isfinite(held)) throw Error(ErrorCode::BadSpec, "rule produced a non-finite position");
      trace.fired.push_back({s, next_rule % rule_count, held});
      ++next_rule;
      if (trace.fired.size() > n) {
        throw Error(ErrorCode::RuleOverflow, "more rule firings than samples in '" + strategy.descriptor + "'");
      }
    }
    trace.capital[s] = k_now;
    trace.position[s] = held;
    trace.cash[s] = k_now - held * x[s];
  }
  return trace;
}

}  // namespace

CapitalTrace run_simple(const SimpleStrategy& strategy, const PricePath& path, RunOptions options) {
  if (options.verify_adapted) check_adapted(strategy, path);
  return execute(strategy, path);
}

double telescoped_capital(const SimpleStrategy& strategy, const CapitalTrace& trace, const PricePath& path,
                          std::size_t sample) {
  const auto x = path.values();
  detail::Neumaier k;
  k.add(strategy.initial_capital);
  const auto& fired = trace.fired;
  for (std::size_t m = 0; m < fired.size(); ++m) {
    const std::size_t from = std::min(fired[m].sample, sample);
    const std::size_t to = m + 1 < fired.size() ? std::min(fired[m + 1].sample, sample) : sample;
    if (fired[m].position != 0.0 && to > from) k.add(fired[m].position * (x[to] - x[from]));
  }
  return k.value();
}

void check_adapted(const SimpleStrategy& strategy, const PricePath& path, std::uint64_t seed,
                   std::size_t cut_points) {
  const auto base = execute(strategy, path);
  const std::size_t n = path.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> factor(0.0, 3.0);
  for (std::size_t c = 0; c < cut_points; ++c) {
    const std::size_t cut = (c * (n - 1)) / std::max<std::size_t>(cut_points, 1);
    std::vector<double> values(path.values().begin(), path.values().end());
    for (std::size_t s = cut + 1; s < n; ++s) values[s] *= factor(rng);
    const auto other = execute(strategy, path.with_values(std::move(values)));
    for (std::size_t s = 0; s <= cut; ++s) {
      if (other.capital[s] != base.capital[s] || other.position[s] != base.position[s]) {
        throw Error(ErrorCode::NonAdapted, "'" + strategy.descriptor + "' depends on prices after sample " +
                                               std::to_string(cut));
      }
    }
  }
}

SimpleStrategy doob_strategy(double a, double b) {
  if (!(a >= 0.0) || !(a < b)) throw Error(ErrorCode::BadInterval, "need 0 <= a < b");
  SimpleStrategy g;
  g.initial_capital = a;
  g.rules = {{StoppingRule::hit_below(a), PositionRule::units(1.0)},
             {StoppingRule::hit_above(b), PositionRule::units(0.0)}};
  g.cyclic = true;
  g.descriptor = "doob(" + format_double(a) + "," + format_double(b) + ")";
  return g;
}

ClairvoyantResult clairvoyant_strategy(const PricePath& path) {
  const auto logs = path.log_values();  // throws ZeroPrice
  const auto x = path.values();
  const auto t = path.times();
  ClairvoyantResult out;
  out.strategy.initial_capital = 1.0;
  out.strategy.descriptor = "clairvoyant";
  detail::Neumaier log_gain;
  for (std::size_t s = 0; s + 1 < x.size(); ++s) {
    const bool up = x[s + 1] > x[s];
    out.strategy.rules.push_back(
        {StoppingRule::at_time(t[s]), up ? PositionRule::capital_fraction(1.0) : PositionRule::units(0.0)});
    if (up) log_gain.add(logs[s + 1] - logs[s]);
  }
  out.achieved_factor = std::exp(log_gain.value());
  return out;
}

UpperProbForms upper_prob_forms(const PricePath& path) {
  const auto logs = path.log_values();
  const auto sv = var_signed(logs);
  UpperProbForms forms;
  forms.from_total_variation = std::exp(0.5 * (logs.front() - logs.back() - sv.total));
  forms.from_plus_variation = std::exp(-sv.plus);
  return forms;
}

double upper_prob_singleton(const PricePath& path) {
  const auto forms = upper_prob_forms(path);
  const double a = forms.from_total_variation, b = forms.from_plus_variation;
  if (std::abs(a - b) > 1e-12 * std::max(std::abs(a), std::abs(b))) {
    throw Error(ErrorCode::FormMismatch, "closed forms disagree: " + format_double(a) + " vs " + format_double(b));
  }
  return a;
}

std::string_view to_string(BorrowViolation::Kind kind) {
  switch (kind) {
    case BorrowViolation::Kind::NegativeInitialCapital: return "negative-initial-capital";
    case BorrowViolation::Kind::ShortPosition: return "short-position";
    case BorrowViolation::Kind::NegativeCash: return "negative-cash";
  }
  return "?";
}

namespace {

// Full reinvestment leaves cash K - (K/w) w, which rounds to a few ulps either side of zero.
double cash_slack(double h, double price) { return 1e-12 * (1.0 + std::abs(h * price)); }

}  // namespace

BorrowReport borrowing_free_check(const SimpleStrategy& strategy, const PricePath& path) {
  BorrowReport report;
  if (strategy.initial_capital < 0.0) {
    BorrowViolation v;
    v.kind = BorrowViolation::Kind::NegativeInitialCapital;
    v.cash = strategy.initial_capital;
    v.adversarial_capital = strategy.initial_capital;
    report.ok = false;
    report.first_violation = std::move(v);
    return report;
  }
  const auto trace = execute(strategy, path);
  const auto x = path.values();
  const std::size_t n = x.size();
  // The position chosen at T is never held, so samples 0..n-2 cover (0, T].
  for (std::size_t s = 0; s + 1 < n; ++s) {
    const double h = trace.position[s];
    const double cash = trace.cash[s];
    if (h >= 0.0 && cash >= -cash_slack(h, x[s])) continue;

    BorrowViolation v;
    v.sample = s;
    v.position = h;
    v.cash = cash;
    std::vector<double> values(x.begin(), x.end());
    double adversarial_price = 0.0;
    if (h < 0.0) {
      // Price spike: K + h (X - w) = -1.
      v.kind = BorrowViolation::Kind::ShortPosition;
      adversarial_price = x[s] + (trace.capital[s] + 1.0) / (-h);
    } else {
      // Drop to zero: K - h w = cash < 0.
      v.kind = BorrowViolation::Kind::NegativeCash;
      adversarial_price = 0.0;
    }
    for (std::size_t r = s + 1; r < n; ++r) values[r] = adversarial_price;
    auto continuation = path.with_values(std::move(values));
    const auto rerun = execute(strategy, continuation);
    v.adversarial_capital = rerun.capital[s + 1];
    v.continuation = std::move(continuation);
    report.ok = false;
    report.first_violation = std::move(v);
    return report;
  }
  return report;
}

BorrowReport borrowing_free_check(const StrategyMixture& mixture, const PricePath& path) {
  std::size_t index = 0;
  for (const auto& c : mixture.components) {
    auto report = borrowing_free_check(c.strategy, path);
    if (!report.ok) {
      report.first_violation->component = index;
      return report;
    }
    ++index;
  }
  const auto x = path.values();
  for (const auto& g : mixture.grids) {
    if (g.spec.count <= kExpandGridLimit) {
      for (std::int64_t k = 0; k < g.spec.count; ++k, ++index) {
        const auto member = doob_strategy(static_cast<double>(k) * g.spec.step, static_cast<double>(k + 1) * g.spec.step);
        auto report = borrowing_free_check(member, path);
        if (!report.ok) {
          report.first_violation->component = index;
          return report;
        }
      }
      continue;
    }
    // Too many members to list: audit the grid's combined account.
    const auto agg = kernels::serial::doob_grid(x, g.spec);
    for (std::size_t s = 0; s + 1 < x.size(); ++s) {
      const double h = agg.position[s];
      const double cash = agg.capital[s] - h * x[s];
      if (h >= 0.0 && cash >= -cash_slack(h, x[s])) continue;
      BorrowViolation v;
      v.kind = h < 0.0 ? BorrowViolation::Kind::ShortPosition : BorrowViolation::Kind::NegativeCash;
      v.sample = s;
      v.position = h;
      v.cash = cash;
      v.component = index;
      std::vector<double> values(x.begin(), x.end());
      const double adversarial_price = h < 0.0 ? x[s] + (agg.capital[s] + 1.0) / (-h) : 0.0;
      for (std::size_t r = s + 1; r < x.size(); ++r) values[r] = adversarial_price;
      auto continuation = path.with_values(std::move(values));
      v.adversarial_capital = kernels::serial::doob_grid(continuation.values(), g.spec).capital[s + 1];
      v.continuation = std::move(continuation);
      return {false, std::move(v)};
    }
    index += static_cast<std::size_t>(g.spec.count);
  }
  return {};
}

}  // namespace roughmarket
