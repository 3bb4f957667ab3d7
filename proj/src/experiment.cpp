#include "roughmarket/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "roughmarket/error.hpp"
#include "roughmarket/variation.hpp"

namespace roughmarket {

double exact_tolerance(double rhs) { return 1e-9 * (1.0 + std::abs(rhs)); }

Json CaseRecord::to_json() const {
  Json j;
  j["key"] = key;
  j["pass"] = pass;
  if (margin) j["margin"] = *margin;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  return j;
}

std::size_t RunReport::failed() const {
  return static_cast<std::size_t>(std::count_if(cases.begin(), cases.end(), [](const auto& c) { return !c.pass; }));
}

Json RunReport::to_json() const {
  Json j;
  j["tool"] = "roughmarket";
  j["version"] = ROUGHMARKET_VERSION;
  j["experiment"] = experiment;
  j["config"] = config;
  Json summary;
  summary["cases"] = cases.size();
  summary["passed"] = cases.size() - failed();
  summary["failed"] = failed();
  std::optional<double> worst;
  for (const auto& c : cases) {
    if (c.margin && (!worst || *c.margin < *worst)) worst = *c.margin;
  }
  if (worst) summary["min_margin"] = *worst;
  j["summary"] = summary;
  if (wall_seconds) j["wall_seconds"] = *wall_seconds;
  j["cases"] = Json::array();
  for (const auto& c : cases) j["cases"].push_back(c.to_json());
  j["series"] = Json::object();
  for (const auto& [name, s] : series) {
    Json points = Json::array();
    for (const auto& [x, y] : s.points) points.push_back({x, y});
    j["series"][name] = {{"x", s.x_name}, {"y", s.y_name}, {"points", points}};
  }
  return j;
}

RunReport report_from_json(const Json& j) {
  RunReport r;
  try {
    r.experiment = j.at("experiment").get<std::string>();
    r.config = j.value("config", Json::object());
    if (j.contains("wall_seconds")) r.wall_seconds = j["wall_seconds"].get<double>();
    for (const auto& c : j.at("cases")) {
      CaseRecord rec;
      rec.key = c.at("key").get<std::string>();
      rec.pass = c.at("pass").get<bool>();
      if (c.contains("margin")) rec.margin = c["margin"].get<double>();
      rec.inputs = c.value("inputs", Json::object());
      rec.outputs = c.value("outputs", Json::object());
      r.cases.push_back(std::move(rec));
    }
    const Json series = j.value("series", Json::object());
    for (const auto& [name, s] : series.items()) {
      Series out;
      out.x_name = s.at("x").get<std::string>();
      out.y_name = s.at("y").get<std::string>();
      for (const auto& p : s.at("points")) out.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      r.series.emplace(name, std::move(out));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("not a run report: ") + e.what());
  }
  return r;
}

std::string emit_plot_data(const RunReport& report, std::string_view name) {
  const auto it = report.series.find(std::string(name));
  if (it == report.series.end()) throw Error(ErrorCode::UnknownSeries, "no series '" + std::string(name) + "'");
  std::string out = it->second.x_name + "," + it->second.y_name + "\n";
  for (const auto& [x, y] : it->second.points) out += format_double(x) + "," + format_double(y) + "\n";
  return out;
}

namespace {

int level_for(const PricePath& path) {
  int level = 0;
  while (std::ldexp(1.0, level) < std::max(1.0, path.max_value())) ++level;
  return level;
}

void record(CaseRecord& c, double s0, double s_final, double rhs) {
  c.outputs["S_0"] = s0;
  c.outputs["S_T"] = s_final;
  c.outputs["rhs"] = rhs;
  c.margin = s_final - rhs;
  c.outputs["margin"] = *c.margin;
}

}  // namespace

CaseRecord doob_case(const PricePath& path, double a, double b) {
  CaseRecord c;
  c.inputs = {{"a", a}, {"b", b}, {"n_samples", path.size()}};
  const auto trace = run_simple(doob_strategy(a, b), path);
  const auto up = crossings(path, a, b).up;
  const double rhs = (b - a) * static_cast<double>(up);
  record(c, a, trace.final(), rhs);
  c.outputs["upcrossings"] = up;
  c.outputs["min_capital"] = trace.min_capital();
  c.pass = trace.min_capital() >= -exact_tolerance(a) && trace.final() >= rhs - exact_tolerance(rhs);
  return c;
}

CaseRecord prop1_case(const PricePath& path, double p, int level, std::optional<int> j_max) {
  CaseRecord c;
  const int L = std::max(level, level_for(path));
  c.inputs = {{"p", p}, {"level", L}, {"n_samples", path.size()}};
  if (j_max) c.inputs["j_max"] = *j_max;
  const auto phi = VariationFunctional::power(p);
  const auto mix = volatility_mixture(Prop1Weights{phi}, L, JPolicy{j_max}, &path);
  const auto run = run_mixture(mix, path);
  const Prop1WeightTable w(phi);
  double rhs = 0.0;
  int deepest = -1;
  for (const auto& g : mix.grids) {
    const auto up = grid_crossings(path, g.spec.step, Exec::Serial).up;
    rhs += w(g.depth) * std::ldexp(1.0, -L - 2 * g.depth) * static_cast<double>(up);
    deepest = std::max(deepest, g.depth);
  }
  record(c, run.initial_capital, run.trace.final(), rhs);
  c.outputs["deepest_j"] = deepest;
  c.outputs["truncated_initial"] = mix.truncated_initial;
  c.pass = run.trace.final() >= rhs - exact_tolerance(rhs);
  return c;
}

CaseRecord prop3_case(const PricePath& path, double epsilon, double delta, std::size_t n_steps) {
  CaseRecord c;
  c.inputs = {{"epsilon", epsilon}, {"delta", delta}, {"N", n_steps}};
  const auto r = evaluate_prop3_bound(path, epsilon, delta, n_steps);
  record(c, r.s0, r.s_final, r.rhs);
  c.outputs["level"] = r.level;
  c.outputs["sup"] = r.sup;
  c.outputs["var_p"] = r.var_p;
  c.pass = r.holds;
  return c;
}

CaseRecord upper_prob_case(const PricePath& path, std::optional<double> expected) {
  CaseRecord c;
  c.inputs = {{"omega_0", path.front()}, {"omega_T", path.back()}, {"n_samples", path.size()}};
  const auto forms = upper_prob_forms(path);
  c.outputs["from_total_variation"] = forms.from_total_variation;
  c.outputs["from_plus_variation"] = forms.from_plus_variation;
  const double price = upper_prob_singleton(path);
  c.outputs["upper_prob"] = price;
  // The clairvoyant strategy started from the price superhedges the indicator.
  const auto clairvoyant = clairvoyant_strategy(path);
  record(c, price, price * clairvoyant.achieved_factor, 1.0);
  c.pass = std::abs(*c.margin) <= 1e-9;
  if (expected) {
    c.inputs["expected"] = *expected;
    c.pass = c.pass && std::abs(price - *expected) <= 1e-12 * std::max(1.0, std::abs(*expected));
  }
  return c;
}

CaseRecord unbounded_case(const PricePath& path, int m_max) {
  CaseRecord c;
  c.inputs = {{"m_max", m_max}, {"omega_0", path.front()}, {"sup", path.max_value()}};
  const auto mix = unboundedness_mixture(m_max, path.front());
  const auto run = run_mixture(mix, path);
  // Every member that reaches 2^m cashes in at least 2^-m * 2^m / w(0).
  const double per_hit = path.front() > 0.0 ? 1.0 / path.front() : 1.0;
  double rhs = mix.analytic_tail_capital;
  int hits = 0;
  for (int m = 1; m <= m_max; ++m) {
    const double target = std::ldexp(1.0, m);
    if (target > path.front() && target <= path.max_value()) ++hits;
  }
  rhs += hits * per_hit;
  record(c, run.initial_capital, run.trace.final(), rhs);
  c.outputs["levels_reached"] = hits;
  c.outputs["min_capital"] = run.trace.min_capital();
  c.pass = run.trace.min_capital() >= 0.0 && run.trace.final() >= rhs - exact_tolerance(rhs);
  return c;
}

namespace {

void describe(CaseRecord& c, const BorrowReport& r) {
  c.outputs["borrowing_free"] = r.ok;
  if (!r.first_violation) return;
  const auto& v = *r.first_violation;
  c.outputs["violation"] = {{"kind", to_string(v.kind)},
                            {"sample", v.sample},
                            {"component", v.component},
                            {"position", v.position},
                            {"cash", v.cash},
                            {"adversarial_capital", v.adversarial_capital}};
}

}  // namespace

CaseRecord borrow_case(const SimpleStrategy& strategy, const PricePath& path, bool expect_violation) {
  CaseRecord c;
  c.inputs = {{"strategy", strategy.descriptor}, {"expect_violation", expect_violation}};
  const auto r = borrowing_free_check(strategy, path);
  describe(c, r);
  const auto trace = run_simple(strategy, path, RunOptions{false});
  if (expect_violation) {
    const double adversarial = r.first_violation ? r.first_violation->adversarial_capital : 0.0;
    record(c, strategy.initial_capital, adversarial, 0.0);
    c.pass = !r.ok && adversarial < 0.0;
  } else {
    record(c, strategy.initial_capital, trace.final(), 0.0);
    c.pass = r.ok;
  }
  return c;
}

CaseRecord borrow_case(const StrategyMixture& mixture, const PricePath& path) {
  CaseRecord c;
  c.inputs = {{"strategy", mixture.descriptor}, {"expect_violation", false}};
  const auto r = borrowing_free_check(mixture, path);
  describe(c, r);
  const auto run = run_mixture(mixture, path);
  record(c, run.initial_capital, run.trace.final(), 0.0);
  c.pass = r.ok;
  return c;
}

SimpleStrategy short_seller(double units) {
  SimpleStrategy g;
  g.initial_capital = 1.0;
  g.rules = {{StoppingRule::at_time(0.0), PositionRule::units(-units)}};
  g.descriptor = "short(" + format_double(units) + ")";
  return g;
}

SimpleStrategy leveraged_buyer(double leverage) {
  SimpleStrategy g;
  g.initial_capital = 1.0;
  g.rules = {{StoppingRule::at_time(0.0), PositionRule::capital_fraction(leverage, leverage)}};
  g.descriptor = "leveraged(" + format_double(leverage) + ")";
  return g;
}

namespace {

struct Task {
  std::string key;
  Json inputs;
  std::function<std::vector<CaseRecord>()> run;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<VariationFunctional> oracle_functionals(const std::vector<double>& extra_p) {
  std::vector<VariationFunctional> out;
  for (double p : {0.5, 1.0, 2.0, 2.5, 3.0}) out.push_back(VariationFunctional::power(p));
  out.push_back(VariationFunctional::taylor_psi());
  for (double p : extra_p) out.push_back(VariationFunctional::power(p));
  return out;
}

std::vector<CaseRecord> oracle_cases(const PricePath& path, const std::vector<double>& extra_p) {
  CaseRecord c;
  double worst = 0.0;
  Json rows = Json::array();
  for (const auto& phi : oracle_functionals(extra_p)) {
    const double dp = var_phi(path, phi, Exec::Serial);
    const double dp_parallel = var_phi(path, phi, Exec::Parallel);
    const double oracle = brute_force_var_phi(path, phi);
    const double err = std::abs(dp - oracle);
    const double rel = oracle != 0.0 ? err / std::abs(oracle) : (err == 0.0 ? 0.0 : INFINITY);
    worst = std::max(worst, rel);
    if (dp_parallel != dp) worst = INFINITY;
    rows.push_back({{"phi", phi.name()}, {"dp", dp}, {"oracle", oracle}, {"rel_err", rel}});
  }
  c.outputs["functionals"] = rows;
  c.outputs["max_rel_err"] = worst;
  c.margin = 1e-12 - worst;
  c.pass = worst <= 1e-12;
  return {c};
}

std::pair<double, double> random_interval(const PricePath& path, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double lo = path.min_value(), hi = path.max_value();
  const double span = hi - lo + 0.01 * hi + 1e-3;
  std::uniform_real_distribution<double> level(0.5 * lo, hi), width(0.02, 0.5);
  const double a = level(rng);
  return {a, a + width(rng) * span};
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config, int jobs) {
  const auto started = std::chrono::steady_clock::now();
  RunReport report;
  report.experiment = std::string(to_string(config.kind));
  report.config = config.source;

  std::vector<Task> tasks;
  for (std::size_t g = 0; g < config.generators.size(); ++g) {
    for (const auto seed : config.seeds) {
      auto spec = config.generators[g];
      spec.seed = seed;
      const std::string prefix = "g" + std::to_string(g) + "/seed=" + std::to_string(seed);
      const Json base = {{"generator", to_json(spec)}, {"seed", seed}};
      auto path = std::make_shared<PricePath>(generate(spec));
      auto add = [&](std::string suffix, std::function<std::vector<CaseRecord>()> fn) {
        tasks.push_back({prefix + suffix, base, std::move(fn)});
      };

      switch (config.kind) {
        case ExperimentKind::OracleSuite:
          add("", [path, p = config.p_grid] { return oracle_cases(*path, p); });
          break;
        case ExperimentKind::DoobSuite:
          if (config.intervals.empty()) {
            add("", [path, seed] {
              const auto [a, b] = random_interval(*path, seed);
              return std::vector{doob_case(*path, a, b)};
            });
          }
          for (const auto& [a, b] : config.intervals) {
            add("/a=" + format_double(a) + "/b=" + format_double(b),
                [path, a = a, b = b] { return std::vector{doob_case(*path, a, b)}; });
          }
          break;
        case ExperimentKind::Prop1Check:
          for (double p : config.p_grid) {
            add("/p=" + format_double(p), [path, p, L = config.level_max, jm = config.j_max] {
              return std::vector{prop1_case(*path, p, L, jm)};
            });
          }
          break;
        case ExperimentKind::Prop3Check:
          for (double eps : config.epsilons) {
            for (double delta : config.deltas) {
              for (auto n : config.n_grid) {
                add("/eps=" + format_double(eps) + "/delta=" + format_double(delta) + "/N=" + std::to_string(n),
                    [path, eps, delta, n] { return std::vector{prop3_case(*path, eps, delta, n)}; });
              }
            }
          }
          break;
        case ExperimentKind::UpperProbTable: {
          std::optional<double> expected;
          if (spec.kind == GeneratorKind::LinearDrift) {
            expected = spec.epsilon > 0.0 ? spec.x0 / (spec.x0 + spec.epsilon * spec.horizon) : 1.0;
          }
          add("", [path, expected, eps = spec.epsilon] {
            auto c = upper_prob_case(*path, expected);
            c.inputs["epsilon"] = eps;
            return std::vector{c};
          });
          break;
        }
        case ExperimentKind::GrowthProfile:
          add("", [path, &config] {
            CaseRecord c;
            const auto profile = variation_growth_profile(*path, config.p_grid, config.n_grid);
            c.pass = true;
            Json rows = Json::array();
            for (std::size_t i = 0; i < profile.n_grid.size(); ++i) {
              rows.push_back({{"N", profile.n_grid[i]}, {"var", profile.values[i]}});
              const bool nested = i > 0 && profile.n_grid[i] % profile.n_grid[i - 1] == 0;
              for (std::size_t k = 0; nested && k < profile.p_grid.size(); ++k) {
                if (profile.values[i][k] < profile.values[i - 1][k]) c.pass = false;
              }
            }
            c.outputs["growth"] = rows;
            if (!config.mesh_ladder.empty()) {
              const auto q = qvar_profile(*path, config.mesh_ladder);
              Json qrows = Json::array();
              for (std::size_t i = 0; i < q.size(); ++i) {
                qrows.push_back({{"delta", q[i].delta}, {"value", q[i].value}, {"finest_only", q[i].finest_only}});
                if (i > 0 && q[i].value > q[i - 1].value) c.pass = false;
              }
              c.outputs["qvar"] = qrows;
            }
            return std::vector{c};
          });
          break;
        case ExperimentKind::BorrowAudit:
          add("/doob", [path, seed] {
            const auto [a, b] = random_interval(*path, seed);
            return std::vector{borrow_case(doob_strategy(a, b), *path)};
          });
          add("/prop1", [path, jm = config.j_max] {
            const auto mix = volatility_mixture(Prop1Weights{VariationFunctional::power(3.0)}, level_for(*path),
                                                JPolicy{jm}, path.get());
            return std::vector{borrow_case(mix, *path)};
          });
          add("/prop3", [path, jm = config.j_max] {
            const auto mix = volatility_mixture(Prop3Weights{1.0, 1.0}, level_for(*path), JPolicy{jm}, path.get());
            return std::vector{borrow_case(mix, *path)};
          });
          if (path->min_value() > 0.0) {
            add("/clairvoyant", [path] { return std::vector{borrow_case(clairvoyant_strategy(*path).strategy, *path)}; });
          }
          add("/short", [path] { return std::vector{borrow_case(short_seller(), *path, true)}; });
          add("/leveraged", [path] { return std::vector{borrow_case(leveraged_buyer(), *path, true)}; });
          break;
      }
    }
  }
  std::sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) { return a.key < b.key; });

  std::vector<std::vector<CaseRecord>> results(tasks.size());
  const auto n_tasks = static_cast<std::int64_t>(tasks.size());
int threads = 1;
#ifdef _OPENMP
  threads = jobs > 0 ? jobs : omp_get_max_threads();
#else
  (void)jobs;
#endif
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t t = 0; t < n_tasks; ++t) {
    auto& task = tasks[static_cast<std::size_t>(t)];
    try {
      results[static_cast<std::size_t>(t)] = task.run();
    } catch (const std::exception& e) {
      CaseRecord failed;
      failed.outputs["error"] = e.what();
      if (const auto* err = dynamic_cast<const Error*>(&e)) failed.outputs["error_code"] = to_string(err->code());
      results[static_cast<std::size_t>(t)] = {failed};
    }
  }

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (auto& c : results[t]) {
      c.key = tasks[t].key;
      Json inputs = tasks[t].inputs;
      inputs.update(c.inputs);
      c.inputs = std::move(inputs);
      report.cases.push_back(std::move(c));
    }
  }

  if (config.kind == ExperimentKind::GrowthProfile) {
    for (std::size_t k = 0; k < config.p_grid.size(); ++k) {
      Series s{"N", "var_" + format_double(config.p_grid[k]), {}};
      for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
        std::vector<double> column;
        for (const auto& c : report.cases) {
          if (c.outputs.contains("growth")) column.push_back(c.outputs["growth"][i]["var"][k].get<double>());
        }
        if (!column.empty()) s.points.emplace_back(static_cast<double>(config.n_grid[i]), median(column));
      }
      report.series.emplace("var_p=" + format_double(config.p_grid[k]), std::move(s));
    }
    if (!config.mesh_ladder.empty()) {
      Series s{"delta", "qvar", {}};
      for (std::size_t i = 0; i < config.mesh_ladder.size(); ++i) {
        std::vector<double> column;
        for (const auto& c : report.cases) {
          if (c.outputs.contains("qvar")) column.push_back(c.outputs["qvar"][i]["value"].get<double>());
        }
        if (!column.empty()) s.points.emplace_back(config.mesh_ladder[i], median(column));
      }
      report.series.emplace("qvar", std::move(s));
    }
  } else if (config.kind == ExperimentKind::UpperProbTable) {
    Series s{"epsilon", "upper_prob", {}};
    for (const auto& c : report.cases) {
      if (c.outputs.contains("upper_prob")) {
        s.points.emplace_back(c.inputs["epsilon"].get<double>(), c.outputs["upper_prob"].get<double>());
      }
    }
    report.series.emplace("upper_prob", std::move(s));
  } else if (config.kind == ExperimentKind::Prop3Check) {
    Series s{"case", "margin", {}};
    for (std::size_t i = 0; i < report.cases.size(); ++i) {
      if (report.cases[i].margin) s.points.emplace_back(static_cast<double>(i), *report.cases[i].margin);
    }
    report.series.emplace("margin", std::move(s));
  }

  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
  report.wall_seconds = elapsed.count();
  return report;
}

}  // namespace roughmarket
