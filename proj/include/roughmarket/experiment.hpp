#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "roughmarket/config.hpp"
#include "roughmarket/strategies.hpp"

namespace roughmarket {

/// Slack for inequalities that hold exactly in real arithmetic.
double exact_tolerance(double rhs);

struct CaseRecord {
  std::string key;
  Json inputs = Json::object();
  Json outputs = Json::object();
  std::optional<double> margin;
  bool pass = false;

  Json to_json() const;
};

struct Series {
  std::string x_name;
  std::string y_name;
  std::vector<std::pair<double, double>> points;
};

struct RunReport {
  std::string experiment;
  Json config;
  std::vector<CaseRecord> cases;
  std::map<std::string, Series> series;
  std::optional<double> wall_seconds;

  std::size_t failed() const;
  Json to_json() const;
};

RunReport report_from_json(const Json& j);

/// Cases run concurrently on `jobs` threads (0 = OpenMP default); the report
/// lists them in case-key order regardless.
RunReport run_experiment(const ExperimentConfig& config, int jobs = 0);

/// "x,y" CSV with the series' column names as header. Throws UnknownSeries.
std::string emit_plot_data(const RunReport& report, std::string_view series);

// Single-case evaluators shared by the suites and the CLI. S_0, S_T, rhs and
// margin are recorded in `outputs`.
CaseRecord doob_case(const PricePath& path, double a, double b);
CaseRecord prop1_case(const PricePath& path, double p, int level, std::optional<int> j_max);
CaseRecord prop3_case(const PricePath& path, double epsilon, double delta, std::size_t n_steps);
/// `expected` is compared with the closed form when given.
CaseRecord upper_prob_case(const PricePath& path, std::optional<double> expected = std::nullopt);
CaseRecord unbounded_case(const PricePath& path, int m_max);
CaseRecord borrow_case(const SimpleStrategy& strategy, const PricePath& path, bool expect_violation = false);
CaseRecord borrow_case(const StrategyMixture& mixture, const PricePath& path);

/// Strategies seeded with a deliberate borrowing violation.
SimpleStrategy short_seller(double units = 1.0);
SimpleStrategy leveraged_buyer(double leverage = 2.0);

}  // namespace roughmarket
