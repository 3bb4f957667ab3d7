#include "check_error.hpp"
#include "doctest.h"
#include "roughmarket/experiment.hpp"

using namespace roughmarket;

namespace {

Json base_config(const char* experiment) {
  auto j = Json::parse(R"({
    "experiment": "",
    "generators": [{"kind": "exp-fractional", "n_samples": 65, "hurst": 0.4, "sigma": 0.6}],
    "seeds": {"first": 1, "count": 6}
  })");
  j["experiment"] = experiment;
  return j;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("generator spec JSON round trip") {
  GeneratorSpec s;
  s.kind = GeneratorKind::Jump;
  s.n_samples = 77;
  s.horizon = 2.5;
  s.seed = 123456789012345ULL;
  s.sigma = 0.3;
  s.jump_intensity = 4;
  s.jump_mean = -0.1;
  s.jump_std = 0.2;
  const auto back = generator_spec_from_json(to_json(s));
  CHECK(generate(back) == generate(s));
  CHECK(to_json(back) == to_json(s));

  CHECK_ERROR(generator_spec_from_json(Json{{"kind", "constant"}, {"colour", 1}}), ConfigError);
  CHECK_ERROR(generator_spec_from_json(Json{{"kind", "brownian"}}), ConfigError);
  CHECK_ERROR(generator_spec_from_json(Json{{"kind", "constant"}, {"n_samples", "many"}}), ConfigError);
  CHECK_ERROR(generator_spec_from_json(Json{{"n_samples", 3}}), ConfigError);

  const auto custom = generator_spec_from_json(Json{{"kind", "custom-steps"}, {"steps", {0, 1, 0, 1}}});
  CHECK(custom.n_samples == 4);
}

TEST_CASE("config validation") {
  auto empty = base_config("oracle-suite");
  empty["seeds"] = Json::array();
  CHECK_ERROR(experiment_config_from_json(empty), ConfigError);
  auto missing = base_config("oracle-suite");
  missing.erase("seeds");
  CHECK_ERROR(experiment_config_from_json(missing), ConfigError);
  CHECK_ERROR(experiment_config_from_json(base_config("magic-suite")), ConfigError);
  CHECK_ERROR(experiment_config_from_json(base_config("prop3-check")), ConfigError);
  auto extra = base_config("oracle-suite");
  extra["sedes"] = 1;
  CHECK_ERROR(experiment_config_from_json(extra), ConfigError);
}

TEST_CASE("oracle suite passes") {
  auto j = base_config("oracle-suite");
  j["generators"] = Json::array({Json{{"kind", "geometric-random-walk"}, {"n_samples", 12}, {"sigma", 0.5}},
                                 Json{{"kind", "exp-fractional"}, {"n_samples", 9}, {"hurst", 0.3}}});
  const auto report = run_experiment(experiment_config_from_json(j));
  CHECK(report.cases.size() == 12);
  CHECK(report.failed() == 0);
}

TEST_CASE("upper-prob table follows the closed form") {
  auto j = base_config("upper-prob-table");
  j["seeds"] = {0};
  j["generators"] = Json::array();
  for (double eps : {-1.0, -0.5, 0.5, 1.0}) {
    j["generators"].push_back({{"kind", "linear-drift"}, {"epsilon", eps}, {"n_samples", 50}, {"horizon", 0.5}});
  }
  const auto report = run_experiment(experiment_config_from_json(j));
  REQUIRE(report.cases.size() == 4);
  CHECK(report.failed() == 0);
  for (const auto& c : report.cases) {
    const double eps = c.inputs["epsilon"].get<double>();
    const double expect = eps > 0 ? 1.0 / (1.0 + eps * 0.5) : 1.0;
    CHECK(std::abs(c.outputs["upper_prob"].get<double>() - expect) <= 1e-12);
  }
  CHECK(report.series.at("upper_prob").points.size() == 4);
}

TEST_CASE("reports are deterministic") {
  auto j = base_config("prop3-check");
  j["epsilons"] = {0.5, 1.0};
  j["deltas"] = {1.0};
  j["n_grid"] = {16, 64};
  const auto cfg = experiment_config_from_json(j);
  auto a = run_experiment(cfg, 1);
  auto b = run_experiment(cfg, 3);
  a.wall_seconds.reset();
  b.wall_seconds.reset();
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.failed() == 0);
  CHECK(a.cases.size() == 24);
  for (std::size_t i = 1; i < a.cases.size(); ++i) CHECK(a.cases[i - 1].key < a.cases[i].key);
}

TEST_CASE("doob, prop1 and borrow suites") {
  for (const char* kind : {"doob-suite", "borrow-audit"}) {
    const auto report = run_experiment(experiment_config_from_json(base_config(kind)));
    CHECK(report.failed() == 0);
  }
  auto p1 = base_config("prop1-check");
  p1["p_grid"] = {2.5, 3.0};
  p1["j_max"] = 6;
  const auto report = run_experiment(experiment_config_from_json(p1));
  CHECK(report.cases.size() == 12);
  CHECK(report.failed() == 0);

  auto doob = base_config("doob-suite");
  doob["intervals"] = {{0.9, 1.0}, {1.0, 1.3}};
  CHECK(run_experiment(experiment_config_from_json(doob)).cases.size() == 12);
}

TEST_CASE("failing cases are reported, not thrown") {
  auto j = base_config("upper-prob-table");
  j["generators"] = Json::array({Json{{"kind", "custom-steps"}, {"steps", {1, 0, 1}}}});
  j["seeds"] = {0};
  const auto report = run_experiment(experiment_config_from_json(j));
  CHECK(report.failed() == 1);
  CHECK(report.cases[0].outputs["error_code"] == "ZeroPrice");
}

TEST_CASE("growth profile series and plot data") {
  auto j = base_config("growth-profile");
  j["generators"][0]["n_samples"] = 257;
  j["p_grid"] = {1.5, 2.5, 4.0};
  j["n_grid"] = {16, 64, 256};
  j["mesh_ladder"] = {0.5, 0.1, 0.02, 0.005};
  const auto report = run_experiment(experiment_config_from_json(j));
  CHECK(report.failed() == 0);
  for (const char* name : {"var_p=1.5", "var_p=2.5", "var_p=4"}) {
    const auto& pts = report.series.at(name).points;
    REQUIRE(pts.size() == 3);
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].second >= pts[i - 1].second);
  }
  const auto& q = report.series.at("qvar").points;
  for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i].second <= q[i - 1].second);

  const auto csv = emit_plot_data(report, "qvar");
  CHECK(csv.rfind("delta,qvar\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK_ERROR(emit_plot_data(report, "nope"), UnknownSeries);

  const auto back = report_from_json(report.to_json());
  CHECK(emit_plot_data(back, "var_p=2.5") == emit_plot_data(report, "var_p=2.5"));
  CHECK(back.to_json() == report.to_json());
}

}
