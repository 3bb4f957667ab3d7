#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "roughmarket/config.hpp"
#include "roughmarket/error.hpp"
#include "roughmarket/experiment.hpp"
#include "roughmarket/strategies.hpp"
#include "roughmarket/variation.hpp"

namespace fs = std::filesystem;
using namespace roughmarket;

namespace {

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
  const char* env = std::getenv("ROUGHMARKET_LOG");
  if (env == nullptr) return LogLevel::Quiet;
  const std::string v = env;
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  return LogLevel::Quiet;
}

void log(LogLevel level, const std::string& msg) {
  if (level != LogLevel::Quiet && log_level() >= level) std::cerr << "roughmarket: " << msg << "\n";
}

struct Options {
  std::string config;
  std::string out;
  int jobs = 0;
  bool timing = false;
  std::string series;
};

struct Input {
  Json config;
  PricePath path;
  std::optional<std::uint64_t> seed;
  Json source;
};

// A command config names its path either as a CSV file or as a generator spec.
Input load_input(const Options& opt) {
  const Json cfg = load_json(opt.config);
  if (!cfg.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  if (cfg.contains("path")) {
    fs::path file = cfg["path"].get<std::string>();
    if (file.is_relative()) file = fs::path(opt.config).parent_path() / file;
    log(LogLevel::Debug, "reading " + file.string());
    return {cfg, read_path(file), std::nullopt, Json{{"path", cfg["path"]}}};
  }
  if (cfg.contains("generator")) {
    const auto spec = generator_spec_from_json(cfg["generator"]);
    return {cfg, generate(spec), spec.seed, Json{{"generator", to_json(spec)}}};
  }
  throw Error(ErrorCode::ConfigError, "config needs 'path' or 'generator'");
}

template <class T>
T param(const Json& cfg, const char* key) {
  if (!cfg.contains(key)) throw Error(ErrorCode::ConfigError, std::string("missing '") + key + "'");
  try {
    return cfg[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ConfigError, std::string("'") + key + "' has the wrong type");
  }
}

void emit(const Options& opt, const std::string& name, const std::string& text) {
  if (opt.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(opt.out);
  const auto file = fs::path(opt.out) / name;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + file.string());
  out << text;
  log(LogLevel::Info, "wrote " + file.string());
}

int emit_case(const Options& opt, const std::string& command, const Input& in, const CaseRecord& c, double seconds) {
  Json j;
  j["tool"] = "roughmarket";
  j["version"] = ROUGHMARKET_VERSION;
  j["command"] = command;
  Json inputs = in.source;
  inputs.update(c.inputs);
  j["inputs"] = inputs;
  j["seed"] = in.seed ? Json(*in.seed) : Json(nullptr);
  for (const char* key : {"S_0", "S_T", "rhs", "margin"}) j[key] = c.outputs.contains(key) ? c.outputs[key] : Json(nullptr);
  j["pass"] = c.pass;
  j["outputs"] = c.outputs;
  if (opt.timing) j["wall_seconds"] = seconds;
  emit(opt, command + ".json", j.dump(2) + "\n");
  return c.pass ? 0 : 1;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_generate(const Options& opt) {
  Json cfg = load_json(opt.config);
  if (cfg.contains("generator")) cfg = cfg["generator"];
  const auto path = generate(generator_spec_from_json(cfg));
  std::ostringstream out;
  write_path(path, out);
  emit(opt, "path.csv", out.str());
  return 0;
}

int cmd_variation(const Options& opt) {
  const auto in = load_input(opt);
  std::string csv = "p,value\n";
  for (double p : param<std::vector<double>>(in.config, "p_grid")) {
    csv += format_double(p) + "," + format_double(var_p(in.path, p)) + "\n";
  }
  emit(opt, "variation.csv", csv);
  return 0;
}

int cmd_crossings(const Options& opt) {
  const auto in = load_input(opt);
  std::string csv = "k,up,down\n";
  for (const auto& row : grid_crossing_table(in.path, param<double>(in.config, "h"))) {
    csv += std::to_string(row.k) + "," + std::to_string(row.count.up) + "," + std::to_string(row.count.down) + "\n";
  }
  emit(opt, "crossings.csv", csv);
  return 0;
}

int cmd_qvar(const Options& opt) {
  const auto in = load_input(opt);
  std::string csv = "delta,value\n";
  for (const auto& row : qvar_profile(in.path, param<std::vector<double>>(in.config, "deltas"))) {
    csv += format_double(row.delta) + "," + format_double(row.value) + "\n";
  }
  emit(opt, "qvar.csv", csv);
  return 0;
}

int cmd_doob(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto in = load_input(opt);
  const auto c = doob_case(in.path, param<double>(in.config, "a"), param<double>(in.config, "b"));
  return emit_case(opt, "doob", in, c, since(t0));
}

int cmd_prop3(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto in = load_input(opt);
  const auto c = prop3_case(in.path, param<double>(in.config, "epsilon"), param<double>(in.config, "delta"),
                            param<std::size_t>(in.config, "N"));
  return emit_case(opt, "prop3", in, c, since(t0));
}

int cmd_upper_prob(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto in = load_input(opt);
  std::optional<double> expected;
  if (in.config.contains("expected")) expected = param<double>(in.config, "expected");
  return emit_case(opt, "upper-prob", in, upper_prob_case(in.path, expected), since(t0));
}

int cmd_unbounded(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto in = load_input(opt);
  return emit_case(opt, "unbounded", in, unbounded_case(in.path, param<int>(in.config, "m_max")), since(t0));
}

int cmd_borrow_check(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto in = load_input(opt);
  const auto kind = param<std::string>(in.config, "strategy");
  const bool expect = in.config.value("expect_violation", false);
  std::optional<int> j_max;
  if (in.config.contains("j_max")) j_max = param<int>(in.config, "j_max");
  int level = 0;
  while (std::ldexp(1.0, level) < std::max(1.0, in.path.max_value())) ++level;

  CaseRecord c;
  if (kind == "doob") {
    c = borrow_case(doob_strategy(param<double>(in.config, "a"), param<double>(in.config, "b")), in.path, expect);
  } else if (kind == "short") {
    c = borrow_case(short_seller(in.config.value("units", 1.0)), in.path, expect);
  } else if (kind == "leveraged") {
    c = borrow_case(leveraged_buyer(in.config.value("leverage", 2.0)), in.path, expect);
  } else if (kind == "clairvoyant") {
    c = borrow_case(clairvoyant_strategy(in.path).strategy, in.path, expect);
  } else if (kind == "prop1") {
    const auto phi = VariationFunctional::power(in.config.value("p", 3.0));
    c = borrow_case(volatility_mixture(Prop1Weights{phi}, level, JPolicy{j_max}, &in.path), in.path);
  } else if (kind == "prop3") {
    const Prop3Weights w{in.config.value("epsilon", 1.0), in.config.value("delta", 1.0)};
    c = borrow_case(volatility_mixture(w, level, JPolicy{j_max}, &in.path), in.path);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown strategy '" + kind + "'");
  }
  return emit_case(opt, "borrow-check", in, c, since(t0));
}

int cmd_run(const Options& opt) {
  const auto config = load_experiment_config(opt.config);
  auto report = run_experiment(config, opt.jobs);
  if (!opt.timing) report.wall_seconds.reset();
  const auto failed = report.failed();
  log(LogLevel::Info, report.experiment + ": " + std::to_string(report.cases.size() - failed) + "/" +
                          std::to_string(report.cases.size()) + " cases passed");
  Options where = opt;
  if (where.out.empty() && !config.output.empty()) where.out = config.output;
  emit(where, report.experiment + ".json", report.to_json().dump(2) + "\n");
  if (failed > 0) {
    std::cerr << "roughmarket: " << to_string(ErrorCode::CaseFailure) << ": " << failed << " case(s) failed\n";
    return 1;
  }
  return 0;
}

int cmd_plot_data(const Options& opt) {
  const auto report = report_from_json(load_json(opt.config));
  emit(opt, opt.series + ".csv", emit_plot_data(report, opt.series));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pathwise volatility and trading-strategy experiments on price paths"};
  app.require_subcommand(1);
  Options opt;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"generate", "Generate a path from a generator spec", cmd_generate},
      {"variation", "var_p of a path for each p in p_grid (CSV p,value)", cmd_variation},
      {"crossings", "Per-interval crossing counts on the grid of step h (CSV k,up,down)", cmd_crossings},
      {"qvar", "Taylor-gauge variation over a mesh ladder (CSV delta,value)", cmd_qvar},
      {"doob", "Run the upcrossing strategy and check its bound", cmd_doob},
      {"prop3", "Check the volatility-mixture capital bound", cmd_prop3},
      {"upper-prob", "Upper probability of a single path", cmd_upper_prob},
      {"borrow-check", "Audit a strategy for short positions and negative cash", cmd_borrow_check},
      {"unbounded", "Run the mixture that profits on unbounded paths", cmd_unbounded},
      {"run", "Run an experiment suite from a config", cmd_run},
      {"plot-data", "Extract a two-column series from a run report", cmd_plot_data},
  };
  int (*chosen)(const Options&) = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "JSON config (plot-data: a run report)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory (default: stdout)");
    sub->add_option("--jobs", opt.jobs, "Worker threads (0 = all)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--timing", opt.timing, "Record wall time in reports");
    if (std::string(c.name) == "plot-data") sub->add_option("--series", opt.series, "Series name")->required();
    sub->callback([&chosen, run = c.run] { chosen = run; });
  }
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (opt.jobs > 0) omp_set_num_threads(opt.jobs);
#endif
  try {
    return chosen(opt);
  } catch (const Error& e) {
    std::cerr << "roughmarket: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "roughmarket: " << e.what() << "\n";
    return 2;
  }
}
