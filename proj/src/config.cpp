#include "roughmarket/config.hpp"

#include <array>
#include <fstream>
#include <set>

#include "roughmarket/error.hpp"

namespace roughmarket {

namespace {

constexpr std::array<std::pair<GeneratorKind, std::string_view>, 6> kGeneratorNames{{
    {GeneratorKind::Constant, "constant"},
    {GeneratorKind::LinearDrift, "linear-drift"},
    {GeneratorKind::GeometricRandomWalk, "geometric-random-walk"},
    {GeneratorKind::ExpFractional, "exp-fractional"},
    {GeneratorKind::Jump, "jump"},
    {GeneratorKind::CustomSteps, "custom-steps"},
}};

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 7> kExperimentNames{{
    {ExperimentKind::OracleSuite, "oracle-suite"},
    {ExperimentKind::DoobSuite, "doob-suite"},
    {ExperimentKind::Prop1Check, "prop1-check"},
    {ExperimentKind::Prop3Check, "prop3-check"},
    {ExperimentKind::UpperProbTable, "upper-prob-table"},
    {ExperimentKind::GrowthProfile, "growth-profile"},
    {ExperimentKind::BorrowAudit, "borrow-audit"},
}};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void require_object(const Json& j, std::string_view what, const std::set<std::string>& allowed) {
  if (!j.is_object()) config_error(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + std::string(what));
  }
}

template <class T>
T get(const Json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(std::string("key '") + key + "' has the wrong type");
  }
}

template <class T>
std::vector<T> get_list(const Json& j, const char* key) {
  return get<std::vector<T>>(j, key, {});
}

}  // namespace

std::string_view to_string(GeneratorKind kind) {
  for (const auto& [k, name] : kGeneratorNames) {
    if (k == kind) return name;
  }
  return "?";
}

GeneratorKind generator_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kGeneratorNames) {
    if (n == name) return k;
  }
  config_error("unknown generator kind '" + std::string(name) + "'");
}

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == kind) return name;
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kExperimentNames) {
    if (n == name) return k;
  }
  config_error("unknown experiment '" + std::string(name) + "'");
}

GeneratorSpec generator_spec_from_json(const Json& j) {
  require_object(j, "generator",
                 {"kind", "n_samples", "horizon", "seed", "x0", "epsilon", "sigma", "drift", "hurst",
                  "jump_intensity", "jump_mean", "jump_std", "steps"});
  if (!j.contains("kind")) config_error("generator needs a 'kind'");
  GeneratorSpec s;
  s.kind = generator_kind_from_string(get<std::string>(j, "kind", ""));
  s.n_samples = get<std::size_t>(j, "n_samples", s.n_samples);
  s.horizon = get<double>(j, "horizon", s.horizon);
  s.seed = get<std::uint64_t>(j, "seed", s.seed);
  s.x0 = get<double>(j, "x0", s.x0);
  s.epsilon = get<double>(j, "epsilon", s.epsilon);
  s.sigma = get<double>(j, "sigma", s.sigma);
  s.drift = get<double>(j, "drift", s.drift);
  s.hurst = get<double>(j, "hurst", s.hurst);
  s.jump_intensity = get<double>(j, "jump_intensity", s.jump_intensity);
  s.jump_mean = get<double>(j, "jump_mean", s.jump_mean);
  s.jump_std = get<double>(j, "jump_std", s.jump_std);
  s.steps = get_list<double>(j, "steps");
  if (s.kind == GeneratorKind::CustomSteps && !j.contains("n_samples")) s.n_samples = s.steps.size();
  return s;
}

Json to_json(const GeneratorSpec& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["n_samples"] = s.n_samples;
  j["horizon"] = s.horizon;
  j["seed"] = s.seed;
  switch (s.kind) {
    case GeneratorKind::Constant: j["x0"] = s.x0; break;
    case GeneratorKind::LinearDrift:
      j["x0"] = s.x0;
      j["epsilon"] = s.epsilon;
      break;
    case GeneratorKind::GeometricRandomWalk:
      j["x0"] = s.x0;
      j["sigma"] = s.sigma;
      j["drift"] = s.drift;
      break;
    case GeneratorKind::ExpFractional:
      j["x0"] = s.x0;
      j["sigma"] = s.sigma;
      j["hurst"] = s.hurst;
      break;
    case GeneratorKind::Jump:
      j["x0"] = s.x0;
      j["sigma"] = s.sigma;
      j["drift"] = s.drift;
      j["jump_intensity"] = s.jump_intensity;
      j["jump_mean"] = s.jump_mean;
      j["jump_std"] = s.jump_std;
      break;
    case GeneratorKind::CustomSteps: j["steps"] = s.steps; break;
  }
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  require_object(j, "experiment config",
                 {"experiment", "generator", "generators", "seeds", "p_grid", "epsilons", "deltas", "n_grid",
                  "mesh_ladder", "intervals", "level_max", "j_max", "output"});
  ExperimentConfig c;
  c.source = j;
  if (!j.contains("experiment")) config_error("missing 'experiment'");
  c.kind = experiment_kind_from_string(get<std::string>(j, "experiment", ""));

  if (j.contains("generator")) c.generators.push_back(generator_spec_from_json(j["generator"]));
  if (j.contains("generators")) {
    if (!j["generators"].is_array()) config_error("'generators' must be an array");
    for (const auto& g : j["generators"]) c.generators.push_back(generator_spec_from_json(g));
  }
  if (c.generators.empty()) config_error("no generator given");

  const auto seeds = j.find("seeds");
  if (seeds == j.end()) config_error("'seeds' is required");
  if (seeds->is_object()) {
    require_object(*seeds, "seeds", {"first", "count"});
    const auto first = get<std::uint64_t>(*seeds, "first", 0);
    const auto count = get<std::uint64_t>(*seeds, "count", 0);
    for (std::uint64_t i = 0; i < count; ++i) c.seeds.push_back(first + i);
  } else {
    c.seeds = get_list<std::uint64_t>(j, "seeds");
  }
  if (c.seeds.empty()) config_error("seed set is empty");

  c.p_grid = get_list<double>(j, "p_grid");
  c.epsilons = get_list<double>(j, "epsilons");
  c.deltas = get_list<double>(j, "deltas");
  c.n_grid = get_list<std::size_t>(j, "n_grid");
  c.mesh_ladder = get_list<double>(j, "mesh_ladder");
  for (const auto& iv : get<std::vector<std::vector<double>>>(j, "intervals", {})) {
    if (iv.size() != 2) config_error("intervals are [a, b] pairs");
    c.intervals.emplace_back(iv[0], iv[1]);
  }
  c.level_max = get<int>(j, "level_max", 0);
  if (j.contains("j_max")) c.j_max = get<int>(j, "j_max", 0);
  c.output = get<std::string>(j, "output", "");

  using K = ExperimentKind;
  if (c.kind == K::Prop3Check && (c.epsilons.empty() || c.deltas.empty() || c.n_grid.empty())) {
    config_error("prop3-check needs epsilons, deltas and n_grid");
  }
  if (c.kind == K::Prop1Check && c.p_grid.empty()) config_error("prop1-check needs p_grid");
  if (c.kind == K::GrowthProfile && (c.p_grid.empty() || c.n_grid.empty())) {
    config_error("growth-profile needs p_grid and n_grid");
  }
  return c;
}

Json load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) config_error("cannot open " + file.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    config_error(file.string() + ": " + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  return experiment_config_from_json(load_json(file));
}

}  // namespace roughmarket
