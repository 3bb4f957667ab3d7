#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "roughmarket/paths.hpp"

namespace roughmarket {

using Json = nlohmann::ordered_json;

std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(std::string_view name);

/// Throws ConfigError on unknown keys or wrong types; BadSpec checks happen in generate().
GeneratorSpec generator_spec_from_json(const Json& j);
Json to_json(const GeneratorSpec& spec);

enum class ExperimentKind { OracleSuite, DoobSuite, Prop1Check, Prop3Check, UpperProbTable, GrowthProfile, BorrowAudit };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::OracleSuite;
  std::vector<GeneratorSpec> generators;
  std::vector<std::uint64_t> seeds;

  std::vector<double> p_grid;
  std::vector<double> epsilons;
  std::vector<double> deltas;
  std::vector<std::size_t> n_grid;
  std::vector<double> mesh_ladder;
  std::vector<std::pair<double, double>> intervals;
  int level_max = 0;
  std::optional<int> j_max;
  std::string output;

  Json source;  // echoed verbatim into the report
};

/// Throws ConfigError.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& file);

Json load_json(const std::filesystem::path& file);

}  // namespace roughmarket
