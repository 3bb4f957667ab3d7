#pragma once

// Hot loops in two flavours: a plain serial reference and an OpenMP version.
// Both must return identical results; tests and bench/ compare them.

#include <cstdint>
#include <span>
#include <vector>

#include "roughmarket/variation.hpp"

namespace roughmarket::kernels {

/// Capital and position of a uniform Doob family summed over its members,
/// per sample (positions are those held after the sample's trades).
struct GridAggregate {
  std::vector<double> capital;
  std::vector<double> position;
};

/// Members k = 0..count-1 trade (k*step, (k+1)*step) with initial capital k*step.
struct DoobGridSpec {
  double step = 1.0;
  std::int64_t count = 0;
  double member_weight = 1.0;
};

double doob_grid_initial(const DoobGridSpec& grid);

namespace serial {

double dp_variation(std::span<const double> values, const VariationFunctional& phi);
CrossingCount grid_crossings(std::span<const double> values, double h);
GridAggregate doob_grid(std::span<const double> values, const DoobGridSpec& grid);

}  // namespace serial

namespace parallel {

double dp_variation(std::span<const double> values, const VariationFunctional& phi);
CrossingCount grid_crossings(std::span<const double> values, double h);
/// Several grids at once, one per task.
std::vector<GridAggregate> doob_grids(std::span<const double> values,
                                      std::span<const DoobGridSpec> grids);

}  // namespace parallel

}  // namespace roughmarket::kernels
