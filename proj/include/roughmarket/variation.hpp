#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roughmarket/paths.hpp"

namespace roughmarket {

/// 1 v |ln u| (natural log).
double log_star(double u);
/// 1 v |log2 u|.
double binary_log_star(double u);
/// Taylor's gauge u^2 / (2 ln* ln* u), with psi(0) = 0.
double taylor_psi(double u);

/// A gauge phi on [0, inf) with phi(0) = 0, used for phi-variation.
class VariationFunctional {
 public:
  enum class Kind { Power, TaylorPsi, Table, Custom };
  enum class Interpolation { Linear, LogLog };

  static VariationFunctional power(double p);
  static VariationFunctional taylor_psi();
  /// Tabulated (u, phi(u)) with u > 0 strictly increasing and phi >= 0.
  static VariationFunctional table(std::vector<std::pair<double, double>> points,
                                   Interpolation rule = Interpolation::Linear);
  static VariationFunctional custom(std::function<double(double)> fn, std::string name);

  double operator()(double u) const;

  Kind kind() const noexcept { return kind_; }
  /// Exponent for Kind::Power, 0 otherwise.
  double exponent() const noexcept { return p_; }
  /// Finest partition is optimal (power with p <= 1).
  bool subadditive() const noexcept { return kind_ == Kind::Power && p_ <= 1.0; }
  std::string name() const;

 private:
  VariationFunctional() = default;
  double table_eval(double u) const;

  Kind kind_ = Kind::Power;
  double p_ = 1.0;
  enum class PowerShape { General, Integer, HalfInteger } shape_ = PowerShape::General;
  int whole_ = 0;
  std::vector<std::pair<double, double>> points_;
  Interpolation rule_ = Interpolation::Linear;
  std::function<double(double)> fn_;
  std::string name_;
};

enum class Exec { Serial, Parallel };

/// Exact sup over partitions of sum phi(|increments|) on the step path.
double var_phi(std::span<const double> values, const VariationFunctional& phi,
               Exec exec = Exec::Parallel);
double var_phi(const PricePath& path, const VariationFunctional& phi, Exec exec = Exec::Parallel);
inline double var_p(const PricePath& path, double p) {
  return var_phi(path, VariationFunctional::power(p));
}

/// Exhaustive enumeration over all partitions; at most 20 samples.
double brute_force_var_phi(std::span<const double> values, const VariationFunctional& phi);
double brute_force_var_phi(const PricePath& path, const VariationFunctional& phi);
inline constexpr std::size_t kBruteForceMaxSamples = 20;

struct SignedVariation {
  double total = 0.0;
  double plus = 0.0;
  double minus = 0.0;
};

SignedVariation var_signed(std::span<const double> values);
SignedVariation var_signed(const PricePath& path);

struct CrossingCount {
  std::uint64_t up = 0;
  std::uint64_t down = 0;
  friend bool operator==(const CrossingCount&, const CrossingCount&) = default;
};

/// Completed passages from <= a to >= b (up) and back (down).
CrossingCount crossings(std::span<const double> values, double a, double b);
CrossingCount crossings(const PricePath& path, double a, double b);

/// Sum of crossings over the intervals (kh, (k+1)h), k >= 0.
CrossingCount grid_crossings(std::span<const double> values, double h, Exec exec = Exec::Parallel);
CrossingCount grid_crossings(const PricePath& path, double h, Exec exec = Exec::Parallel);

struct GridCrossingRow {
  std::int64_t k = 0;
  CrossingCount count;
};

/// Per-interval rows with nonzero counts, ascending k.
std::vector<GridCrossingRow> grid_crossing_table(const PricePath& path, double h);

struct AdmissibilityReport {
  double ratio_sup_estimate = 0.0;  // sup phi(s)/phi(t), t <= s <= 2t, over a log grid
  double partial_sum = 0.0;         // sum_{j <= j_max} 2^{2j} phi(2^-j)
  double tail_fraction = 0.0;       // share of the partial sum from j in (j_max/2, j_max]
  double last_term_fraction = 0.0;  // last term / partial sum
  bool ratio_bounded = false;
  bool series_converges = false;
  bool admissible = false;
};

AdmissibilityReport phi_admissible(const VariationFunctional& phi, int j_max = 64);

struct QvarRow {
  double delta = 0.0;
  double value = 0.0;
  bool finest_only = false;  // delta <= every sample spacing
};

/// sup of sum psi(|increments|) over partitions with mesh < delta, per delta.
std::vector<QvarRow> qvar_profile(const PricePath& path, std::span<const double> deltas,
                                  const VariationFunctional& gauge = VariationFunctional::taylor_psi());

struct GrowthProfile {
  std::vector<double> p_grid;
  std::vector<std::size_t> n_grid;
  std::vector<std::vector<double>> values;  // values[n_index][p_index]
};

GrowthProfile variation_growth_profile(const PricePath& path, std::span<const double> p_grid,
                                       std::span<const std::size_t> n_grid);

}  // namespace roughmarket
