#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace roughmarket {

/// A sampled positive price trajectory, read as a right-continuous step
/// function: w(t) = values[i] on [times[i], times[i+1]), w(T) = values.back().
///
/// Instances are immutable once built and can be shared between threads.
class PricePath {
 public:
  /// Validating constructor; throws NonPositiveValue or BadTimeGrid.
  PricePath(std::vector<double> times, std::vector<double> values);

  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double horizon() const noexcept { return times_.back(); }

  double front() const noexcept { return values_.front(); }
  double back() const noexcept { return values_.back(); }
  double min_value() const;
  double max_value() const;

  /// Step-function evaluation at an arbitrary t in [0, T].
  double at(double t) const;

  /// Same time grid, new values (validated).
  PricePath with_values(std::vector<double> values) const;

  /// Elementwise natural log; throws ZeroPrice when a value is 0.
  std::vector<double> log_values() const;

  friend bool operator==(const PricePath&, const PricePath&) = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

PricePath make_path(std::vector<double> times, std::vector<double> values, double horizon);

/// Uniform grid i*T/(n-1), i = 0..n-1, with the last point pinned to T.
std::vector<double> uniform_grid(std::size_t n_samples, double horizon);

/// Convenience for tests and fixtures: values on a uniform grid over [0, T].
PricePath path_from_values(std::vector<double> values, double horizon = 1.0);

enum class GeneratorKind { Constant, LinearDrift, GeometricRandomWalk, ExpFractional, Jump, CustomSteps };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Constant;
  std::size_t n_samples = 2;
  double horizon = 1.0;
  std::uint64_t seed = 0;

  double x0 = 1.0;         // starting level (constant: the level)
  double epsilon = 0.0;    // linear-drift slope
  double sigma = 1.0;      // diffusion scale of the log price
  double drift = 0.0;      // geometric-random-walk drift of the log price
  double hurst = 0.5;      // exp-fractional
  double jump_intensity = 0.0;
  double jump_mean = 0.0;  // log-jump law: normal(jump_mean, jump_std)
  double jump_std = 0.0;
  std::vector<double> steps;  // custom-steps values
};

/// Deterministic in (spec, seed); throws BadSpec.
PricePath generate(const GeneratorSpec& spec);

/// w_N(t) = w((T/N) floor((N/T) t)) sampled at kT/N, k = 0..N.
PricePath discretize(const PricePath& path, std::size_t n_steps);

/// CSV with header "t,x" and shortest round-trip decimal formatting.
void write_path(const PricePath& path, std::ostream& out);
void write_path(const PricePath& path, const std::filesystem::path& file);
PricePath read_path(std::istream& in);
PricePath read_path(const std::filesystem::path& file);

std::string format_double(double value);

namespace fgn {

/// Unit-variance fractional Gaussian noise of length n. Circulant embedding
/// for n >= kCirculantThreshold, Cholesky below that.
std::vector<double> sample(std::size_t n, double hurst, std::mt19937_64& rng);

std::vector<double> sample_circulant(std::size_t n, double hurst, std::mt19937_64& rng);
std::vector<double> sample_cholesky(std::size_t n, double hurst, std::mt19937_64& rng);
double autocovariance(std::size_t lag, double hurst);
inline constexpr std::size_t kCirculantThreshold = 256;

}  // namespace fgn

}  // namespace roughmarket
