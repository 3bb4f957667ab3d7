#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <random>

#include <fftw3.h>
#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "roughmarket/error.hpp"
#include "roughmarket/paths.hpp"

namespace roughmarket {

namespace fgn {

double autocovariance(std::size_t lag, double hurst) {
  const double k = static_cast<double>(lag);
  const double two_h = 2.0 * hurst;
  return 0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(std::abs(k - 1.0), two_h));
}

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

void transform(std::size_t n, FftwBuffer& buf, int sign) {
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf.data, buf.data, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

std::vector<double> sample_cholesky(std::size_t n, double hurst, std::mt19937_64& rng) {
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cov(i, j) = autocovariance(i > j ? i - j : j - i, hurst);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::BadSpec, "fGn covariance is not positive definite");
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < n; ++i) z(i) = normal(rng);
  Eigen::VectorXd x = llt.matrixL() * z;
  return std::vector<double>(x.data(), x.data() + n);
}

std::vector<double> sample_circulant(std::size_t n, double hurst, std::mt19937_64& rng) {
  std::size_t half = 1;
  while (half < n) half <<= 1;
  const std::size_t m = 2 * half;

  FftwBuffer buf(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t lag = k <= half ? k : m - k;
    buf.data[k][0] = autocovariance(lag, hurst);
    buf.data[k][1] = 0.0;
  }
  transform(m, buf, FFTW_FORWARD);

  std::vector<double> eigen(m);
  double largest = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    eigen[k] = buf.data[k][0];
    largest = std::max(largest, std::abs(eigen[k]));
  }
  for (double& e : eigen) {
    if (e < -1e-9 * largest) return sample_cholesky(n, hurst, rng);
    e = std::max(e, 0.0);
  }

  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < m; ++k) {
    const double scale = std::sqrt(eigen[k]);
    buf.data[k][0] = scale * normal(rng);
    buf.data[k][1] = scale * normal(rng);
  }
  transform(m, buf, FFTW_BACKWARD);

  const double norm = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = buf.data[k][0] * norm;
  return out;
}

std::vector<double> sample(std::size_t n, double hurst, std::mt19937_64& rng) {
  if (n >= kCirculantThreshold) return sample_circulant(n, hurst, rng);
  return sample_cholesky(n, hurst, rng);
}

}  // namespace fgn

namespace {

void check_spec(const GeneratorSpec& spec) {
  if (spec.kind != GeneratorKind::CustomSteps && spec.n_samples < 2) {
    throw Error(ErrorCode::BadSpec, "n_samples must be at least 2");
  }
  if (!(spec.horizon > 0.0)) throw Error(ErrorCode::BadSpec, "horizon must be positive");
  switch (spec.kind) {
    case GeneratorKind::ExpFractional:
      if (!(spec.hurst > 0.0 && spec.hurst < 1.0)) throw Error(ErrorCode::BadSpec, "Hurst index must lie in (0,1)");
      [[fallthrough]];
    case GeneratorKind::GeometricRandomWalk:
    case GeneratorKind::Jump:
      if (!(spec.x0 > 0.0)) throw Error(ErrorCode::BadSpec, "x0 must be positive for exponential generators");
      if (!(spec.sigma >= 0.0)) throw Error(ErrorCode::BadSpec, "sigma must be non-negative");
      if (!(spec.jump_intensity >= 0.0) || !(spec.jump_std >= 0.0)) {
        throw Error(ErrorCode::BadSpec, "jump intensity and jump std must be non-negative");
      }
      break;
    case GeneratorKind::CustomSteps:
      if (spec.steps.size() < 2) throw Error(ErrorCode::BadSpec, "custom-steps needs at least two values");
      break;
    default:
      break;
  }
}

}  // namespace

PricePath generate(const GeneratorSpec& spec) {
  check_spec(spec);
  const std::size_t n = spec.kind == GeneratorKind::CustomSteps ? spec.steps.size() : spec.n_samples;
  auto times = uniform_grid(n, spec.horizon);
  std::vector<double> values(n);
  std::mt19937_64 rng(spec.seed);
  const double dt = spec.horizon / static_cast<double>(n - 1);

  switch (spec.kind) {
    case GeneratorKind::Constant:
      std::fill(values.begin(), values.end(), spec.x0);
      break;
    case GeneratorKind::LinearDrift:
      for (std::size_t i = 0; i < n; ++i) values[i] = spec.x0 + spec.epsilon * times[i];
      break;
    case GeneratorKind::GeometricRandomWalk: {
      std::normal_distribution<double> normal;
      double log_x = std::log(spec.x0);
      values[0] = spec.x0;
      for (std::size_t i = 1; i < n; ++i) {
        log_x += spec.drift * dt + spec.sigma * std::sqrt(dt) * normal(rng);
        values[i] = std::exp(log_x);
      }
      break;
    }
    case GeneratorKind::ExpFractional: {
      const auto noise = fgn::sample(n - 1, spec.hurst, rng);
      const double scale = spec.sigma * std::pow(dt, spec.hurst);
      double level = 0.0;
      values[0] = spec.x0;
      for (std::size_t i = 1; i < n; ++i) {
        level += scale * noise[i - 1];
        values[i] = spec.x0 * std::exp(level);
      }
      break;
    }
    case GeneratorKind::Jump: {
      std::normal_distribution<double> normal;
      std::poisson_distribution<int> arrivals(spec.jump_intensity * dt);
      double log_x = std::log(spec.x0);
      values[0] = spec.x0;
      for (std::size_t i = 1; i < n; ++i) {
        log_x += spec.drift * dt + spec.sigma * std::sqrt(dt) * normal(rng);
        const int jumps = spec.jump_intensity > 0.0 ? arrivals(rng) : 0;
        for (int k = 0; k < jumps; ++k) log_x += spec.jump_mean + spec.jump_std * normal(rng);
        values[i] = std::exp(log_x);
      }
      break;
    }
    case GeneratorKind::CustomSteps:
      values = spec.steps;
      break;
  }
  return PricePath(std::move(times), std::move(values));
}

}  // namespace roughmarket
