#include "roughmarket/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "summation.hpp"

namespace roughmarket::kernels {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Running best for best[i] = max_j best[j] + phi(|x_i - x_j|). Values are kept
// as unevaluated (hi, lo) pairs; ties keep the smallest j.
struct Candidate {
  double hi = kNegInf;
  double lo = 0.0;
  std::size_t j = 0;

  double value() const { return hi + lo; }
  bool beats(const Candidate& other) const {
    const double v = value(), w = other.value();
    return v > w || (v == w && j < other.j);
  }
};

inline Candidate candidate(const double* hi, const double* lo, std::span<const double> x, std::size_t i,
                           std::size_t j, const VariationFunctional& phi) {
  auto [s, e] = detail::two_sum(hi[j], phi(std::abs(x[i] - x[j])));
  return {s, lo[j] + e, j};
}

std::pair<std::int64_t, std::int64_t> relevant_levels(std::span<const double> x, double h) {
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const auto k_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(*mn / h)) - 1);
  const auto k_hi = static_cast<std::int64_t>(std::ceil(*mx / h)) + 1;
  return {k_lo, k_hi};
}

CrossingCount count_one(std::span<const double> x, double a, double b) {
  bool low = false, high = false;
  CrossingCount c;
  for (double v : x) {
    if (v <= a) {
      if (high) ++c.down;
      low = true;
      high = false;
    } else if (v >= b) {
      if (low) ++c.up;
      high = true;
      low = false;
    }
  }
  return c;
}

// Smallest k in [0, count] with x <= k*step (count when none).
std::int64_t first_at_or_above(double x, double step, std::int64_t count) {
  const double q = std::ceil(x / step);
  std::int64_t k = q >= static_cast<double>(count) ? count : std::max<std::int64_t>(0, static_cast<std::int64_t>(q));
  while (k > 0 && x <= static_cast<double>(k - 1) * step) --k;
  while (k < count && !(x <= static_cast<double>(k) * step)) ++k;
  return k;
}

// Number of k in [0, count) with (k+1)*step <= x.
std::int64_t count_below(double x, double step, std::int64_t count) {
  const double q = std::floor(x / step);
  std::int64_t f = q >= static_cast<double>(count) ? count : std::max<std::int64_t>(0, static_cast<std::int64_t>(q));
  while (f > 0 && !(static_cast<double>(f) * step <= x)) --f;
  while (f < count && static_cast<double>(f + 1) * step <= x) ++f;
  return f;
}

}  // namespace

double doob_grid_initial(const DoobGridSpec& grid) {
  const double k = static_cast<double>(grid.count);
  return grid.member_weight * grid.step * (k * (k - 1.0) / 2.0);
}

namespace serial {

double dp_variation(std::span<const double> x, const VariationFunctional& phi) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  std::vector<double> hi(n, 0.0), lo(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    Candidate best;
    for (std::size_t j = 0; j < i; ++j) {
      const auto c = candidate(hi.data(), lo.data(), x, i, j, phi);
      if (c.beats(best)) best = c;
    }
    hi[i] = best.hi;
    lo[i] = best.lo;
  }
  return hi[n - 1] + lo[n - 1];
}

CrossingCount grid_crossings(std::span<const double> x, double h) {
  const auto [k_lo, k_hi] = relevant_levels(x, h);
  CrossingCount total;
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const auto c = count_one(x, static_cast<double>(k) * h, static_cast<double>(k + 1) * h);
    total.up += c.up;
    total.down += c.down;
  }
  return total;
}

GridAggregate doob_grid(std::span<const double> x, const DoobGridSpec& grid) {
  const std::size_t n = x.size();
  const std::int64_t count = grid.count;
  const double step = grid.step;
  GridAggregate out;
  out.capital.resize(n);
  out.position.resize(n);

  // Members k >= threshold hold one unit, plus the listed exceptions below it.
  std::int64_t threshold = count;
  std::vector<std::int64_t> exceptions, next;
  detail::Neumaier gains;
  const double initial = doob_grid_initial(grid);
  std::int64_t holding = 0;

  for (std::size_t s = 0; s < n; ++s) {
    if (s > 0) gains.add(static_cast<double>(holding) * (x[s] - x[s - 1]));

    const std::int64_t buy_from = first_at_or_above(x[s], step, count);  // x <= a_k
    const std::int64_t sell_below = count_below(x[s], step, count);      // x >= b_k
    next.clear();
    for (std::int64_t k = sell_below; k < buy_from; ++k) {
      const bool held = k >= threshold || std::find(exceptions.begin(), exceptions.end(), k) != exceptions.end();
      if (held) next.push_back(k);
    }
    exceptions.swap(next);
    threshold = buy_from;
    holding = (count - threshold) + static_cast<std::int64_t>(exceptions.size());

    out.capital[s] = initial + grid.member_weight * gains.value();
    out.position[s] = grid.member_weight * static_cast<double>(holding);
  }
  return out;
}

}  // namespace serial

namespace parallel {

namespace {
constexpr std::size_t kSerialCutoff = 512;
}

double dp_variation(std::span<const double> x, const VariationFunctional& phi) {
  const std::size_t n = x.size();
  if (n < kSerialCutoff) return serial::dp_variation(x, phi);
  std::vector<double> hi(n, 0.0), lo(n, 0.0);
#ifdef _OPENMP
  std::vector<Candidate> per_thread(static_cast<std::size_t>(omp_get_max_threads()));
#pragma omp parallel
  {
    const auto tid = static_cast<std::size_t>(omp_get_thread_num());
    const auto nthreads = static_cast<std::size_t>(omp_get_num_threads());
    for (std::size_t i = 1; i < n; ++i) {
      Candidate local;
#pragma omp for schedule(static) nowait
      for (std::size_t j = 0; j < i; ++j) {
        const auto c = candidate(hi.data(), lo.data(), x, i, j, phi);
        if (c.beats(local)) local = c;
      }
      per_thread[tid] = local;
#pragma omp barrier
#pragma omp single
      {
        Candidate best;
        for (std::size_t t = 0; t < nthreads; ++t) {
          if (per_thread[t].beats(best)) best = per_thread[t];
        }
        hi[i] = best.hi;
        lo[i] = best.lo;
      }
    }
  }
  return hi[n - 1] + lo[n - 1];
#else
  return serial::dp_variation(x, phi);
#endif
}

CrossingCount grid_crossings(std::span<const double> x, double h) {
  const auto [k_lo, k_hi] = relevant_levels(x, h);
  std::uint64_t up = 0, down = 0;
#pragma omp parallel for reduction(+ : up, down) schedule(static)
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const auto c = count_one(x, static_cast<double>(k) * h, static_cast<double>(k + 1) * h);
    up += c.up;
    down += c.down;
  }
  return {up, down};
}

std::vector<GridAggregate> doob_grids(std::span<const double> x, std::span<const DoobGridSpec> grids) {
  std::vector<GridAggregate> out(grids.size());
  const auto m = static_cast<std::int64_t>(grids.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t g = 0; g < m; ++g) {
    out[static_cast<std::size_t>(g)] = serial::doob_grid(x, grids[static_cast<std::size_t>(g)]);
  }
  return out;
}

}  // namespace parallel

}  // namespace roughmarket::kernels
