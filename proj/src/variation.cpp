#include "roughmarket/variation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roughmarket/error.hpp"
#include "roughmarket/kernels.hpp"
#include "summation.hpp"

namespace roughmarket {

double log_star(double u) { return std::max(1.0, std::abs(std::log(u))); }
double binary_log_star(double u) { return std::max(1.0, std::abs(std::log2(u))); }

double taylor_psi(double u) {
  if (u == 0.0) return 0.0;
  return u * u / (2.0 * log_star(log_star(u)));
}

VariationFunctional VariationFunctional::power(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorCode::BadSpec, "power exponent must be positive");
  VariationFunctional f;
  f.kind_ = Kind::Power;
  f.p_ = p;
  const double twice = 2.0 * p;
  if (p == std::floor(p) && p <= 16.0) {
    f.shape_ = PowerShape::Integer;
    f.whole_ = static_cast<int>(p);
  } else if (twice == std::floor(twice) && p <= 16.0) {
    f.shape_ = PowerShape::HalfInteger;
    f.whole_ = static_cast<int>(std::floor(p));
  }
  return f;
}

VariationFunctional VariationFunctional::taylor_psi() {
  VariationFunctional f;
  f.kind_ = Kind::TaylorPsi;
  f.p_ = 0.0;
  return f;
}

VariationFunctional VariationFunctional::table(std::vector<std::pair<double, double>> points, Interpolation rule) {
  if (points.empty()) throw Error(ErrorCode::BadSpec, "table functional needs at least one point");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [u, v] = points[i];
    if (!(u > 0.0) || !(v >= 0.0) || (i > 0 && !(u > points[i - 1].first))) {
      throw Error(ErrorCode::BadSpec, "table points need increasing u > 0 and phi >= 0");
    }
    if (rule == Interpolation::LogLog && !(v > 0.0)) {
      throw Error(ErrorCode::BadSpec, "log-log interpolation needs phi > 0 at every point");
    }
  }
  if (rule == Interpolation::LogLog && points.size() < 2) {
    throw Error(ErrorCode::BadSpec, "log-log interpolation needs two points");
  }
  VariationFunctional f;
  f.kind_ = Kind::Table;
  f.p_ = 0.0;
  f.points_ = std::move(points);
  f.rule_ = rule;
  return f;
}

VariationFunctional VariationFunctional::custom(std::function<double(double)> fn, std::string name) {
  VariationFunctional f;
  f.kind_ = Kind::Custom;
  f.p_ = 0.0;
  f.fn_ = std::move(fn);
  f.name_ = std::move(name);
  return f;
}

double VariationFunctional::table_eval(double u) const {
  const auto& pts = points_;
  auto upper = std::lower_bound(pts.begin(), pts.end(), u, [](const auto& pt, double v) { return pt.first < v; });
  if (rule_ == Interpolation::Linear) {
    double u0 = 0.0, v0 = 0.0, u1 = 0.0, v1 = 0.0;
    if (upper == pts.begin()) {
      u1 = pts.front().first;
      v1 = pts.front().second;
    } else if (upper == pts.end()) {
      if (pts.size() == 1) return pts.front().second * u / pts.front().first;
      u0 = pts[pts.size() - 2].first;
      v0 = pts[pts.size() - 2].second;
      u1 = pts.back().first;
      v1 = pts.back().second;
    } else {
      u0 = (upper - 1)->first;
      v0 = (upper - 1)->second;
      u1 = upper->first;
      v1 = upper->second;
    }
    return std::max(0.0, v0 + (v1 - v0) * (u - u0) / (u1 - u0));
  }
  std::size_t lo = 0;
  if (upper == pts.begin()) {
    lo = 0;
  } else if (upper == pts.end()) {
    lo = pts.size() - 2;
  } else {
    lo = static_cast<std::size_t>(upper - pts.begin()) - 1;
  }
  const double lu0 = std::log(pts[lo].first), lv0 = std::log(pts[lo].second);
  const double lu1 = std::log(pts[lo + 1].first), lv1 = std::log(pts[lo + 1].second);
  return std::exp(lv0 + (lv1 - lv0) * (std::log(u) - lu0) / (lu1 - lu0));
}

double VariationFunctional::operator()(double u) const {
  if (u == 0.0) return 0.0;
  switch (kind_) {
    case Kind::Power:
      switch (shape_) {
        case PowerShape::Integer: {
          double r = u;
          for (int i = 1; i < whole_; ++i) r *= u;
          return r;
        }
        case PowerShape::HalfInteger: {
          double r = std::sqrt(u);
          for (int i = 0; i < whole_; ++i) r *= u;
          return r;
        }
        case PowerShape::General:
          return std::pow(u, p_);
      }
      return std::pow(u, p_);
    case Kind::TaylorPsi:
      return roughmarket::taylor_psi(u);
    case Kind::Table:
      return table_eval(u);
    case Kind::Custom:
      return fn_(u);
  }
  return 0.0;
}

std::string VariationFunctional::name() const {
  switch (kind_) {
    case Kind::Power: return "power(" + format_double(p_) + ")";
    case Kind::TaylorPsi: return "taylor-psi";
    case Kind::Table: return rule_ == Interpolation::Linear ? "table(linear)" : "table(loglog)";
    case Kind::Custom: return name_;
  }
  return "?";
}

double var_phi(std::span<const double> values, const VariationFunctional& phi, Exec exec) {
  if (values.size() < 2) return 0.0;
  if (phi.subadditive()) {
    // (a+b)^p <= a^p + b^p for p <= 1: the finest partition wins.
    detail::Neumaier sum;
    for (std::size_t i = 1; i < values.size(); ++i) sum.add(phi(std::abs(values[i] - values[i - 1])));
    return sum.value();
  }
  return exec == Exec::Serial ? kernels::serial::dp_variation(values, phi)
                              : kernels::parallel::dp_variation(values, phi);
}

double var_phi(const PricePath& path, const VariationFunctional& phi, Exec exec) {
  return var_phi(path.values(), phi, exec);
}

double brute_force_var_phi(std::span<const double> values, const VariationFunctional& phi) {
  const std::size_t n = values.size();
  if (n > kBruteForceMaxSamples) {
    throw Error(ErrorCode::TooLarge, "brute force limited to " + std::to_string(kBruteForceMaxSamples) + " samples");
  }
  if (n < 2) return 0.0;
  const std::size_t interior = n - 2;
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << interior); ++mask) {
    detail::Neumaier sum;
    std::size_t prev = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const bool chosen = i == n - 1 || ((mask >> (i - 1)) & 1U);
      if (!chosen) continue;
      sum.add(phi(std::abs(values[i] - values[prev])));
      prev = i;
    }
    best = std::max(best, sum.value());
  }
  return best;
}

double brute_force_var_phi(const PricePath& path, const VariationFunctional& phi) {
  return brute_force_var_phi(path.values(), phi);
}

SignedVariation var_signed(std::span<const double> values) {
  detail::Neumaier plus, minus;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1];
    if (d > 0.0) plus.add(d);
    else minus.add(-d);
  }
  SignedVariation out;
  out.plus = plus.value();
  out.minus = minus.value();
  out.total = out.plus + out.minus;
  return out;
}

SignedVariation var_signed(const PricePath& path) { return var_signed(path.values()); }

CrossingCount crossings(std::span<const double> values, double a, double b) {
  if (!(a >= 0.0) || !(a < b)) throw Error(ErrorCode::BadInterval, "need 0 <= a < b");
  enum class Side { None, Low, High } side = Side::None;
  CrossingCount count;
  for (double x : values) {
    if (x <= a) {
      if (side == Side::High) ++count.down;
      side = Side::Low;
    } else if (x >= b) {
      if (side == Side::Low) ++count.up;
      side = Side::High;
    }
  }
  return count;
}

CrossingCount crossings(const PricePath& path, double a, double b) { return crossings(path.values(), a, b); }

CrossingCount grid_crossings(std::span<const double> values, double h, Exec exec) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::BadStep, "grid step must be positive");
  return exec == Exec::Serial ? kernels::serial::grid_crossings(values, h) : kernels::parallel::grid_crossings(values, h);
}

CrossingCount grid_crossings(const PricePath& path, double h, Exec exec) {
  return grid_crossings(path.values(), h, exec);
}

std::vector<GridCrossingRow> grid_crossing_table(const PricePath& path, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::BadStep, "grid step must be positive");
  const auto k_hi = static_cast<std::int64_t>(std::ceil(path.max_value() / h));
  std::vector<GridCrossingRow> rows;
  for (std::int64_t k = 0; k <= k_hi; ++k) {
    const double a = static_cast<double>(k) * h;
    const auto c = crossings(path.values(), a, static_cast<double>(k + 1) * h);
    if (c.up != 0 || c.down != 0) rows.push_back({k, c});
  }
  return rows;
}

AdmissibilityReport phi_admissible(const VariationFunctional& phi, int j_max) {
  if (j_max < 8) throw Error(ErrorCode::BadSpec, "phi_admissible needs j_max >= 8");
  AdmissibilityReport report;

  double ratio = 0.0;
  for (int step = -8 * j_max; step <= 32; ++step) {
    const double t = std::exp2(step / 8.0);
    const double base = phi(t);
    for (int m = 0; m <= 8; ++m) {
      const double s = t * std::exp2(m / 8.0);
      const double top = phi(s);
      if (base == 0.0) {
        if (top > 0.0) ratio = std::numeric_limits<double>::infinity();
        continue;
      }
      ratio = std::max(ratio, top / base);
    }
  }
  report.ratio_sup_estimate = ratio;

  detail::Neumaier partial, tail;
  double last = 0.0;
  for (int j = 0; j <= j_max; ++j) {
    last = std::ldexp(phi(std::ldexp(1.0, -j)), 2 * j);
    partial.add(last);
    if (j > j_max / 2) tail.add(last);
  }
  report.partial_sum = partial.value();
  report.tail_fraction = report.partial_sum > 0.0 ? tail.value() / report.partial_sum : 0.0;
  report.last_term_fraction = report.partial_sum > 0.0 ? last / report.partial_sum : 0.0;

  if (phi.kind() == VariationFunctional::Kind::Power) {
    // sum 2^{(2-p)j} is geometric: converges iff p > 2; the doubling ratio is 2^p.
    report.ratio_bounded = true;
    report.series_converges = phi.exponent() > 2.0;
  } else {
    report.ratio_bounded = std::isfinite(ratio) && ratio <= 1e6;
    report.series_converges = report.tail_fraction <= 0.05 && report.last_term_fraction <= 0.01;
  }
  report.admissible = report.ratio_bounded && report.series_converges;
  return report;
}

std::vector<QvarRow> qvar_profile(const PricePath& path, std::span<const double> deltas,
                                  const VariationFunctional& gauge) {
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw Error(ErrorCode::BadStep, "mesh bounds must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw Error(ErrorCode::BadStep, "mesh bounds must strictly decrease");
  }
  const auto t = path.times();
  const auto x = path.values();
  const std::size_t n = x.size();
  double min_spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) min_spacing = std::min(min_spacing, t[i] - t[i - 1]);

  std::vector<QvarRow> rows;
  rows.reserve(deltas.size());
  std::vector<double> hi(n), lo(n);
  for (double delta : deltas) {
    // A jump j -> i in one partition step needs points in [t_j, t_{j+1}) and
    // [t_i, t_{i+1}) less than delta apart: i == j+1 or t_i - t_{j+1} < delta.
    hi[0] = lo[0] = 0.0;
    std::size_t first = 1;  // smallest m with t[m] > t[i] - delta
    for (std::size_t i = 1; i < n; ++i) {
      while (first < i && !(t[i] - t[first] < delta)) ++first;
      const std::size_t j_begin = first - 1;
      double best_hi = -std::numeric_limits<double>::infinity(), best_lo = 0.0;
      for (std::size_t j = j_begin; j < i; ++j) {
        auto [s, e] = detail::two_sum(hi[j], gauge(std::abs(x[i] - x[j])));
        const double l = lo[j] + e;
        if (s + l > best_hi + best_lo) {
          best_hi = s;
          best_lo = l;
        }
      }
      hi[i] = best_hi;
      lo[i] = best_lo;
    }
    rows.push_back({delta, hi[n - 1] + lo[n - 1], delta <= min_spacing});
  }
  return rows;
}

GrowthProfile variation_growth_profile(const PricePath& path, std::span<const double> p_grid,
                                       std::span<const std::size_t> n_grid) {
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (!(n_grid[i] > n_grid[i - 1])) throw Error(ErrorCode::BadSpec, "N grid must be increasing");
  }
  GrowthProfile out;
  out.p_grid.assign(p_grid.begin(), p_grid.end());
  out.n_grid.assign(n_grid.begin(), n_grid.end());
  for (std::size_t n_steps : n_grid) {
    const auto coarse = discretize(path, n_steps);
    std::vector<double> row;
    row.reserve(p_grid.size());
    for (double p : p_grid) row.push_back(var_phi(coarse, VariationFunctional::power(p)));
    out.values.push_back(std::move(row));
  }
  return out;
}

}  // namespace roughmarket
