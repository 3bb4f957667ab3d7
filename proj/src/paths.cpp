#include "roughmarket/paths.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "roughmarket/error.hpp"

namespace roughmarket {

namespace {

void validate(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size()) {
    throw Error(ErrorCode::BadTimeGrid, "times and values differ in length");
  }
  if (values.size() < 2) {
    throw Error(ErrorCode::BadTimeGrid, "a path needs at least two samples");
  }
  if (times.front() != 0.0) {
    throw Error(ErrorCode::BadTimeGrid, "first time must be 0");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]) || !std::isfinite(times[i])) {
      throw Error(ErrorCode::BadTimeGrid, "times must be strictly increasing (index " + std::to_string(i) + ")");
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw Error(ErrorCode::NonPositiveValue,
                  "value " + format_double(values[i]) + " at index " + std::to_string(i));
    }
  }
}

}  // namespace

PricePath::PricePath(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  validate(times_, values_);
}

double PricePath::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double PricePath::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

double PricePath::at(double t) const {
  if (t >= times_.back()) return values_.back();
  if (t <= 0.0) return values_.front();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

PricePath PricePath::with_values(std::vector<double> values) const { return PricePath(times_, std::move(values)); }

std::vector<double> PricePath::log_values() const {
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == 0.0) {
      throw Error(ErrorCode::ZeroPrice, "logarithm of zero price at index " + std::to_string(i));
    }
    out[i] = std::log(values_[i]);
  }
  return out;
}

PricePath make_path(std::vector<double> times, std::vector<double> values, double horizon) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::BadTimeGrid, "horizon must be positive");
  if (!times.empty() && times.back() != horizon) {
    throw Error(ErrorCode::BadTimeGrid, "last time must equal the horizon");
  }
  return PricePath(std::move(times), std::move(values));
}

std::vector<double> uniform_grid(std::size_t n_samples, double horizon) {
  std::vector<double> t(n_samples);
  const double steps = static_cast<double>(n_samples - 1);
  for (std::size_t i = 0; i < n_samples; ++i) t[i] = static_cast<double>(i) * horizon / steps;
  t.back() = horizon;
  return t;
}

PricePath path_from_values(std::vector<double> values, double horizon) {
  const auto n = values.size();
  if (n < 2) throw Error(ErrorCode::BadTimeGrid, "a path needs at least two samples");
  return PricePath(uniform_grid(n, horizon), std::move(values));
}

PricePath discretize(const PricePath& path, std::size_t n_steps) {
  if (n_steps < 1) throw Error(ErrorCode::BadSpec, "discretize needs N >= 1");
  const double horizon = path.horizon();
  auto times = uniform_grid(n_steps + 1, horizon);
  std::vector<double> values(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) values[k] = path.at(times[k]);
  return PricePath(std::move(times), std::move(values));
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

void write_path(const PricePath& path, std::ostream& out) {
  out << "t,x\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << format_double(path.times()[i]) << ',' << format_double(path.values()[i]) << '\n';
  }
}

void write_path(const PricePath& path, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::ParseError, "cannot open " + file.string() + " for writing");
  write_path(path, out);
}

namespace {

double parse_number(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw Error(ErrorCode::ParseError, "bad number '" + std::string(field) + "' on line " + std::to_string(line_no));
  }
  return value;
}

}  // namespace

PricePath read_path(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty path file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x") throw Error(ErrorCode::ParseError, "expected header 't,x', got '" + line + "'");
  std::vector<double> times;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorCode::ParseError, "expected two fields on line " + std::to_string(line_no));
    }
    std::string_view view(line);
    times.push_back(parse_number(view.substr(0, comma), line_no));
    values.push_back(parse_number(view.substr(comma + 1), line_no));
  }
  if (values.size() < 2) throw Error(ErrorCode::ParseError, "path file needs at least two samples");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) {
      throw Error(ErrorCode::NonPositiveValue, "negative price on data row " + std::to_string(i + 1));
    }
  }
  const double horizon = times.back();
  return make_path(std::move(times), std::move(values), horizon);
}

PricePath read_path(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + file.string());
  return read_path(in);
}

}  // namespace roughmarket
