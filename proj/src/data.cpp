#include "bitkernel/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bitkernel/detail/format.hpp"
#include "bitkernel/errors.hpp"
#include "bitkernel/rng.hpp"

namespace bitkernel::data {

namespace {

using detail::format_double;

constexpr double kPi = std::numbers::pi;

double f1(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) {
    const double t = std::sin(kPi * v / 2.0);
    s += t * t;
  }
  return std::exp(s / 5.0);
}

double f2(std::span<const double> x) {
  return std::log(1.0 + std::abs(x[0])) + (x[1] * x[1] - x[1]) + std::sin(x[2]) -
         std::exp(x[3]);
}

double f3(std::span<const double> x) { return x[0] * x[1] - x[2]; }

double f4(std::span<const double> x) {
  return x[0] * std::sin(x[1]) + std::cos(x[2]) - 0.5 * x[3];
}

double f5(std::span<const double> x) {
  return x[0] * x[0] / (1.0 + std::abs(x[1])) - std::exp(x[2]) + std::tanh(x[3]) +
         std::sqrt(std::abs(x[0] * x[2]));
}

double f6(std::span<const double> x) {
  return lambert_w(x[0] * x[1]) + x[2] / std::log1p(std::exp(x[3])) -
         gamma_fn(x[1]) / (1.0 + std::abs(x[0]));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct RawSample {
  Matrix x;
  std::vector<double> y;
  std::size_t rejections = 0;
};

RawSample sample_rows(const TargetFunction& fn, std::size_t n, std::uint64_t seed,
                      SampleMode mode) {
  if (n == 0) throw InvalidInputError("dataset size must be positive");
  const std::size_t d = fn.arity();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  RawSample out{Matrix(n, d), std::vector<double>(n), 0};
  std::vector<double> row(d);
  const std::size_t cap = 100 * n;
  std::size_t attempts = 0;
  for (std::size_t i = 0; i < n;) {
    if (attempts++ >= cap) {
      throw DomainError("rejection sampling exceeded " + std::to_string(cap) +
                        " attempts for target " + fn.name());
    }
    for (double& v : row) v = uni(gen);
    if (mode == SampleMode::unit_norm) {
      double sq = 0.0;
      for (double v : row) sq += v * v;
      const double norm = std::sqrt(sq);
      if (norm == 0.0) {
        ++out.rejections;
        continue;
      }
      for (double& v : row) v /= norm;
    }
    double y = 0.0;
    try {
      y = fn(row);
    } catch (const DomainError&) {
      ++out.rejections;
      continue;
    } catch (const PoleError&) {
      ++out.rejections;
      continue;
    }
    if (!std::isfinite(y)) {
      ++out.rejections;
      continue;
    }
    std::copy(row.begin(), row.end(), out.x.row(i).begin());
    out.y[i] = y;
    ++i;
  }
  return out;
}

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.x = Matrix(rows.size(), ds.dim());
  out.y.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = ds.x.row(rows[k]);
    std::copy(src.begin(), src.end(), out.x.row(k).begin());
    out.y[k] = ds.y[rows[k]];
  }
  out.meta = ds.meta;
  out.meta.n = rows.size();
  return out;
}

}  // namespace

const char* to_string(SampleMode mode) noexcept {
  return mode == SampleMode::box ? "box" : "unit_norm";
}

const char* to_string(SplitMode mode) noexcept {
  return mode == SplitMode::independent ? "independent" : "holdout";
}

SampleMode parse_sample_mode(std::string_view text) {
  if (text == "box") return SampleMode::box;
  if (text == "unit_norm") return SampleMode::unit_norm;
  throw InvalidInputError("unknown sample mode '" + std::string(text) + "'");
}

SplitMode parse_split_mode(std::string_view text) {
  if (text == "independent") return SplitMode::independent;
  if (text == "holdout") return SplitMode::holdout;
  throw InvalidInputError("unknown split mode '" + std::string(text) + "'");
}

TargetFunction TargetFunction::builtin(TargetId id) {
  if (id == TargetId::custom_1d) {
    throw InvalidInputError("custom_1d needs an expression");
  }
  TargetFunction fn;
  fn.id_ = id;
  return fn;
}

TargetFunction TargetFunction::by_name(std::string_view name) {
  static constexpr std::array<std::pair<std::string_view, TargetId>, 6> names = {{
      {"f1", TargetId::f1},
      {"f2", TargetId::f2},
      {"f3", TargetId::f3},
      {"f4", TargetId::f4},
      {"f5", TargetId::f5},
      {"f6", TargetId::f6},
  }};
  for (const auto& [key, id] : names) {
    if (key == name) return builtin(id);
  }
  throw InvalidInputError("unknown target '" + std::string(name) + "'");
}

TargetFunction TargetFunction::custom(std::string_view expression) {
  TargetFunction fn;
  fn.id_ = TargetId::custom_1d;
  fn.expr_ = std::make_shared<const Expression>(Expression::parse(expression));
  fn.source_ = std::string(expression);
  return fn;
}

std::size_t TargetFunction::arity() const noexcept {
  switch (id_) {
    case TargetId::f1: return 5;
    case TargetId::f2: return 4;
    case TargetId::f3: return 3;
    case TargetId::f4: return 4;
    case TargetId::f5: return 4;
    case TargetId::f6: return 4;
    case TargetId::custom_1d: return 1;
  }
  return 0;
}

std::string TargetFunction::name() const {
  switch (id_) {
    case TargetId::f1: return "f1";
    case TargetId::f2: return "f2";
    case TargetId::f3: return "f3";
    case TargetId::f4: return "f4";
    case TargetId::f5: return "f5";
    case TargetId::f6: return "f6";
    case TargetId::custom_1d: return "custom_1d";
  }
  return {};
}

double TargetFunction::operator()(std::span<const double> x) const {
  return eval_target(*this, x);
}

double eval_target(const TargetFunction& fn, std::span<const double> x) {
  if (x.size() != fn.arity()) {
    throw DimensionError("target " + fn.name() + " takes " + std::to_string(fn.arity()) +
                         " arguments, got " + std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidInputError("non-finite target argument");
  }
  switch (fn.id()) {
    case TargetId::f1: return f1(x);
    case TargetId::f2: return f2(x);
    case TargetId::f3: return f3(x);
    case TargetId::f4: return f4(x);
    case TargetId::f5: return f5(x);
    case TargetId::f6: return f6(x);
    case TargetId::custom_1d: break;
  }
  return (*fn.expr_)(x[0]);
}

double lambert_w(double z) {
  constexpr double branch = -1.0 / std::numbers::e;
  if (std::isnan(z)) throw InvalidInputError("lambert_w of NaN");
  if (z < branch) throw DomainError("lambert_w undefined below -1/e");
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return z;

  // Initial guess: branch-point series in p = sqrt(2(ez + 1)) near -1/e,
  // asymptotic log form for large z, log1p elsewhere.
  double w;
  if (z < -0.25) {
    const double p = std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * z + 1.0)));
    if (p == 0.0) return -1.0;
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (z > 3.0) {
    const double l1 = std::log(z);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  } else {
    w = std::log1p(z);
  }

  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    const double next = w - step;
    if (!std::isfinite(next)) break;
    const bool done = std::abs(next - w) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                                 (1.0 + std::abs(next));
    w = next;
    if (done) break;
  }
  return w;
}

double gamma_fn(double z) {
  if (std::isnan(z)) throw InvalidInputError("gamma of NaN");
  if (z <= 0.0 && z == std::floor(z)) {
    throw PoleError("gamma has a pole at " + format_double(z));
  }
  if (z < 0.5) {
    return kPi / (std::sin(kPi * z) * gamma_fn(1.0 - z));
  }
  static constexpr double g = 7.0;
  static constexpr std::array<double, 9> c = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  const double x = z - 1.0;
  double a = c[0];
  const double t = x + g + 0.5;
  for (std::size_t k = 1; k < c.size(); ++k) a += c[k] / (x + static_cast<double>(k));
  // t^(x+0.5) split in two to delay overflow for large z.
  const double half = std::pow(t, (x + 0.5) / 2.0);
  return std::sqrt(2.0 * kPi) * half * (half * std::exp(-t)) * a;
}

Dataset generate_dataset(const TargetFunction& fn, std::size_t n, std::uint64_t seed,
                         SampleMode mode) {
  RawSample raw = sample_rows(fn, n, seed, mode);
  Dataset ds;
  ds.meta.target = fn.name();
  ds.meta.expression = fn.expression();
  ds.meta.seed = seed;
  ds.meta.mode = mode;
  ds.meta.n = n;
  ds.meta.d = fn.arity();
  ds.meta.rejections = raw.rejections;
  if (mode == SampleMode::unit_norm) {
    double peak = 0.0;
    for (double v : raw.y) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
      for (double& v : raw.y) v /= peak;
      ds.meta.y_scale = peak;
    }
  }
  ds.x = std::move(raw.x);
  ds.y = std::move(raw.y);
  return ds;
}

TargetFunction target_of(const DatasetMeta& meta) {
  if (meta.target == "custom_1d") return TargetFunction::custom(meta.expression);
  return TargetFunction::by_name(meta.target);
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_test,
                                  std::uint64_t seed, SplitMode mode) {
  if (n_test == 0) throw InvalidInputError("n_test must be positive");
  if (mode == SplitMode::holdout) {
    if (n_test >= ds.size()) {
      throw InvalidInputError("holdout n_test must be smaller than the dataset");
    }
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 gen(mix_seed(seed, kSaltHoldout));
    std::shuffle(order.begin(), order.end(), gen);
    std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<long>(n_test));
    std::vector<std::size_t> train(order.begin() + static_cast<long>(n_test), order.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {take_rows(ds, train), take_rows(ds, test)};
  }

  const TargetFunction fn = target_of(ds.meta);
  if (fn.arity() != ds.dim()) {
    throw DimensionError("dataset dimension does not match its target");
  }
  RawSample raw = sample_rows(fn, n_test, mix_seed(seed, kSaltTestSet), ds.meta.mode);
  Dataset test;
  test.meta = ds.meta;
  test.meta.n = n_test;
  test.meta.rejections = raw.rejections;
  for (double& v : raw.y) v /= ds.meta.y_scale;
  test.x = std::move(raw.x);
  test.y = std::move(raw.y);
  return {ds, std::move(test)};
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path out = csv_path;
  out.replace_filename(csv_path.stem().string() + ".meta.json");
  return out;
}

void persist_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t d = ds.dim();
  for (std::size_t k = 0; k < d; ++k) out << 'x' << k << ',';
  out << "y\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.x.row(i)) out << format_double(v) << ',';
    out << format_double(ds.y[i]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());

  nlohmann::ordered_json meta = {
      {"target", ds.meta.target},
      {"seed", ds.meta.seed},
      {"mode", to_string(ds.meta.mode)},
      {"n", ds.meta.n},
      {"d", ds.meta.d},
      {"rejections", ds.meta.rejections},
      {"y_scale", ds.meta.y_scale},
  };
  if (!ds.meta.expression.empty()) meta["expression"] = ds.meta.expression;
  std::ofstream side(sidecar_path(path), std::ios::binary);
  if (!side) throw IoError("cannot write " + sidecar_path(path).string());
  side << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  const auto header = split_fields(line);
  if (header.size() < 2 || header.back() != "y") {
    throw ParseError(1, "expected header x0,...,x{d-1},y");
  }
  const std::size_t d = header.size() - 1;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k] != "x" + std::to_string(k)) {
      throw ParseError(1, "expected column x" + std::to_string(k) + ", got '" +
                              header[k] + "'");
    }
  }

  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != d + 1) {
      throw ParseError(line_no, "row has " + std::to_string(fields.size()) +
                                    " columns, expected " + std::to_string(d + 1));
    }
    for (std::size_t k = 0; k <= d; ++k) {
      const std::string& f = fields[k];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ParseError(line_no, "malformed number '" + f + "'");
      }
      (k < d ? xs : ys).push_back(v);
    }
  }

  Dataset ds;
  const std::size_t n = ys.size();
  ds.x = Matrix(n, d, std::move(xs));
  ds.y = std::move(ys);
  ds.meta.n = n;
  ds.meta.d = d;

  const auto side_path = sidecar_path(path);
  if (std::filesystem::exists(side_path)) {
    std::ifstream side(side_path, std::ios::binary);
    nlohmann::json meta;
    try {
      side >> meta;
      ds.meta.target = meta.at("target").get<std::string>();
      ds.meta.seed = meta.at("seed").get<std::uint64_t>();
      ds.meta.mode = parse_sample_mode(meta.at("mode").get<std::string>());
      ds.meta.rejections = meta.at("rejections").get<std::size_t>();
      ds.meta.y_scale = meta.value("y_scale", 1.0);
      ds.meta.expression = meta.value("expression", std::string());
      if (meta.at("n").get<std::size_t>() != n || meta.at("d").get<std::size_t>() != d) {
        throw ParseError(0, "sidecar shape does not match " + path.string());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(0, side_path.string() + ": " + e.what());
    }
  }
  return ds;
}

}  // namespace bitkernel::data
