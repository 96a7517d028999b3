#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bitkernel/expression.hpp"
#include "bitkernel/matrix.hpp"

namespace bitkernel::data {

enum class TargetId { f1, f2, f3, f4, f5, f6, custom_1d };

// box: X uniform on [-1, 1]^d.
// unit_norm: rows rescaled to unit length, y divided by max |y| of the set.
enum class SampleMode { box, unit_norm };

// independent: fresh test points from the same distribution.
// holdout: test rows carved out of the given dataset.
enum class SplitMode { independent, holdout };

const char* to_string(SampleMode mode) noexcept;
const char* to_string(SplitMode mode) noexcept;
SampleMode parse_sample_mode(std::string_view text);
SplitMode parse_split_mode(std::string_view text);

class TargetFunction {
 public:
  // f1..f6 by name ("f1".."f6").
  static TargetFunction builtin(TargetId id);
  static TargetFunction by_name(std::string_view name);
  // One-variable target given by an expression in `x`.
  static TargetFunction custom(std::string_view expression);

  TargetId id() const noexcept { return id_; }
  std::size_t arity() const noexcept;
  std::string name() const;
  // Source text for custom_1d, empty otherwise.
  const std::string& expression() const noexcept { return source_; }

  double operator()(std::span<const double> x) const;

 private:
  friend double eval_target(const TargetFunction& fn, std::span<const double> x);

  TargetId id_ = TargetId::f3;
  std::string source_;
  std::shared_ptr<const Expression> expr_;
};

// Throws DimensionError on arity mismatch, InvalidInputError on non-finite
// input, DomainError / PoleError for f6 outside the Lambert W / Gamma domain.
double eval_target(const TargetFunction& fn, std::span<const double> x);

// Principal branch W0 on [-1/e, inf) by Halley iteration.
double lambert_w(double z);
// Lanczos (g = 7, 9 terms) with reflection below 0.5.
double gamma_fn(double z);

struct DatasetMeta {
  std::string target;
  std::string expression;
  std::uint64_t seed = 0;
  SampleMode mode = SampleMode::box;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t rejections = 0;
  // Divisor applied to the raw targets (1 in box mode).
  double y_scale = 1.0;

  bool operator==(const DatasetMeta&) const = default;
};

struct Dataset {
  Matrix x;
  std::vector<double> y;
  DatasetMeta meta;

  std::size_t size() const noexcept { return x.rows(); }
  std::size_t dim() const noexcept { return x.cols(); }

  bool operator==(const Dataset&) const = default;
};

// Rows whose target evaluation fails or is non-finite are redrawn, up to
// 100·n attempts in total.
Dataset generate_dataset(const TargetFunction& fn, std::size_t n, std::uint64_t seed,
                         SampleMode mode);

// Returns (train, test). Independent mode samples n_test fresh rows with a
// seed derived from `seed` and rescales them by the train set's y_scale.
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_test,
                                  std::uint64_t seed,
                                  SplitMode mode = SplitMode::independent);

// Rebuilds the target described by dataset metadata.
TargetFunction target_of(const DatasetMeta& meta);

// CSV with header x0,...,x{d-1},y plus a `<stem>.meta.json` sidecar.
void persist_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace bitkernel::data
