#include "bitkernel/report.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bitkernel/detail/format.hpp"
#include "bitkernel/errors.hpp"

namespace bitkernel::report {
namespace {

using detail::format_double;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<const char*, 9> kFields = {
    "loss_1bit",      "loss_fp",       "lambda_min",    "lambda_max",  "gram_drift",
    "max_train_diff", "max_test_diff", "flip_fraction", "weight_drift"};

std::array<double*, 9> fields(RunRecord& r) {
  return {&r.loss_1bit,      &r.loss_fp,       &r.lambda_min,    &r.lambda_max, &r.gram_drift,
          &r.max_train_diff, &r.max_test_diff, &r.flip_fraction, &r.weight_drift};
}

std::array<double, 9> values(const RunRecord& r) {
  return {r.loss_1bit,      r.loss_fp,       r.lambda_min,    r.lambda_max,  r.gram_drift,
          r.max_train_diff, r.max_test_diff, r.flip_fraction, r.weight_drift};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "malformed number '" + s + "'");
  }
  return v;
}

}  // namespace

bool identical(const RunRecord& a, const RunRecord& b) noexcept {
  if (a.step != b.step) return false;
  const auto va = values(a);
  const auto vb = values(b);
  for (std::size_t k = 0; k < va.size(); ++k) {
    if (std::bit_cast<std::uint64_t>(va[k]) != std::bit_cast<std::uint64_t>(vb[k])) {
      return false;
    }
  }
  return true;
}

std::vector<RunRecord> run_records(const train::TrainTrajectory& trajectory) {
  std::vector<RunRecord> out;
  if (trajectory.records.empty()) return out;
  const std::size_t last = trajectory.records.back().step;
  const std::size_t stride = std::max<std::size_t>(1, trajectory.probe_stride);
  for (const auto& s : trajectory.records) {
    if (s.step % stride != 0 && s.step != last) continue;
    RunRecord r;
    r.step = s.step;
    r.loss_1bit = s.loss_1bit;
    r.loss_fp = s.loss_fp;
    r.lambda_min = s.kernel ? s.kernel->lambda_min : kNaN;
    r.lambda_max = s.kernel ? s.kernel->lambda_max : kNaN;
    r.gram_drift = s.kernel ? s.kernel->gram_drift : kNaN;
    r.max_train_diff = s.max_train_diff;
    r.max_test_diff = s.max_test_diff;
    r.flip_fraction = s.flip_fraction;
    r.weight_drift = s.weight_drift;
    out.push_back(r);
  }
  return out;
}

void emit_report(std::span<const RunRecord> records, Format format,
                 const std::filesystem::path& path) {
  auto out = open_out(path);
  if (format == Format::csv) {
    out << kRunCsvHeader << '\n';
    for (const auto& r : records) {
      out << r.step;
      for (double v : values(r)) out << ',' << format_double(v);
      out << '\n';
    }
  } else {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : records) {
      nlohmann::ordered_json row;
      row["step"] = r.step;
      const auto v = values(r);
      // JSON has no NaN; null stands in for it.
      for (std::size_t k = 0; k < kFields.size(); ++k) {
        if (std::isnan(v[k])) {
          row[kFields[k]] = nullptr;
        } else {
          row[kFields[k]] = v[k];
        }
      }
      rows.push_back(std::move(row));
    }
    out << rows.dump(2) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<RunRecord> read_report(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<RunRecord> out;

  if (format == Format::csv) {
    std::string line;
    if (!std::getline(in, line) || line != kRunCsvHeader) {
      throw ParseError(1, "unexpected run report header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() != kFields.size() + 1) {
        throw ParseError(line_no, "expected " + std::to_string(kFields.size() + 1) +
                                      " columns, got " + std::to_string(cells.size()));
      }
      RunRecord r;
      const auto step = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), r.step);
      if (step.ec != std::errc() || step.ptr != cells[0].data() + cells[0].size()) {
        throw ParseError(line_no, "malformed step '" + cells[0] + "'");
      }
      auto dst = fields(r);
      for (std::size_t k = 0; k < dst.size(); ++k) *dst[k] = parse_number(cells[k + 1], line_no);
      out.push_back(r);
    }
    return out;
  }

  nlohmann::json rows;
  try {
    in >> rows;
    for (const auto& row : rows) {
      RunRecord r;
      r.step = row.at("step").get<std::size_t>();
      auto dst = fields(r);
      for (std::size_t k = 0; k < kFields.size(); ++k) {
        const auto& v = row.at(kFields[k]);
        *dst[k] = v.is_null() ? kNaN : v.get<double>();
      }
      out.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
  return out;
}

void emit_decomposition(const train::TrainTrajectory& trajectory,
                        const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "step,c1,c2,c3,c4,residual\n";
  for (const auto& s : trajectory.records) {
    if (!s.decomposition) continue;
    const auto& c = *s.decomposition;
    out << s.step << ',' << format_double(c.c1) << ',' << format_double(c.c2) << ','
        << format_double(c.c3) << ',' << format_double(c.c4) << ','
        << format_double(s.decomposition_residual) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bitkernel::report
