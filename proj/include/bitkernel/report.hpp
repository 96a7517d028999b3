#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "bitkernel/train.hpp"

namespace bitkernel::report {

inline constexpr const char* kRunCsvHeader =
    "step,loss_1bit,loss_fp,lambda_min,lambda_max,gram_drift,max_train_diff,"
    "max_test_diff,flip_fraction,weight_drift";

// One row per probed step. Kernel columns are NaN when probing was disabled.
struct RunRecord {
  std::size_t step = 0;
  double loss_1bit = 0.0;
  double loss_fp = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double gram_drift = 0.0;
  double max_train_diff = 0.0;
  double max_test_diff = 0.0;
  double flip_fraction = 0.0;
  double weight_drift = 0.0;
};

// Bitwise equality, so NaN fields compare equal to themselves.
bool identical(const RunRecord& a, const RunRecord& b) noexcept;

// Rows at t % probe_stride == 0 and at the final step.
std::vector<RunRecord> run_records(const train::TrainTrajectory& trajectory);

enum class Format { csv, json };

void emit_report(std::span<const RunRecord> records, Format format,
                 const std::filesystem::path& path);
std::vector<RunRecord> read_report(const std::filesystem::path& path, Format format);

// step,c1,c2,c3,c4,residual for every step that carries a decomposition.
void emit_decomposition(const train::TrainTrajectory& trajectory,
                        const std::filesystem::path& path);

}  // namespace bitkernel::report
