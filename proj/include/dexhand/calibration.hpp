#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dexhand/hand_types.hpp"

namespace dexhand::cal {

/// One gauge reading from the force-parameter sweep.
struct SweepRecord {
  Finger finger = Finger::Index;
  double raw_set = 0.0;        // commanded force parameter, [0,1000]
  double gauge_force_n = 0.0;  // external gauge reading, >= 0
  int repeat = 1;
};

enum class Provenance { Fitted, ReusedMiddle };

/// Per-finger linear raw->Newton map, F = a*L + b.
struct CalibrationModel {
  Finger finger = Finger::Index;
  double slope_a = 0.0;     // N per raw unit, > 0
  double intercept_b = 0.0; // N
  double r_squared = 0.0;
  Provenance provenance = Provenance::Fitted;
};

/// Ordinary least squares over (raw_set, gauge_force). Throws
/// std::invalid_argument on empty input or a degenerate design matrix
/// (fewer than two distinct raw_set values).
CalibrationModel fit_linear(std::span<const SweepRecord> records);

struct ForceEstimate {
  double newtons = 0.0;
  bool clamped = false;  // raw estimate was negative and clamped to 0
};

/// F = a*L + b, clamped below at zero.
ForceEstimate raw_to_newtons(const CalibrationModel& model, double l_raw);

struct RawTarget {
  double raw = 0.0;   // nearest integer, clamped to [0,1000]
  bool clamped = false;
};

/// Inverse map (F - b)/a for commanding metric force targets.
RawTarget newtons_to_raw(const CalibrationModel& model, double force_n);

struct RowIssue {
  int line = 0;
  std::string reason;
};

struct SweepLoadResult {
  std::vector<SweepRecord> records;
  std::vector<RowIssue> rejected;
  bool empty_warning = false;
};

/// Loads `finger,raw_set,gauge_force_n,repeat` CSV. Throws on a missing
/// file or wrong header; malformed/out-of-range rows are rejected
/// individually with line numbers.
SweepLoadResult load_sweep_csv(const std::filesystem::path& path);

/// Fits every finger present in the records. Ring and pinky have no
/// published calibration and reuse the middle-finger model, flagged
/// ReusedMiddle.
std::map<Finger, CalibrationModel> build_calibration_set(
    std::span<const SweepRecord> records);

std::string calibration_set_to_json(const std::map<Finger, CalibrationModel>& models);

}  // namespace dexhand::cal
