#include "dexhand/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dexhand/io_util.hpp"

namespace dexhand::cal {

CalibrationModel fit_linear(std::span<const SweepRecord> records) {
  if (records.empty()) throw std::invalid_argument("fit_linear: empty input");
  std::set<double> distinct;
  for (const auto& r : records) distinct.insert(r.raw_set);
  if (distinct.size() < 2) {
    throw std::invalid_argument("fit_linear: degenerate design matrix "
                                "(all raw_set values identical)");
  }
  const double n = static_cast<double>(records.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : records) {
    sx += r.raw_set;
    sy += r.gauge_force_n;
    sxx += r.raw_set * r.raw_set;
    sxy += r.raw_set * r.gauge_force_n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;

  const double ybar = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (const auto& r : records) {
    const double pred = slope * r.raw_set + intercept;
    ss_res += (r.gauge_force_n - pred) * (r.gauge_force_n - pred);
    ss_tot += (r.gauge_force_n - ybar) * (r.gauge_force_n - ybar);
  }
  CalibrationModel m;
  m.finger = records.front().finger;
  m.slope_a = slope;
  m.intercept_b = intercept;
  m.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return m;
}

ForceEstimate raw_to_newtons(const CalibrationModel& model, double l_raw) {
  const double f = model.slope_a * l_raw + model.intercept_b;
  if (f < 0.0) return {0.0, true};
  return {f, false};
}

RawTarget newtons_to_raw(const CalibrationModel& model, double force_n) {
  const double raw = std::round((force_n - model.intercept_b) / model.slope_a);
  if (raw < 0.0) return {0.0, true};
  if (raw > 1000.0) return {1000.0, true};
  return {raw, false};
}

SweepLoadResult load_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  SweepLoadResult out;
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = io::split_csv_line(line);
    if (!saw_header) {
      if (fields != std::vector<std::string>{"finger", "raw_set",
                                             "gauge_force_n", "repeat"}) {
        throw std::runtime_error(path.string() +
                                 ": unexpected header, want "
                                 "finger,raw_set,gauge_force_n,repeat");
      }
      saw_header = true;
      continue;
    }
    if (fields.size() != 4) {
      out.rejected.push_back({lineno, "expected 4 fields"});
      continue;
    }
    SweepRecord rec;
    try {
      rec.finger = finger_from_string(fields[0]);
      rec.raw_set = std::stod(fields[1]);
      rec.gauge_force_n = std::stod(fields[2]);
      rec.repeat = std::stoi(fields[3]);
    } catch (const std::exception&) {
      out.rejected.push_back({lineno, "unparseable field"});
      continue;
    }
    if (rec.raw_set < 0.0 || rec.raw_set > 1000.0) {
      out.rejected.push_back({lineno, "raw_set out of [0,1000]"});
      continue;
    }
    if (rec.gauge_force_n < 0.0) {
      out.rejected.push_back({lineno, "negative gauge force"});
      continue;
    }
    out.records.push_back(rec);
  }
  if (!saw_header && out.records.empty()) out.empty_warning = true;
  if (out.records.empty()) out.empty_warning = true;
  return out;
}

std::map<Finger, CalibrationModel> build_calibration_set(
    std::span<const SweepRecord> records) {
  std::map<Finger, std::vector<SweepRecord>> grouped;
  for (const auto& r : records) grouped[r.finger].push_back(r);
  std::map<Finger, CalibrationModel> models;
  for (const auto& [finger, rows] : grouped) {
    models[finger] = fit_linear(rows);
  }
  // no published calibration for ring/pinky: reuse the middle model
  if (models.count(Finger::Middle)) {
    for (Finger f : {Finger::Ring, Finger::Pinky}) {
      if (!models.count(f)) {
        CalibrationModel m = models.at(Finger::Middle);
        m.finger = f;
        m.provenance = Provenance::ReusedMiddle;
        models[f] = m;
      }
    }
  }
  return models;
}

std::string calibration_set_to_json(
    const std::map<Finger, CalibrationModel>& models) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [finger, m] : models) {
    nlohmann::json j;
    j["finger"] = to_string(finger);
    j["a"] = m.slope_a;
    j["b"] = m.intercept_b;
    j["r2"] = m.r_squared;
    j["provenance"] =
        m.provenance == Provenance::Fitted ? "fitted" : "reused_middle";
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace dexhand::cal
