#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dexhand/calibration.hpp"

using namespace dexhand;
using cal::SweepRecord;

namespace {

std::vector<SweepRecord> synthetic(Finger f, double a, double b,
                                   double noise_amp = 0.0) {
  std::vector<SweepRecord> rows;
  int i = 0;
  for (int raw = 25; raw <= 1000; raw += 25) {
    for (int rep = 1; rep <= 2; ++rep) {
      const double eps = noise_amp * ((i++ % 2) ? 1.0 : -1.0);
      rows.push_back({f, double(raw), a * raw + b + eps, rep});
    }
  }
  return rows;
}

std::filesystem::path data_dir() { return DEXHAND_DATA_DIR; }

}  // namespace

TEST_CASE("exact fit recovers coefficients and unit R^2") {
  const auto rows = synthetic(Finger::Index, 0.0075, -0.414);
  const auto m = cal::fit_linear(rows);
  CHECK(m.slope_a == doctest::Approx(0.0075).epsilon(1e-12));
  CHECK(m.intercept_b == doctest::Approx(-0.414).epsilon(1e-9));
  CHECK(m.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("symmetric noise leaves the slope unchanged to first order") {
  const auto clean = cal::fit_linear(synthetic(Finger::Middle, 0.0065, 0.018));
  const auto noisy =
      cal::fit_linear(synthetic(Finger::Middle, 0.0065, 0.018, 0.05));
  CHECK(noisy.slope_a == doctest::Approx(clean.slope_a).epsilon(1e-6));
  CHECK(noisy.r_squared < 1.0);
}

TEST_CASE("degenerate inputs throw") {
  CHECK_THROWS_AS(cal::fit_linear(std::vector<SweepRecord>{}),
                  std::invalid_argument);
  std::vector<SweepRecord> same{{Finger::Index, 500, 3.0, 1},
                                {Finger::Index, 500, 3.1, 2}};
  CHECK_THROWS_AS(cal::fit_linear(same), std::invalid_argument);
}

TEST_CASE("raw to newtons and the published coefficients") {
  cal::CalibrationModel index{Finger::Index, 0.0075, -0.414, 0.987};
  cal::CalibrationModel thumb{Finger::Thumb, 0.0125, 0.384, 0.993};
  cal::CalibrationModel middle{Finger::Middle, 0.0065, 0.018, 0.986};

  CHECK(cal::raw_to_newtons(index, 500).newtons ==
        doctest::Approx(3.336).epsilon(1e-12));
  CHECK_FALSE(cal::raw_to_newtons(index, 500).clamped);

  CHECK(cal::raw_to_newtons(thumb, 0).newtons ==
        doctest::Approx(0.384).epsilon(1e-12));

  const auto clamped = cal::raw_to_newtons(index, 0);
  CHECK(clamped.newtons == 0.0);
  CHECK(clamped.clamped);

  // 6 N on the middle finger: round((6 - 0.018) / 0.0065)
  CHECK(cal::newtons_to_raw(middle, 6.0).raw == 920.0);

  const auto low = cal::newtons_to_raw(index, -1.0);
  CHECK(low.raw == 0.0);
  CHECK(low.clamped);
}

TEST_CASE("round trip raw -> N -> raw within one unit off the clamp") {
  cal::CalibrationModel index{Finger::Index, 0.0075, -0.414, 0.987};
  for (int raw = 25; raw <= 1000; raw += 25) {
    const auto f = cal::raw_to_newtons(index, raw);
    if (f.clamped) continue;
    CHECK(std::abs(cal::newtons_to_raw(index, f.newtons).raw - raw) <= 1.0);
  }
}

TEST_CASE("raw_to_newtons is monotone in L") {
  cal::CalibrationModel m{Finger::Index, 0.0075, -0.414, 0.987};
  double prev = -1.0;
  for (int raw = 0; raw <= 1000; raw += 10) {
    const double f = cal::raw_to_newtons(m, raw).newtons;
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("shipped reconstructed sweep reproduces the published fits") {
  const auto loaded = cal::load_sweep_csv(data_dir() / "calibration_sweep.csv");
  CHECK(loaded.rejected.empty());
  CHECK(loaded.records.size() == 240);  // 40 setpoints x 2 repeats x 3 fingers
  const auto models = cal::build_calibration_set(loaded.records);

  const auto& idx = models.at(Finger::Index);
  CHECK(idx.slope_a == doctest::Approx(0.0075).epsilon(0.05));
  CHECK(idx.intercept_b == doctest::Approx(-0.414).epsilon(0.15));
  CHECK(idx.r_squared == doctest::Approx(0.987).epsilon(0.006));

  const auto& mid = models.at(Finger::Middle);
  CHECK(mid.slope_a == doctest::Approx(0.0065).epsilon(0.05));
  CHECK(mid.r_squared == doctest::Approx(0.986).epsilon(0.006));

  const auto& th = models.at(Finger::Thumb);
  CHECK(th.slope_a == doctest::Approx(0.0125).epsilon(0.05));
  CHECK(th.r_squared == doctest::Approx(0.993).epsilon(0.006));

  // every published fit is highly linear
  for (const auto& [f, m] : models) CHECK(m.r_squared > 0.98);

  // ring/pinky reuse the middle model with provenance
  CHECK(models.at(Finger::Ring).provenance == cal::Provenance::ReusedMiddle);
  CHECK(models.at(Finger::Pinky).provenance == cal::Provenance::ReusedMiddle);
  CHECK(models.at(Finger::Ring).slope_a == mid.slope_a);
}

TEST_CASE("sweep csv loader validates rows") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto p = dir / "dexhand_sweep_test.csv";
  {
    std::ofstream out(p);
    out << "finger,raw_set,gauge_force_n,repeat\n";
    out << "index,100,0.5,1\n";
    out << "index,1500,0.5,1\n";   // out of range
    out << "index,abc,0.5,1\n";    // unparseable
    out << "marble,100,0.5,1\n";   // unknown finger
  }
  const auto r = cal::load_sweep_csv(p);
  CHECK(r.records.size() == 1);
  REQUIRE(r.rejected.size() == 3);
  CHECK(r.rejected[0].line == 3);
  CHECK(r.rejected[1].line == 4);
  std::filesystem::remove(p);
}

TEST_CASE("empty sweep file warns") {
  const auto p = std::filesystem::temp_directory_path() / "dexhand_empty.csv";
  { std::ofstream out(p); }
  const auto r = cal::load_sweep_csv(p);
  CHECK(r.records.empty());
  CHECK(r.empty_warning);
  std::filesystem::remove(p);
}

TEST_CASE("model export json includes provenance") {
  std::map<Finger, cal::CalibrationModel> models;
  models[Finger::Index] = {Finger::Index, 0.0075, -0.414, 0.987,
                           cal::Provenance::Fitted};
  const auto j = cal::calibration_set_to_json(models);
  CHECK(j.find("\"finger\": \"index\"") != std::string::npos);
  CHECK(j.find("\"provenance\": \"fitted\"") != std::string::npos);
}
