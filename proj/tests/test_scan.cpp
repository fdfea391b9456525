#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nhl/scan.hpp"

using namespace nhl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nhl_scan_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SweepConfig ring_sweep(std::size_t L = 30) {
  SweepConfig c;
  c.base_model = flux_ring({L, 1.0, 0.5, 0.0, std::numbers::pi / 2});
  c.axis1 = {SweepParameter::Flux, 0.2, 1.0, 3};
  c.axis2 = {SweepParameter::G, 0.0, 1.5, 16};
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Sweep, WithParameter) {
  const ModelSpec ring = flux_ring({20, 1.0, 0.5, 0.0, 0.3});
  EXPECT_DOUBLE_EQ(with_parameter(ring, SweepParameter::Flux, 1.0).flux_theta, 0.05);
  EXPECT_DOUBLE_EQ(with_parameter(ring, SweepParameter::FluxTheta, 0.2).flux_theta, 0.2);
  const ModelSpec g2 = with_parameter(ring, SweepParameter::G, 2.0);
  for (const auto& p : g2.perturbations) EXPECT_NEAR(std::abs(p.amplitude), 2.0, 1e-15);
  EXPECT_NEAR(std::arg(g2.perturbations[0].amplitude), 0.3, 1e-15);
  const ModelSpec ph = with_parameter(ring, SweepParameter::Phi, 1.0);
  EXPECT_NEAR(std::arg(ph.perturbations[0].amplitude), 1.0, 1e-15);
  EXPECT_NEAR(std::arg(ph.perturbations[1].amplitude), -1.0, 1e-15);
  EXPECT_EQ(with_parameter(nnn_chain(20, 1.0, 0.1, 0.5), SweepParameter::T2, 0.4).hoppings[2], cplx(0.4));
  const auto back = flux_ring_params_of(with_parameter(ring, SweepParameter::Flux, 1.0));
  EXPECT_DOUBLE_EQ(back.theta, 0.05);
  EXPECT_DOUBLE_EQ(back.phi, 0.3);
  EXPECT_DOUBLE_EQ(back.g, 0.5);
  EXPECT_THROW(flux_ring_params_of(gain_chain(10, 1.0, 1.0)), InvalidModel);
}

TEST(Sweep, AxisValuesHitTheEnds) {
  const Axis a{SweepParameter::G, 0.1, 0.7, 7};
  EXPECT_EQ(a.value(0), 0.1);
  EXPECT_EQ(a.value(6), 0.7);
  EXPECT_NEAR(a.value(3), 0.4, 1e-15);
}

TEST(Sweep, ZeroGainColumnIsReal) {
  const PhaseGrid g = run_sweep(ring_sweep(), {1, {}});
  for (std::size_t i = 0; i < g.axis1.steps; ++i) EXPECT_EQ(g.at(i, 0), 0.0);
  EXPECT_TRUE(g.diagnostics.empty());
}

TEST(Sweep, ThreadCountDoesNotChangeTheGrid) {
  const SweepConfig c = ring_sweep();
  const PhaseGrid a = run_sweep(c, {1, {}});
  const PhaseGrid b = run_sweep(c, {3, {}});
  ASSERT_EQ(a.values.size(), b.values.size());
  for (std::size_t k = 0; k < a.values.size(); ++k)
    EXPECT_EQ(std::memcmp(&a.values[k], &b.values[k], sizeof(double)), 0) << k;
  std::ostringstream sa, sb;
  write_grid_csv(a, sa);
  write_grid_csv(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Sweep, OnsetsTrackThePrediction) {
  const std::size_t L = 60;
  SweepConfig c = ring_sweep(L);
  c.axis2 = {SweepParameter::G, 0.0, 1.5, 61};
  const PhaseGrid g = run_sweep(c, {2, {}});
  for (const auto& o : threshold_extract(g)) {
    ASSERT_TRUE(o.onset);
    const double predicted = threshold_pbc(L, o.axis1_value / L, std::numbers::pi / 2).g_c;
    EXPECT_LT(std::abs(*o.onset - predicted) / predicted, 0.1) << "flux=" << o.axis1_value;
  }
}

TEST(Sweep, SmallNextNearestHoppingStaysReal) {
  SweepConfig c;
  c.base_model = nnn_chain(60, 1.0, 0.1, 0.5);
  c.axis1 = {SweepParameter::T2, 0.0, 0.2, 3};
  c.axis2 = {SweepParameter::G, 0.0, 2.0, 5};
  const PhaseGrid g = run_sweep(c, {2, {}});
  for (double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(Sweep, OtherMetrics) {
  SweepConfig c = ring_sweep(40);
  c.axis2 = {SweepParameter::G, 0.0, 1.5, 4};
  c.metric = Metric::MaxImE;
  const PhaseGrid m = run_sweep(c, {1, {}});
  EXPECT_EQ(m.at(0, 0), 0.0);
  EXPECT_GT(m.at(0, 3), 0.0);
  c.metric = Metric::ThresholdCompare;
  const PhaseGrid t = run_sweep(c, {1, {}});
  std::size_t agree = 0;
  for (double v : t.values) agree += v == 0.0 ? 1 : 0;
  EXPECT_GE(agree, t.values.size() - 2);
  EXPECT_THROW(threshold_extract(t), std::invalid_argument);
}

TEST(Sweep, FailedPointsBecomeNaN) {
  SweepConfig c;
  c.base_model = gain_chain(4, 1.0, 0.5);
  c.axis1 = {SweepParameter::T2, 0.0, 0.5, 2};
  c.axis2 = {SweepParameter::G, 0.0, 1.0, 2};
  const PhaseGrid g = run_sweep(c, {1, {}});
  EXPECT_FALSE(std::isnan(g.at(0, 0)));
  EXPECT_TRUE(std::isnan(g.at(1, 0)));
  EXPECT_TRUE(std::isnan(g.at(1, 1)));
  EXPECT_EQ(g.diagnostics.size(), 2u);
}

TEST(Sweep, CacheResumesAndSkipsFinishedPoints) {
  const fs::path dir = fresh_dir("cache");
  const SweepConfig c = ring_sweep();
  const PhaseGrid full = run_sweep(c, {1, dir});
  EXPECT_EQ(full.cached_points, 0u);
  const fs::path file = dir / (full.config_hash + ".cache.csv");
  ASSERT_TRUE(fs::exists(file));

  const PhaseGrid again = run_sweep(c, {2, dir});
  EXPECT_EQ(again.cached_points, full.values.size());
  for (std::size_t k = 0; k < full.values.size(); ++k)
    EXPECT_EQ(std::memcmp(&full.values[k], &again.values[k], sizeof(double)), 0);

  // an interrupted run leaves a partial file, possibly with a torn last line
  std::istringstream lines(slurp(file));
  std::string line, kept;
  for (int n = 0; n < 10 && std::getline(lines, line); ++n) kept += line + "\n";
  {
    std::ofstream out(file, std::ios::trunc);
    out << kept << "2,5,";
  }
  const PhaseGrid resumed = run_sweep(c, {1, dir});
  EXPECT_EQ(resumed.cached_points, 10u);
  for (std::size_t k = 0; k < full.values.size(); ++k) EXPECT_EQ(full.values[k], resumed.values[k]);
  EXPECT_EQ(run_sweep(c, {1, dir}).cached_points, full.values.size());
  fs::remove_all(dir);
}

TEST(Sweep, CacheIsKeyedByConfig) {
  const fs::path dir = fresh_dir("keyed");
  SweepConfig a = ring_sweep();
  SweepConfig b = a;
  b.axis2.max = 1.4;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a), config_hash(ring_sweep()));
  run_sweep(a, {1, dir});
  EXPECT_EQ(run_sweep(b, {1, dir}).cached_points, 0u);
  fs::remove_all(dir);
}

TEST(Onsets, SyntheticGrid) {
  PhaseGrid g;
  g.axis1 = {SweepParameter::Flux, 0.0, 1.0, 3};
  g.axis2 = {SweepParameter::G, 0.0, 1.0, 5};
  g.values = {0, 0, 0.1, 0.2, 0.3,  // onset between 0.25 and 0.5
              0.5, 0.5, 0.5, 0.5, 0.5,  // broken from the start
              0, 0, 0, 0, 0};
  const auto o = threshold_extract(g);
  ASSERT_EQ(o.size(), 3u);
  EXPECT_DOUBLE_EQ(*o[0].onset, 0.375);
  EXPECT_DOUBLE_EQ(*o[1].onset, 0.0);
  EXPECT_FALSE(o[2].onset);
  EXPECT_DOUBLE_EQ(o[2].axis1_value, 1.0);
}

TEST(Config, ParsesAndValidates) {
  const json ok = json::parse(R"({
    "family": "flux_ring", "L": 30, "g": 0.5, "phi": 1.5707963267948966,
    "axis1": {"parameter": "flux", "min": 0.2, "max": 1.0, "steps": 3},
    "axis2": {"parameter": "g", "min": 0.0, "max": 1.5, "steps": 16}})");
  const SweepConfig c = sweep_from_config(ok);
  EXPECT_EQ(c.axis1.parameter, SweepParameter::Flux);
  EXPECT_EQ(c.metric, Metric::PCom);
  EXPECT_FALSE(c.excludes_bound_states());
  EXPECT_TRUE(sweep_from_config(json::parse(R"({"family": "nnn_chain", "L": 30, "t2": 0.3, "g": 0.5,
    "axis1": {"parameter": "t2", "min": 0, "max": 0.5, "steps": 2},
    "axis2": {"parameter": "g", "min": 0, "max": 1, "steps": 2}})"))
                  .excludes_bound_states());

  auto path_of = [&](const std::string& key, const json& value) {
    json d = ok;
    d[json::json_pointer(key)] = value;
    try {
      (void)sweep_from_config(d);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(path_of("/axis1/steps", 1), "/axis1/steps");
  EXPECT_EQ(path_of("/axis2/parameter", "mass"), "/axis2/parameter");
  EXPECT_EQ(path_of("/axis2/min", "low"), "/axis2/min");
  EXPECT_EQ(path_of("/metric", "entropy"), "/metric");
  EXPECT_EQ(path_of("/g", 0), "/axis2/parameter");
  json missing = ok;
  missing.erase("axis2");
  EXPECT_THROW(sweep_from_config(missing), ConfigError);
}

TEST(Output, WritesGridAndSidecar) {
  const fs::path dir = fresh_dir("out");
  SweepConfig c = ring_sweep(20);
  c.axis2.steps = 3;
  const PhaseGrid g = run_sweep(c, {1, {}});
  const fs::path csv = write_phase_grid(g, dir, to_json(c));
  EXPECT_EQ(csv.filename().string(), "scan_" + g.config_hash + ".csv");
  const std::string body = slurp(csv);
  EXPECT_EQ(body.substr(0, body.find('\n')), "axis1,axis2,value");
  EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 1 + 9);
  const json side = json::parse(slurp(dir / ("scan_" + g.config_hash + ".json")));
  EXPECT_EQ(side["config_hash"], g.config_hash);
  EXPECT_EQ(side["version"], kVersion);
  EXPECT_EQ(side["axes"].size(), 2u);
  EXPECT_TRUE(side.contains("timestamp"));
  fs::remove_all(dir);
}

TEST(Output, NumbersRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 2.0 / 3.0 * 1e-300, 12345.678901234567}) {
    EXPECT_EQ(std::stod(format_number(x)), x);
  }
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
}
