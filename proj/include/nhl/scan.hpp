#pragma once

// Two-parameter sweeps over model families with a worker pool and an
// on-disk per-point cache.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nhl/csv.hpp"
#include "nhl/effective.hpp"
#include "nhl/eigensolver.hpp"
#include "nhl/lattice.hpp"
#include "nhl/model_json.hpp"
#include "nhl/spectral_analysis.hpp"

namespace nhl {

inline constexpr const char* kVersion = "1.0.0";

enum class SweepParameter {
  FluxTheta,  // flux per bond
  Flux,       // total flux, theta = value / L
  G,          // magnitude of every perturbation amplitude
  Phi,        // phase: +phi on left-half rows, -phi on their mirror rows
  T2,         // next-nearest-neighbour hopping
};

enum class Metric { PCom, MaxImE, ThresholdCompare };

inline const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::FluxTheta: return "flux_theta";
    case SweepParameter::Flux: return "flux";
    case SweepParameter::G: return "g";
    case SweepParameter::Phi: return "phi";
    case SweepParameter::T2: return "t2";
  }
  return "?";
}

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::PCom: return "pcom";
    case Metric::MaxImE: return "max_im";
    case Metric::ThresholdCompare: return "threshold_compare";
  }
  return "?";
}

struct Axis {
  SweepParameter parameter = SweepParameter::G;
  double min = 0.0;
  double max = 1.0;
  std::size_t steps = 2;

  double value(std::size_t i) const {
    if (i + 1 == steps) return max;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
};

struct SweepConfig {
  ModelSpec base_model;
  Axis axis1;
  Axis axis2;
  Metric metric = Metric::PCom;
  std::optional<bool> exclude_bound_states;  // default: true for open chains
  std::optional<double> tol_imag;

  bool excludes_bound_states() const {
    return exclude_bound_states.value_or(base_model.boundary == Boundary::Open);
  }
};

struct PhaseGrid {
  Axis axis1;
  Axis axis2;
  Metric metric = Metric::PCom;
  std::vector<double> values;  // row-major: axis1 index major
  std::string config_hash;
  std::string version = kVersion;
  std::vector<std::string> diagnostics;
  std::size_t cached_points = 0;

  double at(std::size_t i, std::size_t j) const { return values[i * axis2.steps + j]; }
};

// Sets one sweep parameter on a model.
inline ModelSpec with_parameter(ModelSpec s, SweepParameter p, double v) {
  switch (p) {
    case SweepParameter::FluxTheta: s.flux_theta = v; break;
    case SweepParameter::Flux: s.flux_theta = v / static_cast<double>(s.L); break;
    case SweepParameter::G:
      for (auto& t : s.perturbations) t.amplitude = std::polar(v, std::arg(t.amplitude));
      break;
    case SweepParameter::Phi:
      for (auto& t : s.perturbations) {
        const double sign = 2 * t.site_i <= s.L ? 1.0 : -1.0;
        t.amplitude = std::polar(std::abs(t.amplitude), sign * v);
      }
      break;
    case SweepParameter::T2: s.hoppings.set(2, v); break;
  }
  return s;
}

// Flux-ring parameters read back from a periodic model with hopping t and
// the two on-site boundary terms. Throws when the model has another shape.
inline FluxRingParams flux_ring_params_of(const ModelSpec& s) {
  if (s.boundary != Boundary::Periodic || s.hoppings.max_range() != 1 || s.hoppings[1].imag() != 0.0)
    throw InvalidModel("model is not a flux ring with real nearest-neighbour hopping");
  FluxRingParams p;
  p.L = s.L;
  p.t = s.hoppings[1].real();
  p.theta = s.flux_theta > std::numbers::pi ? s.flux_theta - 2.0 * std::numbers::pi : s.flux_theta;
  for (const auto& t : s.perturbations) {
    if (t.site_i != t.site_j || (t.site_i != 1 && t.site_i != s.L))
      throw InvalidModel("flux ring perturbations must be on-site terms at sites 1 and L");
    if (t.site_i == 1) {
      p.g = std::abs(t.amplitude);
      p.phi = std::arg(t.amplitude);
    }
  }
  return p;
}

inline json to_json(const Axis& a) {
  return {{"parameter", to_string(a.parameter)}, {"min", a.min}, {"max", a.max}, {"steps", a.steps}};
}

inline json to_json(const SweepConfig& c) {
  json j;
  j["model"] = to_json(c.base_model);
  j["axis1"] = to_json(c.axis1);
  j["axis2"] = to_json(c.axis2);
  j["metric"] = to_string(c.metric);
  j["exclude_bound_states"] = c.excludes_bound_states();
  if (c.tol_imag) j["tol_imag"] = *c.tol_imag;
  return j;
}

inline std::string config_hash(const SweepConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

inline Axis axis_from_json(const json& j, const std::string& path) {
  using namespace cfg;
  Axis a;
  const std::string p = text(j, "parameter", path);
  if (p == "flux_theta" || p == "theta") {
    a.parameter = SweepParameter::FluxTheta;
  } else if (p == "flux") {
    a.parameter = SweepParameter::Flux;
  } else if (p == "g") {
    a.parameter = SweepParameter::G;
  } else if (p == "phi") {
    a.parameter = SweepParameter::Phi;
  } else if (p == "t2") {
    a.parameter = SweepParameter::T2;
  } else {
    throw ConfigError(join(path, "parameter"), "unknown sweep parameter \"" + p + "\"");
  }
  a.min = number(j, "min", path);
  a.max = number(j, "max", path);
  a.steps = count(j, "steps", path);
  if (a.steps < 2) throw ConfigError(join(path, "steps"), "at least 2 steps required");
  return a;
}

inline SweepConfig sweep_from_config(const json& j) {
  using namespace cfg;
  SweepConfig c;
  c.base_model = model_from_config(j);
  c.axis1 = axis_from_json(field(j, "axis1", ""), "/axis1");
  c.axis2 = axis_from_json(field(j, "axis2", ""), "/axis2");
  if (j.contains("metric")) {
    const std::string m = text(j, "metric", "");
    if (m == "pcom") {
      c.metric = Metric::PCom;
    } else if (m == "max_im") {
      c.metric = Metric::MaxImE;
    } else if (m == "threshold_compare") {
      c.metric = Metric::ThresholdCompare;
    } else {
      throw ConfigError("/metric", "expected pcom, max_im or threshold_compare");
    }
  }
  if (j.contains("exclude_bound_states")) c.exclude_bound_states = flag_or(j, "exclude_bound_states", true, "");
  if (j.contains("tol_imag")) c.tol_imag = number(j, "tol_imag", "");
  for (const auto* ax : {&c.axis1, &c.axis2}) {
    const bool needs_pert = ax->parameter == SweepParameter::G || ax->parameter == SweepParameter::Phi;
    if (needs_pert && c.base_model.perturbations.empty())
      throw ConfigError(ax == &c.axis1 ? "/axis1/parameter" : "/axis2/parameter",
                        "sweeping g or phi needs perturbation terms in the model");
    const bool needs_ring = ax->parameter == SweepParameter::FluxTheta || ax->parameter == SweepParameter::Flux;
    if (needs_ring && c.base_model.boundary != Boundary::Periodic)
      throw ConfigError(ax == &c.axis1 ? "/axis1/parameter" : "/axis2/parameter", "flux needs periodic boundaries");
  }
  if (c.metric == Metric::ThresholdCompare) {
    try {
      (void)flux_ring_params_of(c.base_model);
    } catch (const InvalidModel& e) {
      throw ConfigError("/metric", std::string("threshold_compare needs a flux ring: ") + e.what());
    }
  }
  return c;
}

// Metric value for a single model.
inline double evaluate_point(const ModelSpec& spec, Metric metric, bool exclude_bound, std::optional<double> tol_imag) {
  const DenseMatrix h = build_hamiltonian(spec);
  const double scale = spectral_norm_estimate(h);
  std::vector<cplx> w;
  SpectrumClassification cls;
  if (exclude_bound) {
    const Spectrum s = eig(h);
    BoundStateOptions opt;
    opt.tol_imag = tol_imag;
    cls = classify_continuum(spec, s, scale, opt);
    w = s.eigenvalues;
  } else {
    w = eigenvalues(h);
    cls = classify_eigenvalues(w, scale, tol_imag);
  }
  switch (metric) {
    case Metric::PCom: return cls.p_com;
    case Metric::MaxImE: {
      double m = 0.0;
      for (std::size_t i : cls.complex_indices) m = std::max(m, std::abs(w[i].imag()));
      return m;
    }
    case Metric::ThresholdCompare: {
      FluxRingParams p = flux_ring_params_of(spec);
      const PbcThreshold th = threshold_pbc(p.L, std::abs(p.theta), p.phi, p.t);
      const bool predicted = th.finite && p.g > th.g_c;
      const bool observed = cls.n_com > 0;
      return predicted == observed ? 0.0 : 1.0;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace detail {

inline std::map<std::pair<std::size_t, std::size_t>, double> load_cache(const std::filesystem::path& file) {
  std::map<std::pair<std::size_t, std::size_t>, double> out;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c)) continue;
    try {
      std::size_t ua = 0, ub = 0;
      const std::size_t i = std::stoul(a, &ua);
      const std::size_t j = std::stoul(b, &ub);
      if (ua != a.size() || ub != b.size() || c.empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') continue;
      out[{i, j}] = v;
    } catch (const std::exception&) {
      continue;
    }
  }
  return out;
}

}  // namespace detail

struct SweepOptions {
  std::size_t threads = 0;              // 0: hardware concurrency
  std::filesystem::path cache_dir;      // empty: no cache
};

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Evaluates the metric on every grid point. Failures become NaN with a
// diagnostic; the grid does not depend on thread count or scheduling.
inline PhaseGrid run_sweep(const SweepConfig& config, const SweepOptions& opt = {}) {
  PhaseGrid grid;
  grid.axis1 = config.axis1;
  grid.axis2 = config.axis2;
  grid.metric = config.metric;
  grid.config_hash = config_hash(config);
  const std::size_t n1 = config.axis1.steps, n2 = config.axis2.steps;
  if (n1 < 2 || n2 < 2) throw std::invalid_argument("sweep axes need at least 2 steps");
  const std::size_t total = n1 * n2;
  grid.values.assign(total, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> diag(total);
  std::vector<bool> done(total, false);

  std::ofstream cache_out;
  std::mutex cache_mutex;
  if (!opt.cache_dir.empty()) {
    std::filesystem::create_directories(opt.cache_dir);
    const auto file = opt.cache_dir / (grid.config_hash + ".cache.csv");
    for (const auto& [key, v] : detail::load_cache(file)) {
      if (key.first >= n1 || key.second >= n2) continue;
      const std::size_t idx = key.first * n2 + key.second;
      grid.values[idx] = v;
      done[idx] = true;
      ++grid.cached_points;
    }
    // an interrupted run may leave a torn last line; start on a fresh one
    bool torn = false;
    {
      std::ifstream in(file, std::ios::binary | std::ios::ate);
      if (in && in.tellg() > 0) {
        in.seekg(-1, std::ios::end);
        torn = in.get() != '\n';
      }
    }
    cache_out.open(file, std::ios::app);
    if (torn) cache_out << '\n';
  }

  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < total; ++k)
    if (!done[k]) todo.push_back(k);

  const bool exclude = config.excludes_bound_states();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      const std::size_t idx = todo[t];
      const std::size_t i = idx / n2, j = idx % n2;
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        ModelSpec m = with_parameter(config.base_model, config.axis1.parameter, config.axis1.value(i));
        m = with_parameter(std::move(m), config.axis2.parameter, config.axis2.value(j));
        v = evaluate_point(m, config.metric, exclude, config.tol_imag);
      } catch (const std::exception& e) {
        diag[idx] = "point (" + std::to_string(i) + "," + std::to_string(j) + "): " + e.what();
      }
      grid.values[idx] = v;
      if (cache_out.is_open()) {
        std::lock_guard<std::mutex> lock(cache_mutex);
        cache_out << i << ',' << j << ',' << format_number(v) << '\n';
        cache_out.flush();
      }
    }
  };
  const std::size_t nthreads = std::min(resolve_threads(opt.threads), std::max<std::size_t>(todo.size(), 1));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& d : diag)
    if (!d.empty()) grid.diagnostics.push_back(std::move(d));
  return grid;
}

struct Onset {
  double axis1_value = 0.0;
  std::optional<double> onset;  // nullopt: no positive value in the column
};

// Per axis1 value, the first axis2 point with a positive metric; the onset
// is placed midway between it and the previous grid point.
inline std::vector<Onset> threshold_extract(const PhaseGrid& grid) {
  if (grid.metric != Metric::PCom) throw std::invalid_argument("threshold extraction needs a pcom grid");
  std::vector<Onset> out;
  for (std::size_t i = 0; i < grid.axis1.steps; ++i) {
    Onset o;
    o.axis1_value = grid.axis1.value(i);
    for (std::size_t j = 0; j < grid.axis2.steps; ++j) {
      if (grid.at(i, j) > 0.0) {
        o.onset = j == 0 ? grid.axis2.value(0) : 0.5 * (grid.axis2.value(j - 1) + grid.axis2.value(j));
        break;
      }
    }
    out.push_back(o);
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void write_grid_csv(const PhaseGrid& g, std::ostream& os) {
  CsvWriter w(os);
  w.row("axis1", "axis2", "value");
  for (std::size_t i = 0; i < g.axis1.steps; ++i)
    for (std::size_t j = 0; j < g.axis2.steps; ++j) w.row(g.axis1.value(i), g.axis2.value(j), g.at(i, j));
}

// Writes scan_<hash>.csv and scan_<hash>.json into dir; returns the CSV path.
inline std::filesystem::path write_phase_grid(const PhaseGrid& g, const std::filesystem::path& dir,
                                              const json& config_echo = json::object()) {
  std::filesystem::create_directories(dir);
  const auto csv = dir / ("scan_" + g.config_hash + ".csv");
  {
    std::ofstream os(csv);
    write_grid_csv(g, os);
  }
  json side;
  side["axes"] = {to_json(g.axis1), to_json(g.axis2)};
  side["metric"] = to_string(g.metric);
  side["config_hash"] = g.config_hash;
  side["version"] = g.version;
  side["timestamp"] = utc_timestamp();
  side["config"] = config_echo;
  side["diagnostics"] = g.diagnostics;
  side["cached_points"] = g.cached_points;
  std::ofstream os(dir / ("scan_" + g.config_hash + ".json"));
  os << side.dump(2) << '\n';
  return csv;
}

}  // namespace nhl
