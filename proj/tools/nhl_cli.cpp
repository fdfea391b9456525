// nhl: command-line front end.
//
//   nhl <spectrum|scan|scaling|criterion|nonbloch|effective> --config PATH
//       [--out DIR] [--threads N] [--override K=V]... [--tol-imag X]
//
// Exit status: 0 success, 1 configuration error, 2 numerical failure.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nhl/nhl.hpp"

namespace fs = std::filesystem;
using namespace nhl;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::size_t threads = 0;
  std::vector<std::string> overrides;
  std::optional<double> tol_imag;
};

struct Context {
  Options opt;
  json config;
  fs::path out;
};

json read_config(const Options& opt) {
  std::ifstream in(opt.config);
  if (!in) throw ConfigError("/", "cannot open config file " + opt.config);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("/", "config file " + opt.config + " is not valid JSON");
  for (const auto& o : opt.overrides) apply_override(doc, o);
  return doc;
}

json sidecar(const Context& ctx, const std::string& command) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["timestamp"] = utc_timestamp();
  j["config"] = ctx.config;
  j["overrides"] = ctx.opt.overrides;
  if (ctx.opt.tol_imag) j["tol_imag_override"] = *ctx.opt.tol_imag;
  return j;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  os << j.dump(2) << '\n';
}

std::optional<double> tol_from(const Context& ctx) {
  if (ctx.opt.tol_imag) return ctx.opt.tol_imag;
  if (ctx.config.is_object() && ctx.config.contains("tol_imag")) return cfg::number(ctx.config, "tol_imag", "");
  return std::nullopt;
}

std::string short_number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

int cmd_spectrum(const Context& ctx) {
  const ModelSpec spec = model_from_config(ctx.config);
  const DenseMatrix h = build_hamiltonian(spec);
  const Spectrum s = eig(h);
  const double scale = spectral_norm_estimate(h);
  BoundStateOptions bo;
  bo.tol_imag = tol_from(ctx);
  const auto bound = detect_bound_states(spec, s, scale, bo);
  const auto cls = classify_eigenvalues(s.eigenvalues, scale, bo.tol_imag);
  const auto cont = classify_eigenvalues(s.eigenvalues, scale, bo.tol_imag, bound);
  const auto metrics = state_metrics(spec, s, bound);
  {
    std::ofstream os(ctx.out / "spectrum.csv");
    CsvWriter w(os);
    w.row("index", "re_E", "im_E", "mean_position", "half_asymmetry", "c_fit", "is_bound");
    for (const auto& m : metrics)
      w.row(m.index, m.energy.real(), m.energy.imag(), m.mean_position, m.half_asymmetry, m.c_fit, m.is_bound);
  }
  json j = sidecar(ctx, "spectrum");
  j["L"] = spec.L;
  j["frobenius_norm"] = scale;
  j["tol_imag"] = cls.tol_imag;
  j["p_com"] = cls.p_com;
  j["n_com"] = cls.n_com;
  j["p_com_continuum"] = cont.p_com;
  j["bound_states"] = bound;
  j["max_pairing_distance"] = cls.max_pairing_distance();
  j["pt_symmetric"] = is_pt_symmetric(spec);
  write_json(ctx.out / "spectrum.json", j);
  std::cout << "L=" << spec.L << " p_com=" << short_number(cls.p_com) << " bound=" << bound.size()
            << " -> " << (ctx.out / "spectrum.csv").string() << '\n';
  return 0;
}

int cmd_scan(const Context& ctx) {
  SweepConfig c = sweep_from_config(ctx.config);
  if (ctx.opt.tol_imag) c.tol_imag = ctx.opt.tol_imag;
  SweepOptions so;
  so.threads = ctx.opt.threads;
  so.cache_dir = ctx.out / "cache";
  const PhaseGrid g = run_sweep(c, so);
  const fs::path csv = write_phase_grid(g, ctx.out, ctx.config);
  if (g.metric == Metric::PCom) {
    std::ofstream os(ctx.out / ("onset_" + g.config_hash + ".csv"));
    CsvWriter w(os);
    w.row("axis1", "onset");
    for (const auto& o : threshold_extract(g))
      w.row(o.axis1_value, o.onset ? *o.onset : std::numeric_limits<double>::quiet_NaN());
  }
  std::cout << "grid " << g.axis1.steps << "x" << g.axis2.steps << " hash=" << g.config_hash
            << " cached=" << g.cached_points << " failed=" << g.diagnostics.size() << " -> " << csv.string() << '\n';
  return g.diagnostics.empty() ? 0 : 2;
}

int cmd_scaling(const Context& ctx) {
  const ModelSpec base = model_from_config(ctx.config);
  std::vector<std::size_t> sizes;
  const json& js = cfg::field(ctx.config, "sizes", "");
  if (!js.is_array()) throw ConfigError("/sizes", "expected an array of sizes");
  for (std::size_t k = 0; k < js.size(); ++k) sizes.push_back(cfg::count(js[k], "/sizes/" + std::to_string(k)));
  if (sizes.size() < 3) throw ConfigError("/sizes", "at least 3 sizes required");
  for (std::size_t k = 1; k < sizes.size(); ++k)
    if (sizes[k] <= sizes[k - 1]) throw ConfigError("/sizes/" + std::to_string(k), "sizes must increase");
  StateSelection sel = StateSelection::MedianImaginary;
  if (ctx.config.contains("selection")) {
    const std::string s = cfg::text(ctx.config, "selection", "");
    if (s == "max") {
      sel = StateSelection::MaxImaginary;
    } else if (s != "median") {
      throw ConfigError("/selection", "expected \"median\" or \"max\"");
    }
  }
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    try {
      (void)resized(base, sizes[k]);
    } catch (const InvalidModel& e) {
      throw ConfigError("/sizes/" + std::to_string(k), e.what());
    }
  }
  const ScaleFreeFit fit = fit_scale_free([&](std::size_t L) { return resized(base, L); }, sizes, sel);
  {
    std::ofstream os(ctx.out / "scaling.csv");
    CsvWriter w(os);
    w.row("L", "c", "max_abs_im", "mean_im", "selected_im");
    for (std::size_t k = 0; k < sizes.size(); ++k)
      w.row(sizes[k], fit.c_estimates[k], fit.max_abs_im[k], fit.mean_im[k], fit.selected_im[k]);
  }
  json j = sidecar(ctx, "scaling");
  j["status"] = fit.status;
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  j["c_mean"] = num(fit.c_mean);
  j["c_relative_spread"] = num(fit.c_relative_spread);
  j["im_scaling_exponent"] = num(fit.im_scaling_exponent);
  j["mean_im_exponent"] = num(fit.mean_im_exponent);
  j["selected_im_exponent"] = num(fit.selected_im_exponent);
  write_json(ctx.out / "scaling.json", j);
  std::cout << "status=" << fit.status << " c_spread=" << short_number(fit.c_relative_spread)
            << " im_exponent=" << short_number(fit.im_scaling_exponent) << '\n';
  return 0;
}

int cmd_criterion(const Context& ctx) {
  const ModelSpec spec = model_from_config(ctx.config);
  if (spec.boundary != Boundary::Open) throw ConfigError("/boundary", "criterion needs an open chain");
  BoundStateOptions bo;
  bo.tol_imag = tol_from(ctx);
  const CriterionReport r = criterion_check(spec, bo);
  json j = sidecar(ctx, "criterion");
  json win = json::array();
  for (const auto& [lo, hi] : r.window.intervals) win.push_back({lo, hi});
  j["window"] = win;
  j["multiplicity"] = r.window.multiplicity;
  json viol = json::array();
  for (const auto& v : r.violations) viol.push_back({{"index", v.index}, {"reE", v.energy.real()}, {"imE", v.energy.imag()}});
  j["violations"] = viol;
  j["tolerance"] = r.tolerance;
  j["bound_states"] = r.bound_states;
  j["continuum_complex"] = r.continuum_complex.size();
  j["p_com_continuum"] = r.p_com;
  write_json(ctx.out / "criterion.json", j);
  std::cout << "window:";
  if (r.window.intervals.empty()) std::cout << " empty";
  for (const auto& [lo, hi] : r.window.intervals) std::cout << " (" << short_number(lo) << ", " << short_number(hi) << ")";
  std::cout << "\ncontinuum complex: " << r.continuum_complex.size() << "\nviolations: " << r.violations.size() << '\n';
  return 0;
}

int cmd_nonbloch(const Context& ctx) {
  const ModelSpec spec = model_from_config(ctx.config);
  const std::vector<cplx> w = eigenvalues(build_hamiltonian(spec));
  json j = sidecar(ctx, "nonbloch");
  double worst = 0.0;
  std::size_t ill = 0;
  {
    std::ofstream os(ctx.out / "determinant.csv");
    CsvWriter cw(os);
    cw.row("index", "re_E", "im_E", "normalized_det", "log_scale", "ill_conditioned");
    for (std::size_t i = 0; i < w.size(); ++i) {
      BoundaryDeterminant d;
      try {
        d = boundary_determinant_at(spec, w[i]);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("/perturbations", e.what());
      }
      worst = std::max(worst, d.normalized);
      if (d.ill_conditioned) ++ill;
      cw.row(i, w[i].real(), w[i].imag(), d.normalized, d.log_scale, d.ill_conditioned);
    }
  }
  const std::size_t n_random = cfg::count_or(ctx.config, "random_energies", 100, "");
  const std::size_t seed = cfg::count_or(ctx.config, "seed", 1, "");
  double lo_re = w.front().real(), hi_re = lo_re, lo_im = w.front().imag(), hi_im = lo_im;
  for (const auto& e : w) {
    lo_re = std::min(lo_re, e.real());
    hi_re = std::max(hi_re, e.real());
    lo_im = std::min(lo_im, e.imag());
    hi_im = std::max(hi_im, e.imag());
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ure(lo_re - 1.0, hi_re + 1.0), uim(lo_im - 1.0, hi_im + 1.0);
  double best_random = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < n_random;) {
    const cplx E{ure(rng), uim(rng)};
    double d = std::numeric_limits<double>::infinity();
    for (const auto& e : w) d = std::min(d, std::abs(e - E));
    if (d < 0.05) continue;
    ++n;
    best_random = std::min(best_random, boundary_determinant_at(spec, E).normalized);
  }
  j["max_normalized_det_at_eigenvalues"] = worst;
  j["min_normalized_det_at_random"] = n_random > 0 ? json(best_random) : json(nullptr);
  j["ill_conditioned"] = ill;

  if (spec.boundary == Boundary::Periodic && spec.max_range() == 1 && !spec.perturbations.empty()) {
    FluxRingParams p;
    try {
      p = flux_ring_params_of(spec);
    } catch (const InvalidModel&) {
      p.L = 0;
    }
    if (p.L > 0) {
      UnitaryScanParams up;
      up.L = p.L;
      up.t = p.t;
      up.theta = p.theta;
      up.phi = p.phi;
      const json u = ctx.config.value("unitary", json::object());
      up.g_min = cfg::number_or(u, "g_min", 0.0, "/unitary");
      up.g_max = cfg::number_or(u, "g_max", 3.0, "/unitary");
      up.g_steps = cfg::count_or(u, "g_steps", 301, "/unitary");
      const std::size_t res = cfg::count_or(u, "gamma_resolution", 4000, "/unitary");
      if (res < 1000) throw ConfigError("/unitary/gamma_resolution", "must be at least 1000");
      if (up.g_steps < 2 || !(up.g_max > up.g_min)) throw ConfigError("/unitary", "need g_steps >= 2 and g_max > g_min");
      const UnitaryScanResult r = unitary_scan(up, res);
      {
        std::ofstream os(ctx.out / "unitary.csv");
        CsvWriter cw(os);
        cw.row("gamma", "G_plus", "G_minus", "discriminant_negative");
        for (std::size_t k = 0; k < r.gamma_grid.size(); ++k)
          cw.row(r.gamma_grid[k], r.g_plus[k], r.g_minus[k], static_cast<bool>(r.discriminant_negative[k]));
      }
      json iv = json::array();
      for (const auto& [a, b] : r.broken_g_intervals) iv.push_back({a, b});
      j["broken_g_intervals"] = iv;
      const auto sols = asymptotic_broken_solver(p);
      json as = json::array();
      for (const auto& s : sols)
        as.push_back({{"gamma", s.gamma}, {"delta", s.delta}, {"reE", s.energy.real()}, {"imE", s.energy.imag()}});
      j["asymptotic_solutions"] = as;
    }
  }
  write_json(ctx.out / "nonbloch.json", j);
  std::cout << "max normalized det at eigenvalues: " << short_number(worst)
            << "\nmin normalized det at random energies: " << short_number(best_random) << '\n';
  return 0;
}

int cmd_effective(const Context& ctx) {
  const ModelSpec spec = model_from_config(ctx.config);
  FluxRingParams p;
  try {
    p = flux_ring_params_of(spec);
  } catch (const InvalidModel& e) {
    throw ConfigError("/family", e.what());
  }
  const double theta = std::abs(p.theta);
  const PbcThreshold pred = threshold_pbc(p.L, theta, p.phi, p.t);
  const PbcThreshold lit = threshold_pbc_literal(p.L, theta, p.phi, p.t);

  const json gs = ctx.config.value("g_scan", json::object());
  const double g_max = cfg::number_or(gs, "max", pred.finite ? 2.0 * pred.g_c + 0.5 : 3.0, "/g_scan");
  const std::size_t steps = cfg::count_or(gs, "steps", 201, "/g_scan");
  if (steps < 2 || !(g_max > 0.0)) throw ConfigError("/g_scan", "need steps >= 2 and max > 0");
  std::optional<double> observed;
  double prev = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double g = g_max * static_cast<double>(k) / static_cast<double>(steps - 1);
    FluxRingParams q = p;
    q.g = g;
    const DenseMatrix h = build_hamiltonian(flux_ring(q));
    const auto cls = classify_eigenvalues(eigenvalues(h), spectral_norm_estimate(h), tol_from(ctx));
    if (cls.n_com > 0) {
      observed = k == 0 ? 0.0 : 0.5 * (prev + g);
      break;
    }
    prev = g;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double gp = pred.finite ? pred.g_c : nan;
  const double go = observed ? *observed : nan;
  {
    std::ofstream os(ctx.out / "thresholds.csv");
    CsvWriter w(os);
    w.row("theta", "phi", "g_c_predicted", "g_c_literal", "g_c_observed", "relative_error");
    w.row(theta, p.phi, gp, lit.finite ? lit.g_c : nan, go, std::abs(go - gp) / gp);
  }
  {
    std::ofstream os(ctx.out / "modes.csv");
    CsvWriter w(os);
    w.row("n", "k", "delta12", "d0", "dx", "dy", "re_E_plus", "im_E_plus", "re_E_minus", "im_E_minus");
    for (std::size_t n = 1; 2 * n < p.L; ++n) {
      const EffectiveBlock b = eff_h_pbc(n, p.L, theta, p.phi, p.g, p.t);
      const auto [ep, em] = two_level_eigenvalues(b.matrix);
      const auto& d = *b.decomposition;
      w.row(n, 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(p.L), d.delta12.real(),
            d.d0.real(), d.dx.real(), d.dy.real(), ep.real(), ep.imag(), em.real(), em.imag());
    }
  }
  json j = sidecar(ctx, "effective");
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  j["g_c_predicted"] = num(gp);
  j["g_c_literal"] = num(lit.finite ? lit.g_c : nan);
  j["g_c_observed"] = num(go);
  j["n_min"] = pred.n_min;
  write_json(ctx.out / "effective.json", j);
  std::cout << "g_c predicted=" << short_number(gp) << " literal=" << short_number(lit.finite ? lit.g_c : nan)
            << " observed=" << short_number(go) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-Hermitian lattice spectra toolkit"};
  app.require_subcommand(1);
  Options opt;
  std::optional<double> tol;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"spectrum", "eigenvalues and per-state metrics"},
      {"scan", "two-parameter phase-diagram sweep"},
      {"scaling", "scale-free fit over system sizes"},
      {"criterion", "open-chain energy-window check"},
      {"nonbloch", "boundary determinants and unitary scan"},
      {"effective", "effective-theory threshold tables"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opt.config, "config JSON")->required();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--threads", opt.threads, "worker threads (0: all cores)");
    sub->add_option("--override", opt.overrides, "KEY=VALUE applied to the config (repeatable)");
    sub->add_option("--tol-imag", tol, "absolute real/complex cut");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (tol) {
    if (!(*tol > 0.0)) {
      std::cerr << "error: --tol-imag must be positive\n";
      return 1;
    }
    opt.tol_imag = tol;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    Context ctx;
    ctx.opt = opt;
    ctx.config = read_config(opt);
    ctx.out = opt.out;
    fs::create_directories(ctx.out);
    if (cmd == "spectrum") return cmd_spectrum(ctx);
    if (cmd == "scan") return cmd_scan(ctx);
    if (cmd == "scaling") return cmd_scaling(ctx);
    if (cmd == "criterion") return cmd_criterion(ctx);
    if (cmd == "nonbloch") return cmd_nonbloch(ctx);
    if (cmd == "effective") return cmd_effective(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return 1;
  } catch (const InvalidModel& e) {
    std::cerr << "config error at /: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error at /: " << e.what() << '\n';
    return 1;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
