#pragma once

// Diagnostics derived from a Spectrum: complex fraction, position
// observables, decay-constant fits and bound-state detection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhl/eigensolver.hpp"
#include "nhl/lattice.hpp"

namespace nhl {

struct SpectrumClassification {
  double p_com = 0.0;
  std::size_t n_com = 0;
  std::vector<std::size_t> complex_indices;
  double tol_imag = 0.0;
  // parallel to complex_indices: nearest eigenvalue to conj(E) and its distance
  std::vector<std::size_t> conjugate_partner;
  std::vector<double> pairing_distance;

  double max_pairing_distance() const {
    double m = 0.0;
    for (double d : pairing_distance) m = std::max(m, d);
    return m;
  }
};

inline constexpr double kRelativeImagTolerance = 1e-8;
inline constexpr double kBoundDecayCut = 10.0;

// Real/complex cut at tol = 1e-8 * scale unless tol_override is given.
// Indices listed in `excluded` are skipped; p_com stays n_com / L with L the
// full spectrum size.
inline SpectrumClassification classify_eigenvalues(const std::vector<cplx>& w, double scale,
                                                   std::optional<double> tol_override = std::nullopt,
                                                   const std::vector<std::size_t>& excluded = {}) {
  if (!tol_override && !(scale > 0.0)) throw std::invalid_argument("classification scale must be positive");
  SpectrumClassification out;
  out.tol_imag = tol_override ? *tol_override : kRelativeImagTolerance * scale;
  std::vector<bool> skip(w.size(), false);
  for (std::size_t k : excluded)
    if (k < w.size()) skip[k] = true;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (skip[i] || !(std::abs(w[i].imag()) > out.tol_imag)) continue;
    out.complex_indices.push_back(i);
    const cplx target = std::conj(w[i]);
    std::size_t best = i;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (j == i) continue;
      const double d = std::abs(w[j] - target);
      if (d < dist) {
        dist = d;
        best = j;
      }
    }
    out.conjugate_partner.push_back(best);
    out.pairing_distance.push_back(dist);
  }
  out.n_com = out.complex_indices.size();
  out.p_com = w.empty() ? 0.0 : static_cast<double>(out.n_com) / static_cast<double>(w.size());
  return out;
}

inline SpectrumClassification classify_spectrum(const Spectrum& s, double scale,
                                                std::optional<double> tol_override = std::nullopt) {
  return classify_eigenvalues(s.eigenvalues, scale, tol_override);
}

namespace detail {

inline double weight_sum(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  if (!(s > 0.0)) throw std::invalid_argument("observable of a zero vector");
  return s;
}

}  // namespace detail

// sum_j |v_j|^2 j / sum_j |v_j|^2 with j = 1..L
inline double mean_position(const std::vector<cplx>& v) {
  const double w = detail::weight_sum(v);
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += std::norm(v[j]) * static_cast<double>(j + 1);
  return s / w;
}

// sum_j |v_j|^2 |j - L/2| / sum_j |v_j|^2
inline double half_asymmetry(const std::vector<cplx>& v) {
  const double w = detail::weight_sum(v);
  const double half = static_cast<double>(v.size()) / 2.0;
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += std::norm(v[j]) * std::abs(static_cast<double>(j + 1) - half);
  return s / w;
}

// Inclusive 1-based site range.
struct IndexRange {
  std::size_t first = 1;
  std::size_t last = 1;
  std::size_t length() const { return last >= first ? last - first + 1 : 0; }
};

// Middle 60% of the chain, clear of a boundary layer of max(M, 5) sites.
inline IndexRange default_window(std::size_t L, int max_range) {
  const std::size_t layer = std::max<std::size_t>(static_cast<std::size_t>(std::max(max_range, 1)), 5);
  IndexRange r;
  r.first = std::max(static_cast<std::size_t>(0.2 * static_cast<double>(L)) + 1, layer + 1);
  r.last = std::min(static_cast<std::size_t>(0.8 * static_cast<double>(L)), L > layer ? L - layer : 0);
  return r;
}

namespace detail {

// Least-squares slope of log|v_j| on the window, times L. Amplitudes below
// floor are clamped to floor.
inline double log_slope(const std::vector<cplx>& v, IndexRange w, double floor) {
  const double L = static_cast<double>(v.size());
  const double n = static_cast<double>(w.length());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t j = w.first; j <= w.last; ++j) {
    const double x = static_cast<double>(j);
    const double y = std::log(std::max(std::abs(v[j - 1]), floor));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / den * L;
}

}  // namespace detail

// Fitted c of |v_j| ~ e^{c j / L} over the window.
inline double fit_decay_constant(const std::vector<cplx>& v, IndexRange window, int max_range = 1) {
  const std::size_t L = v.size();
  const auto layer = static_cast<std::size_t>(std::max(max_range, 1));
  if (window.length() < 10) throw std::invalid_argument("decay fit window needs at least 10 sites");
  if (window.first < 1 || window.last > L) throw std::invalid_argument("decay fit window outside the chain");
  if (window.first <= layer || window.last + layer > L)
    throw std::invalid_argument("decay fit window touches the boundary layer");
  for (std::size_t j = window.first; j <= window.last; ++j)
    if (!(std::abs(v[j - 1]) > 0.0)) throw std::invalid_argument("decay fit needs nonzero amplitudes on the window");
  return detail::log_slope(v, window, 0.0);
}

// Larger |c| of the fits on the two halves of the default window; +inf when
// the state has no weight there. Used as the bound-state statistic.
inline double window_decay_statistic(const std::vector<cplx>& v, int max_range) {
  const std::size_t L = v.size();
  const IndexRange w = default_window(L, max_range);
  double vmax = 0.0;
  for (const auto& z : v) vmax = std::max(vmax, std::abs(z));
  double wmax = 0.0;
  for (std::size_t j = w.first; j <= w.last; ++j) wmax = std::max(wmax, std::abs(v[j - 1]));
  if (w.length() < 8) return 0.0;
  // negligible weight in the bulk window: localized at an edge
  if (!(wmax > vmax * 1e-8)) return std::numeric_limits<double>::infinity();
  const double floor = std::numeric_limits<double>::epsilon() * vmax;
  const std::size_t mid = (w.first + w.last) / 2;
  const double c1 = detail::log_slope(v, {w.first, mid}, floor);
  const double c2 = detail::log_slope(v, {mid + 1, w.last}, floor);
  return std::max(std::abs(c1), std::abs(c2));
}

// States whose window decay statistic exceeds the cut.
inline std::vector<std::size_t> detect_bound_states(const Spectrum& s, int max_range, double cut = kBoundDecayCut) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (window_decay_statistic(s.eigenvectors[i], max_range) > cut) out.push_back(i);
  return out;
}

struct BoundStateOptions {
  double cut = kBoundDecayCut;
  // A complex state below the cut is still bound when the model on 2L sites
  // has an eigenvalue within persistence_ratio*|Im E| of it: continuum
  // imaginary parts shrink with L, bound-state ones do not.
  bool persistence = true;
  double persistence_ratio = 0.3;
  std::optional<double> tol_imag;
};

inline std::vector<std::size_t> detect_bound_states(const ModelSpec& spec, const Spectrum& s, double scale,
                                                    const BoundStateOptions& opt = {}) {
  std::vector<std::size_t> out = detect_bound_states(s, spec.max_range(), opt.cut);
  if (!opt.persistence) return out;
  const double tol = opt.tol_imag ? *opt.tol_imag : kRelativeImagTolerance * scale;
  std::vector<bool> flagged(s.size(), false);
  for (std::size_t k : out) flagged[k] = true;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!flagged[i] && std::abs(s.eigenvalues[i].imag()) > tol) candidates.push_back(i);
  if (candidates.empty()) return out;
  const std::vector<cplx> big = eigenvalues(build_hamiltonian(resized(spec, 2 * spec.L)));
  for (std::size_t i : candidates) {
    const cplx e = s.eigenvalues[i];
    const double radius = opt.persistence_ratio * std::abs(e.imag());
    for (const auto& z : big)
      if (std::abs(z - e) < radius) {
        out.push_back(i);
        break;
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Classification of the continuous spectrum: bound states removed.
inline SpectrumClassification classify_continuum(const ModelSpec& spec, const Spectrum& s, double scale,
                                                 const BoundStateOptions& opt = {}) {
  const auto bound = detect_bound_states(spec, s, scale, opt);
  return classify_eigenvalues(s.eigenvalues, scale, opt.tol_imag, bound);
}

struct StateMetrics {
  std::size_t index = 0;
  cplx energy{};
  double mean_position = 0.0;
  double half_asymmetry = 0.0;
  double c_fit = 0.0;  // NaN when the window has no weight
  bool is_bound = false;
};

inline std::vector<StateMetrics> state_metrics(const ModelSpec& spec, const Spectrum& s,
                                               const std::vector<std::size_t>& bound) {
  std::vector<bool> b(s.size(), false);
  for (std::size_t k : bound)
    if (k < b.size()) b[k] = true;
  const IndexRange w = default_window(spec.L, spec.max_range());
  std::vector<StateMetrics> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& v = s.eigenvectors[i];
    StateMetrics& m = out[i];
    m.index = i;
    m.energy = s.eigenvalues[i];
    m.mean_position = mean_position(v);
    m.half_asymmetry = half_asymmetry(v);
    double vmax = 0.0;
    for (const auto& z : v) vmax = std::max(vmax, std::abs(z));
    m.c_fit = w.length() >= 2 ? detail::log_slope(v, w, std::numeric_limits<double>::epsilon() * vmax)
                              : std::numeric_limits<double>::quiet_NaN();
    m.is_bound = b[i];
  }
  return out;
}

enum class StateSelection {
  MaxImaginary,     // largest Im E, ties by smallest index
  MedianImaginary,  // the state at position L/2 after sorting by Im E
};

struct ScaleFreeFit {
  std::vector<std::size_t> sizes;
  std::vector<double> c_estimates;
  double c_mean = 0.0;
  double c_relative_spread = 0.0;  // (max - min) / |mean|
  double im_scaling_exponent = 0.0;  // slope of log max|Im E| vs log L
  double mean_im_exponent = 0.0;     // same for the spectrum-averaged Im E
  double selected_im_exponent = 0.0;  // same for the selected state
  std::vector<double> max_abs_im;
  std::vector<double> mean_im;
  std::vector<double> selected_im;
  bool has_complex_states = true;
  std::string status = "ok";
};

namespace detail {

inline double loglog_slope(const std::vector<std::size_t>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = std::log(static_cast<double>(xs[i]));
    const double y = std::log(std::abs(ys[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::vector<std::size_t> order_by_imag(const std::vector<cplx>& w) {
  std::vector<std::size_t> o(w.size());
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = i;
  std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return w[a].imag() < w[b].imag(); });
  return o;
}

}  // namespace detail

inline std::size_t select_state(const Spectrum& s, StateSelection sel) {
  const auto o = detail::order_by_imag(s.eigenvalues);
  if (sel == StateSelection::MedianImaginary) return o[o.size() / 2];
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s.eigenvalues[i].imag() > s.eigenvalues[best].imag()) best = i;
  return best;
}

inline ScaleFreeFit fit_scale_free(const std::function<ModelSpec(std::size_t)>& family,
                                   const std::vector<std::size_t>& sizes,
                                   StateSelection sel = StateSelection::MedianImaginary) {
  if (sizes.size() < 3) throw std::invalid_argument("scale-free fit needs at least 3 sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1]) throw std::invalid_argument("sizes must be strictly increasing");
  ScaleFreeFit fit;
  fit.sizes = sizes;
  for (std::size_t L : sizes) {
    const ModelSpec spec = family(L);
    const DenseMatrix h = build_hamiltonian(spec);
    const Spectrum s = eig(h);
    const auto cls = classify_spectrum(s, spectral_norm_estimate(h));
    double mx = 0.0, mean = 0.0;
    for (const auto& e : s.eigenvalues) {
      mx = std::max(mx, std::abs(e.imag()));
      mean += e.imag();
    }
    mean /= static_cast<double>(s.size());
    fit.max_abs_im.push_back(mx);
    fit.mean_im.push_back(mean);
    if (cls.n_com == 0) {
      fit.has_complex_states = false;
      fit.c_estimates.push_back(std::numeric_limits<double>::quiet_NaN());
      fit.selected_im.push_back(0.0);
      continue;
    }
    const std::size_t k = select_state(s, sel);
    fit.selected_im.push_back(s.eigenvalues[k].imag());
    fit.c_estimates.push_back(fit_decay_constant(s.eigenvectors[k], default_window(L, spec.max_range()),
                                                 spec.max_range()));
  }
  if (!fit.has_complex_states) {
    fit.status = "no complex states";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fit.c_mean = fit.c_relative_spread = fit.im_scaling_exponent = nan;
    fit.mean_im_exponent = fit.selected_im_exponent = nan;
    return fit;
  }
  double lo = fit.c_estimates.front(), hi = lo, sum = 0.0;
  for (double c : fit.c_estimates) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
    sum += c;
  }
  fit.c_mean = sum / static_cast<double>(fit.c_estimates.size());
  fit.c_relative_spread = (hi - lo) / std::abs(fit.c_mean);
  fit.im_scaling_exponent = detail::loglog_slope(sizes, fit.max_abs_im);
  fit.mean_im_exponent = detail::loglog_slope(sizes, fit.mean_im);
  fit.selected_im_exponent = detail::loglog_slope(sizes, fit.selected_im);
  return fit;
}

// <x>_n / L for states ordered by Im E, against q_n = (n - 1/2) / L.
struct PositionCurve {
  std::vector<double> q;
  std::vector<double> x;
};

inline PositionCurve rescaled_position_curve(const Spectrum& s) {
  const auto o = detail::order_by_imag(s.eigenvalues);
  const double L = static_cast<double>(s.size());
  PositionCurve c;
  for (std::size_t n = 0; n < o.size(); ++n) {
    c.q.push_back((static_cast<double>(n) + 0.5) / L);
    c.x.push_back(mean_position(s.eigenvectors[o[n]]) / L);
  }
  return c;
}

// Linear interpolation of curve at q, clamped to the end values.
inline double interpolate(const PositionCurve& c, double q) {
  if (q <= c.q.front()) return c.x.front();
  if (q >= c.q.back()) return c.x.back();
  const auto it = std::upper_bound(c.q.begin(), c.q.end(), q);
  const std::size_t k = static_cast<std::size_t>(it - c.q.begin());
  const double t = (q - c.q[k - 1]) / (c.q[k] - c.q[k - 1]);
  return c.x[k - 1] + t * (c.x[k] - c.x[k - 1]);
}

// Largest pointwise distance between two curves on the sample points of ref.
inline double curve_distance(const PositionCurve& ref, const PositionCurve& other) {
  double d = 0.0;
  for (std::size_t i = 0; i < ref.q.size(); ++i) d = std::max(d, std::abs(interpolate(other, ref.q[i]) - ref.x[i]));
  return d;
}

}  // namespace nhl
