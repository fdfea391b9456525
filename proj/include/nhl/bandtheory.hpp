#pragma once

// Bloch bands of the bulk hoppings, equal-energy points and the energy
// window where open-boundary PT breaking of the continuum is allowed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "nhl/eigensolver.hpp"
#include "nhl/lattice.hpp"
#include "nhl/spectral_analysis.hpp"

namespace nhl {

// sum_n (t_n e^{ikn} + c.c.)
inline double band_energy(const HoppingSet& h, double k) {
  double e = 0.0;
  for (const auto& [n, t] : h.terms()) e += 2.0 * (t * std::polar(1.0, k * n)).real();
  return e;
}

inline double band_slope(const HoppingSet& h, double k) {
  double d = 0.0;
  for (const auto& [n, t] : h.terms()) d -= 2.0 * n * (t * std::polar(1.0, k * n)).imag();
  return d;
}

inline constexpr std::size_t kBandGrid = 10000;

namespace detail {

// Zeros of f on [0, 2pi) by sign changes on the band grid and bisection to
// 1e-12, merged within 1e-10 (including across the 2pi seam).
inline std::vector<double> periodic_zeros(const std::function<double(double)>& f) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double h = two_pi / static_cast<double>(kBandGrid);
  std::vector<double> out;
  double x0 = 0.0;
  double f0 = f(x0);
  if (f0 == 0.0) out.push_back(0.0);
  for (std::size_t k = 1; k <= kBandGrid; ++k) {
    const double x1 = h * static_cast<double>(k);
    const double f1 = f(x1);
    if (f1 == 0.0) {
      if (k < kBandGrid) out.push_back(x1);
    } else if (f0 != 0.0 && ((f0 < 0.0) != (f1 < 0.0))) {
      double lo = x0, hi = x1, flo = f0;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      double r = 0.5 * (lo + hi);
      if (r >= two_pi) r -= two_pi;
      out.push_back(r);
    }
    x0 = x1;
    f0 = f1;
  }
  std::sort(out.begin(), out.end());
  std::vector<double> merged;
  for (double r : out)
    if (merged.empty() || r - merged.back() > 1e-10) merged.push_back(r);
  if (merged.size() > 1 && merged.front() + two_pi - merged.back() <= 1e-10) merged.pop_back();
  return merged;
}

}  // namespace detail

// Real k in [0, 2pi) with E(k) = epsilon.
inline std::vector<double> equal_energy_points(const HoppingSet& h, double epsilon) {
  return detail::periodic_zeros([&](double k) { return band_energy(h, k) - epsilon; });
}

struct PTWindow {
  std::vector<std::pair<double, double>> intervals;
  std::vector<std::size_t> multiplicity;

  bool contains(double e, double pad = 0.0) const {
    for (const auto& [lo, hi] : intervals)
      if (e > lo - pad && e < hi + pad) return true;
    return false;
  }
};

// Critical values of E(k), sorted and deduplicated.
inline std::vector<double> critical_values(const HoppingSet& h) {
  const auto ks = detail::periodic_zeros([&](double k) { return band_slope(h, k); });
  std::vector<double> v;
  for (double k : ks) v.push_back(band_energy(h, k));
  // E(0) and E(pi) are always critical; include them even if the grid misses a double zero
  v.push_back(band_energy(h, 0.0));
  v.push_back(band_energy(h, std::numbers::pi));
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double e : v)
    if (out.empty() || e - out.back() > 1e-10) out.push_back(e);
  return out;
}

// Energy intervals between consecutive critical values where E(k) = epsilon
// has at least four real solutions. Adjacent qualifying intervals merge.
inline PTWindow pt_breaking_window(const HoppingSet& h) {
  const auto cv = critical_values(h);
  PTWindow w;
  for (std::size_t i = 0; i + 1 < cv.size(); ++i) {
    const double lo = cv[i], hi = cv[i + 1];
    const std::size_t m = equal_energy_points(h, 0.5 * (lo + hi)).size();
    if (m < 4) continue;
    if (!w.intervals.empty() && w.intervals.back().second == lo && w.multiplicity.back() == m) {
      w.intervals.back().second = hi;
    } else {
      w.intervals.emplace_back(lo, hi);
      w.multiplicity.push_back(m);
    }
  }
  return w;
}

struct CriterionViolation {
  std::size_t index = 0;
  cplx energy{};
};

struct CriterionReport {
  PTWindow window;
  double tolerance = 0.0;  // 5 * bandwidth / L
  std::vector<std::size_t> bound_states;
  std::vector<std::size_t> continuum_complex;
  std::vector<CriterionViolation> violations;
  double p_com = 0.0;  // continuum complex count / L
  bool complex_energies_inside = true;
};

inline double bandwidth(const HoppingSet& h) {
  const auto cv = critical_values(h);
  return cv.back() - cv.front();
}

// Every complex continuum eigenvalue must have Re E inside the window
// widened by 5 * bandwidth / L.
inline CriterionReport criterion_check(const ModelSpec& spec, const BoundStateOptions& opt = {}) {
  if (spec.boundary != Boundary::Open) throw InvalidModel("criterion check requires open boundaries");
  CriterionReport rep;
  rep.window = pt_breaking_window(spec.hoppings);
  rep.tolerance = 5.0 * bandwidth(spec.hoppings) / static_cast<double>(spec.L);
  const DenseMatrix hm = build_hamiltonian(spec);
  const Spectrum s = eig(hm);
  const double scale = spectral_norm_estimate(hm);
  rep.bound_states = detect_bound_states(spec, s, scale, opt);
  const auto cls = classify_eigenvalues(s.eigenvalues, scale, opt.tol_imag, rep.bound_states);
  rep.continuum_complex = cls.complex_indices;
  rep.p_com = cls.p_com;
  for (std::size_t i : cls.complex_indices) {
    if (!rep.window.contains(s.eigenvalues[i].real(), rep.tolerance)) rep.violations.push_back({i, s.eigenvalues[i]});
  }
  rep.complex_energies_inside = rep.violations.empty();
  return rep;
}

}  // namespace nhl
