#pragma once

// Generalized Bloch factor beta: characteristic roots at a given energy,
// boundary-condition determinants, and the unitary / asymptotic solvers of
// the flux ring.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nhl/eigensolver.hpp"
#include "nhl/lattice.hpp"
#include "nhl/models.hpp"

namespace nhl {

struct BetaRootSet {
  cplx energy{};
  std::vector<cplx> roots;  // ascending |beta|, ties by ascending arg
  HoppingSet hoppings;
};

// sum_n (t_n beta^n + conj(t_n) beta^-n)
inline cplx laurent_energy(const HoppingSet& h, cplx beta) {
  cplx e{};
  for (const auto& [n, t] : h.terms()) e += t * std::pow(beta, n) + std::conj(t) * std::pow(beta, -n);
  return e;
}

namespace detail {

// coefficients a_0..a_{2M} of sum_n t_n b^{M+n} + conj(t_n) b^{M-n} - E b^M
inline std::vector<cplx> characteristic_polynomial(const HoppingSet& h, cplx E) {
  const int M = h.max_range();
  std::vector<cplx> a(static_cast<std::size_t>(2 * M + 1));
  for (const auto& [n, t] : h.terms()) {
    a[static_cast<std::size_t>(M + n)] += t;
    a[static_cast<std::size_t>(M - n)] += std::conj(t);
  }
  a[static_cast<std::size_t>(M)] -= E;
  return a;
}

inline void sort_roots(std::vector<cplx>& r) {
  std::sort(r.begin(), r.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  // equal moduli within 1e-9 are ordered by phase
  std::size_t start = 0;
  while (start < r.size()) {
    std::size_t end = start + 1;
    const double ref = std::abs(r[start]);
    while (end < r.size() && std::abs(r[end]) - ref <= 1e-9 * std::max(1.0, ref)) ++end;
    std::sort(r.begin() + static_cast<std::ptrdiff_t>(start), r.begin() + static_cast<std::ptrdiff_t>(end),
              [](cplx a, cplx b) { return std::arg(a) < std::arg(b); });
    start = end;
  }
}

}  // namespace detail

// All 2M roots of the characteristic polynomial at energy E, from the
// eigenvalues of its companion matrix followed by Newton polishing.
inline BetaRootSet characteristic_roots(const HoppingSet& h, cplx E) {
  if (!std::isfinite(E.real()) || !std::isfinite(E.imag())) throw std::invalid_argument("energy must be finite");
  const int M = h.max_range();
  if (M < 1) throw InvalidModel("characteristic roots need at least one hopping term");
  const auto a = detail::characteristic_polynomial(h, E);
  const std::size_t D = a.size() - 1;
  DenseMatrix c(D);
  for (std::size_t i = 1; i < D; ++i) c(i, i - 1) = 1.0;
  for (std::size_t i = 0; i < D; ++i) c(i, D - 1) = -a[i] / a[D];
  std::vector<cplx> r = eigenvalues(c);

  auto poly = [&](cplx z, cplx& dp) {
    cplx p = a[D];
    dp = 0.0;
    for (std::size_t k = D; k-- > 0;) {
      dp = dp * z + p;
      p = p * z + a[k];
    }
    return p;
  };
  for (auto& z : r) {
    cplx dp;
    double best = std::abs(poly(z, dp));
    for (int it = 0; it < 3; ++it) {
      const cplx p = poly(z, dp);
      if (std::abs(dp) == 0.0) break;
      const cplx next = z - p / dp;
      cplx dn;
      const double val = std::abs(poly(next, dn));
      if (!(val < best)) break;
      best = val;
      z = next;
    }
  }
  detail::sort_roots(r);
  return {E, std::move(r), h};
}

struct BoundaryDeterminant {
  cplx value{};            // determinant of the column-scaled matrix
  double log_scale = 0.0;  // true determinant = value * exp(log_scale)
  double normalized = 0.0;  // |value| / product of column term-modulus norms, in [0, 1]
  bool ill_conditioned = false;  // two roots within 1e-10
};

namespace detail {

inline cplx small_determinant(std::vector<cplx> m, std::size_t n) {
  cplx det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m[i * n + k]) > std::abs(m[p * n + k])) p = i;
    if (m[p * n + k] == cplx{}) return 0.0;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m[p * n + j], m[k * n + j]);
      det = -det;
    }
    det *= m[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const cplx f = m[i * n + k] / m[k * n + k];
      for (std::size_t j = k; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
    }
  }
  return det;
}

}  // namespace detail

// Determinant of the boundary matrix: rows are the equations of sites 1..M
// and L-M+1..L, column l is the residual of (H - E) applied to beta_l^j on
// those rows. Periodic models with flux are first moved to the boundary
// gauge. Perturbation rows must lie inside the boundary rows.
inline BoundaryDeterminant boundary_determinant(const ModelSpec& spec, const BetaRootSet& roots) {
  validate(spec);
  const bool periodic = spec.boundary == Boundary::Periodic;
  const ModelSpec m = (periodic && spec.flux_theta != 0.0) ? apply_gauge_transform(spec) : spec;
  if (!(roots.hoppings == spec.hoppings)) throw std::invalid_argument("roots were computed for different hoppings");
  const int M = m.max_range();
  const std::size_t D = static_cast<std::size_t>(2 * M);
  if (roots.roots.size() != D) throw std::invalid_argument("root set size does not match 2M");
  const auto L = static_cast<long long>(m.L);

  std::vector<long long> rows;
  for (long long r = 1; r <= M; ++r) rows.push_back(r);
  for (long long r = L - M + 1; r <= L; ++r) rows.push_back(r);
  for (const auto& p : m.perturbations) {
    const auto i = static_cast<long long>(p.site_i);
    if (i > M && i <= L - M)
      throw std::invalid_argument("perturbation row " + std::to_string(i) + " lies outside the boundary rows");
  }

  BoundaryDeterminant out;
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t b = a + 1; b < D; ++b)
      if (std::abs(roots.roots[a] - roots.roots[b]) < 1e-10) out.ill_conditioned = true;

  // powers of beta that enter the boundary rows
  std::vector<long long> powers;
  for (const long long r : rows) {
    for (const auto& [n, t] : m.hoppings.terms()) {
      if (r + n > L) {
        powers.push_back(r + n);
        if (periodic) powers.push_back(r + n - L);
      }
      if (r - n < 1) {
        powers.push_back(r - n);
        if (periodic) powers.push_back(r - n + L);
      }
    }
    for (const auto& p : m.perturbations)
      if (static_cast<long long>(p.site_i) == r) powers.push_back(static_cast<long long>(p.site_j));
  }

  const cplx tw = std::polar(1.0, m.twist);
  std::vector<cplx> f(D * D);
  double norm_product = 1.0;
  for (std::size_t l = 0; l < D; ++l) {
    const cplx beta = roots.roots[l];
    if (std::abs(beta) == 0.0) throw std::invalid_argument("root beta = 0");
    const cplx lb = std::log(beta);
    // |beta|^{-L/2}, then shifted so the largest power in the column has unit modulus
    double half = 0.5 * static_cast<double>(L) * lb.real();
    if (!powers.empty()) {
      double top = -std::numeric_limits<double>::infinity();
      for (long long q : powers) top = std::max(top, static_cast<double>(q) * lb.real());
      half = top;
    }
    out.log_scale += half;
    auto pw = [&](long long p) { return std::exp(static_cast<double>(p) * lb - half); };
    double col2 = 0.0;
    for (std::size_t a = 0; a < D; ++a) {
      const long long r = rows[a];
      cplx v{};
      double mag = 0.0;  // sum of term moduli, blind to cancellation
      auto add = [&](cplx c, long long p) {
        const cplx z = c * pw(p);
        v += z;
        mag += std::abs(z);
      };
      for (const auto& [n, t] : m.hoppings.terms()) {
        if (r + n > L) {
          if (periodic) add(t * tw, r + n - L);
          add(-t, r + n);
        }
        if (r - n < 1) {
          if (periodic) add(std::conj(t) * std::conj(tw), r - n + L);
          add(-std::conj(t), r - n);
        }
      }
      for (const auto& p : m.perturbations)
        if (static_cast<long long>(p.site_i) == r) add(p.amplitude, static_cast<long long>(p.site_j));
      f[a * D + l] = v;
      col2 += mag * mag;
    }
    norm_product *= std::sqrt(col2);
  }
  out.value = detail::small_determinant(f, D);
  out.normalized = norm_product > 0.0 ? std::abs(out.value) / norm_product : 0.0;
  return out;
}

inline BoundaryDeterminant boundary_determinant_at(const ModelSpec& spec, cplx E) {
  return boundary_determinant(spec, characteristic_roots(spec.hoppings, E));
}

// Flux-ring polynomial in gamma whose zeros in (0, pi) are the unitary
// (|beta| = 1) solutions at ratio r = g/t.
inline double unitary_polynomial(double gamma, double r, std::size_t L, double theta, double phi) {
  const double l = static_cast<double>(L);
  return r * r * std::sin(gamma * (l - 1.0)) - 2.0 * r * std::cos(phi) * std::sin(gamma * l) +
         2.0 * (std::cos(gamma * l) - std::cos(theta * l)) * std::sin(gamma);
}

// Number of sign changes of unitary_polynomial on an n-point open grid of (0, pi).
inline std::size_t unitary_solution_count(double r, std::size_t L, double theta, double phi, std::size_t n) {
  std::size_t count = 0;
  double prev = 0.0;
  bool have = false;
  for (std::size_t k = 1; k <= n; ++k) {
    const double gamma = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n + 1);
    const double v = unitary_polynomial(gamma, r, L, theta, phi);
    if (have && ((v > 0.0 && prev < 0.0) || (v < 0.0 && prev > 0.0))) ++count;
    if (v != 0.0) {
      prev = v;
      have = true;
    }
  }
  return count;
}

struct UnitaryScanParams {
  std::size_t L = 20;
  double t = 1.0;
  double theta = 0.0;
  double phi = std::numbers::pi / 2;
  double g_min = 0.0;
  double g_max = 3.0;
  std::size_t g_steps = 301;
};

struct UnitaryScanResult {
  std::vector<double> gamma_grid;
  std::vector<double> g_plus;   // NaN where the discriminant is negative
  std::vector<double> g_minus;
  std::vector<bool> discriminant_negative;
  std::vector<double> g_grid;
  std::vector<std::size_t> real_solution_count;  // unitary solutions per g
  std::vector<std::pair<double, double>> broken_g_intervals;
};

// G(gamma) = [cos(phi) sin(gamma L) +- sqrt(D)] / sin(gamma (L-1)) with
// D = cos^2(phi) sin^2(gamma L) - 2 sin(gamma (L-1)) (cos(gamma L) - cos(theta L)) sin(gamma).
// A g value is broken when fewer than L unitary solutions exist there.
inline UnitaryScanResult unitary_scan(const UnitaryScanParams& p, std::size_t gamma_resolution) {
  if (gamma_resolution < 1000) throw std::invalid_argument("gamma resolution must be at least 1000");
  if (p.L < 3) throw InvalidModel("unitary scan needs L >= 3");
  if (p.g_steps < 2 || !(p.g_max > p.g_min)) throw std::invalid_argument("g range needs steps >= 2 and max > min");
  if (p.t == 0.0) throw InvalidModel("hopping t must be nonzero");
  UnitaryScanResult out;
  const double l = static_cast<double>(p.L);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = 0; k < gamma_resolution; ++k) {
    const double gamma = two_pi * static_cast<double>(k) / static_cast<double>(gamma_resolution - 1);
    const double s = std::sin(gamma * (l - 1.0));
    if (std::abs(s) < 1e-14) continue;
    const double a = std::cos(p.phi) * std::sin(gamma * l);
    const double disc = a * a - 2.0 * s * (std::cos(gamma * l) - std::cos(p.theta * l)) * std::sin(gamma);
    out.gamma_grid.push_back(gamma);
    out.discriminant_negative.push_back(disc < 0.0);
    if (disc < 0.0) {
      out.g_plus.push_back(nan);
      out.g_minus.push_back(nan);
    } else {
      const double r = std::sqrt(disc);
      out.g_plus.push_back((a + r) / s);
      out.g_minus.push_back((a - r) / s);
    }
  }
  const std::size_t n = std::max<std::size_t>(gamma_resolution, 50 * p.L);
  bool open = false;
  double start = 0.0, last = 0.0;
  for (std::size_t i = 0; i < p.g_steps; ++i) {
    const double g = p.g_min + (p.g_max - p.g_min) * static_cast<double>(i) / static_cast<double>(p.g_steps - 1);
    const std::size_t cnt = unitary_solution_count(g / p.t, p.L, p.theta, p.phi, n);
    out.g_grid.push_back(g);
    out.real_solution_count.push_back(cnt);
    const bool broken = cnt < p.L;
    if (broken && !open) {
      open = true;
      start = g;
    }
    if (!broken && open) {
      out.broken_g_intervals.emplace_back(start, last);
      open = false;
    }
    last = g;
  }
  if (open) out.broken_g_intervals.emplace_back(start, last);
  return out;
}

struct AsymptoticSolution {
  double gamma = 0.0;
  double delta = 0.0;
  cplx energy{};  // 2t [cos(gamma) cosh(delta/L) + i sin(gamma) sinh(delta/L)]
};

// Leading-order PT-broken solutions beta = e^{i gamma + delta/L} of the flux
// ring: gamma from the zeros of the f_R bracket, delta from f_I = 0.
inline std::vector<AsymptoticSolution> asymptotic_broken_solver(const FluxRingParams& p) {
  std::vector<AsymptoticSolution> out;
  if (p.L < 3 || p.t == 0.0 || p.g == 0.0) return out;
  const double l = static_cast<double>(p.L);
  const double t = p.t, g = p.g;
  const double cphi = std::cos(p.phi);
  auto bracket = [&](double x) {
    return 2.0 * t * t * std::sin(x * l) * std::sin(x) - g * g * std::cos(x * (l - 1.0)) +
           2.0 * g * t * cphi * std::cos(x * l);
  };
  auto coefficient = [&](double x) {
    return -g * g * std::sin(x * (l - 1.0)) + 2.0 * g * t * cphi * std::sin(x * l) -
           2.0 * t * t * std::cos(x * l) * std::sin(x);
  };
  const std::size_t n = 10 * p.L;
  const double h = std::numbers::pi / static_cast<double>(n);
  double x0 = 0.0, f0 = bracket(x0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double x1 = h * static_cast<double>(k);
    const double f1 = bracket(x1);
    if ((f0 < 0.0) != (f1 < 0.0) && f0 != 0.0) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = bracket(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double gamma = 0.5 * (lo + hi);
      const double a = coefficient(gamma);
      if (a != 0.0) {
        const double ch = -2.0 * t * t * std::cos(p.theta * l) * std::sin(gamma) / a;
        if (ch > 1.0) {
          const double delta = std::acosh(ch);
          for (double d : {delta, -delta}) {
            const cplx e = 2.0 * t * cplx{std::cos(gamma) * std::cosh(d / l), std::sin(gamma) * std::sinh(d / l)};
            out.push_back({gamma, d, e});
          }
        }
      }
    }
    x0 = x1;
    f0 = f1;
  }
  return out;
}

}  // namespace nhl
