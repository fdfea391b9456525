#pragma once

// Projected effective Hamiltonians: two-level blocks for the flux ring and
// the open chain, analytic thresholds, and the multi-level chiral check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nhl/eigensolver.hpp"
#include "nhl/lattice.hpp"

namespace nhl {

// matrix = d0 I + (delta12 + g dz) sz + g dx sx + i g dy sy
struct GapDecomposition {
  double g = 0.0;
  cplx delta12{};
  cplx d0{};
  cplx dx{};
  cplx dy{};
  cplx dz{};
};

struct EffectiveBlock {
  DenseMatrix matrix;
  std::optional<GapDecomposition> decomposition;  // 2x2 blocks only
  std::string warning;                            // set when the projection is outside its validity range

  std::size_t dimension() const { return matrix.dimension(); }
};

inline DenseMatrix assemble_two_level(const GapDecomposition& d) {
  DenseMatrix m(2);
  const cplx z = d.delta12 + d.g * d.dz;
  m(0, 0) = d.d0 + z;
  m(1, 1) = d.d0 - z;
  m(0, 1) = d.g * (d.dx + d.dy);
  m(1, 0) = d.g * (d.dx - d.dy);
  return m;
}

// Both eigenvalues of a 2x2 block, the "+" root first.
inline std::pair<cplx, cplx> two_level_eigenvalues(const DenseMatrix& m) {
  const cplx mean = 0.5 * (m(0, 0) + m(1, 1));
  const cplx half = 0.5 * (m(0, 0) - m(1, 1));
  const cplx r = std::sqrt(half * half + m(0, 1) * m(1, 0));
  return {mean + r, mean - r};
}

// Plane wave e^{i k x_j} / sqrt(L) with centred coordinates x_j = j - (L+1)/2.
inline std::vector<cplx> plane_wave(std::size_t L, double k) {
  std::vector<cplx> v(L);
  const double norm = 1.0 / std::sqrt(static_cast<double>(L));
  const double centre = 0.5 * (static_cast<double>(L) + 1.0);
  for (std::size_t j = 1; j <= L; ++j) v[j - 1] = std::polar(norm, k * (static_cast<double>(j) - centre));
  return v;
}

// Matrix of <psi_a|V|psi_b>. The vectors must be orthonormal within 1e-10.
inline DenseMatrix project_perturbation(const std::vector<std::vector<cplx>>& vectors,
                                        const std::vector<PerturbationTerm>& V) {
  const std::size_t k = vectors.size();
  if (k == 0) throw std::invalid_argument("projection needs at least one vector");
  const std::size_t L = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != L) throw std::invalid_argument("projection vectors differ in length");
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b) {
      cplx s{};
      for (std::size_t j = 0; j < L; ++j) s += std::conj(vectors[a][j]) * vectors[b][j];
      if (std::abs(s - (a == b ? 1.0 : 0.0)) > 1e-10)
        throw std::invalid_argument("projection vectors are not orthonormal");
    }
  for (const auto& p : V)
    if (p.site_i < 1 || p.site_i > L || p.site_j < 1 || p.site_j > L)
      throw std::invalid_argument("perturbation site outside the projected chain");
  DenseMatrix m(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      cplx s{};
      for (const auto& p : V) s += std::conj(vectors[a][p.site_i - 1]) * p.amplitude * vectors[b][p.site_j - 1];
      m(a, b) = s;
    }
  return m;
}

// Two-level block of the flux ring for the pair (k_n, k_{L-n}), k_n = 2 pi n / L.
inline EffectiveBlock eff_h_pbc(std::size_t n, std::size_t L, double theta, double phi, double g, double t = 1.0) {
  if (L < 3 || n < 1 || 2 * n >= L) throw std::invalid_argument("mode index needs 1 <= n < L/2");
  const double l = static_cast<double>(L);
  const double k = 2.0 * std::numbers::pi * static_cast<double>(n) / l;
  const double parity = (L % 2 == 1) ? 1.0 : -1.0;  // (-1)^{L+1}
  GapDecomposition d;
  d.g = g;
  d.delta12 = -2.0 * t * std::sin(k) * std::sin(theta);
  d.d0 = 2.0 * t * std::cos(k) * std::cos(theta) + 2.0 * g / l * std::cos(phi);
  d.dx = parity * 2.0 / l * std::cos(k) * std::cos(phi);
  d.dy = parity * 2.0 / l * std::sin(k) * std::sin(phi);
  d.dz = 0.0;
  EffectiveBlock b;
  b.matrix = assemble_two_level(d);
  b.decomposition = d;
  // nearest excluded levels k_{n-1}, k_{n+1} and their partners
  double gap = std::numeric_limits<double>::infinity();
  for (int dn : {-1, 1}) {
    const double kk = 2.0 * std::numbers::pi * (static_cast<double>(n) + dn) / l;
    for (double s : {1.0, -1.0}) gap = std::min(gap, std::abs(2.0 * t * std::cos(s * kk + theta) - d.d0.real()));
  }
  if (2.0 * std::abs(g) / l > 0.5 * gap) b.warning = "projected coupling exceeds half the gap to excluded levels";
  return b;
}

struct PbcThreshold {
  bool finite = false;
  double g_c = std::numeric_limits<double>::infinity();
  std::size_t n_min = 0;  // mode realising the minimum
};

namespace detail {

template <class F>
PbcThreshold minimise_threshold(std::size_t L, double phi, F per_mode) {
  PbcThreshold out;
  const double l = static_cast<double>(L);
  for (std::size_t n = 1; 2 * n < L; ++n) {
    const double k = 2.0 * std::numbers::pi * static_cast<double>(n) / l;
    const double c = std::cos(k), s = std::sin(k);
    const double b = c * c * std::cos(phi) * std::cos(phi) - s * s * std::sin(phi) * std::sin(phi);
    if (!(b < 0.0)) continue;
    const double g = per_mode(k, b);
    if (g < out.g_c) {
      out.g_c = g;
      out.n_min = n;
      out.finite = true;
    }
  }
  return out;
}

}  // namespace detail

// Smallest g at which some two-level block of the flux ring has a negative
// discriminant (2 t sin k sin theta)^2 + (2g/L)^2 (cos^2 k cos^2 phi - sin^2 k sin^2 phi).
inline PbcThreshold threshold_pbc(std::size_t L, double theta, double phi, double t = 1.0) {
  if (std::sin(theta) < 0.0) throw std::invalid_argument("threshold needs sin(theta) >= 0");
  const double l = static_cast<double>(L);
  return detail::minimise_threshold(L, phi, [&](double k, double b) {
    return 0.5 * l * std::abs(2.0 * t * std::sin(k) * std::sin(theta)) / std::sqrt(-b);
  });
}

// The literal minimisation (g_c / tL)^2 = sin(theta) min(-2 sin^2 k / (cos 2k + cos 2 phi)),
// kept for comparison; at phi = pi/2 it gives t L sqrt(sin theta).
inline PbcThreshold threshold_pbc_literal(std::size_t L, double theta, double phi, double t = 1.0) {
  if (std::sin(theta) < 0.0) throw std::invalid_argument("threshold needs sin(theta) >= 0");
  const double l = static_cast<double>(L);
  return detail::minimise_threshold(L, phi, [&](double k, double b) {
    const double s = std::sin(k);
    return std::abs(t) * l * std::sqrt(std::sin(theta) * (-2.0 * s * s / (2.0 * b)));
  });
}

enum class CouplingForm {
  Symmetric,      // delta sz + g dz sz + g dx sx + i g dy sy
  Antisymmetric,  // delta sz + i g (dx sx + dy sy)
};

struct TwoLevelResult {
  std::pair<cplx, cplx> eigenvalues;
  bool broken = false;  // eigenvalues off the real axis
  double radicand = 0.0;
};

inline double two_level_radicand(double delta12, double g, double dx, double dy, double dz, CouplingForm form) {
  if (form == CouplingForm::Antisymmetric) return delta12 * delta12 - g * g * (dx * dx + dy * dy);
  const double z = delta12 + g * dz;
  return z * z + g * g * (dx * dx - dy * dy);
}

inline TwoLevelResult eff_h_obc(double delta12, double g, double dx, double dy, double dz,
                                CouplingForm form = CouplingForm::Symmetric) {
  TwoLevelResult r;
  r.radicand = two_level_radicand(delta12, g, dx, dy, form == CouplingForm::Antisymmetric ? 0.0 : dz, form);
  const cplx root = std::sqrt(cplx{r.radicand});
  r.eigenvalues = {root, -root};
  r.broken = r.radicand < 0.0;
  return r;
}

// Smallest g >= 0 beyond which the two-level radicand is negative; nullopt
// when it never turns negative.
inline std::optional<double> two_level_threshold(double delta12, double dx, double dy, double dz, CouplingForm form) {
  double a, b;
  if (form == CouplingForm::Antisymmetric) {
    a = -(dx * dx + dy * dy);
    b = 0.0;
  } else {
    a = dz * dz + dx * dx - dy * dy;
    b = 2.0 * delta12 * dz;
  }
  const double c = delta12 * delta12;
  if (c == 0.0) {
    // radicand g (a g + b): negative just above 0 when b < 0, or b == 0 and a < 0
    if (b < 0.0 || (b == 0.0 && a < 0.0)) return 0.0;
    return std::nullopt;
  }
  if (a == 0.0) {
    if (b < 0.0) return -c / b;
    return std::nullopt;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  std::vector<double> roots;
  if (q != 0.0) roots.push_back(c / q);
  roots.push_back(q / a);
  std::sort(roots.begin(), roots.end());
  for (double r : roots) {
    if (r < 0.0) continue;
    const double probe = r + 1e-9 * std::max(1.0, r);
    if (a * probe * probe + b * probe + c < 0.0) return r;
  }
  return std::nullopt;
}

// diag(-w..w) deltaE + V
inline EffectiveBlock multiband_block(std::size_t w, double deltaE, const DenseMatrix& v_projected) {
  const std::size_t d = 2 * w + 1;
  if (v_projected.dimension() != d) throw std::invalid_argument("projected block must be (2w+1)x(2w+1)");
  EffectiveBlock b;
  b.matrix = v_projected;
  for (std::size_t i = 0; i < d; ++i)
    b.matrix(i, i) += (static_cast<double>(i) - static_cast<double>(w)) * deltaE;
  return b;
}

// Momenta attached to levels l = -w..w around the reference k_n of the ring:
// K_{2m} = k_{n-m}, K_{2m+1} = -k_{n-m}, K_{-2m} = k_{n+m}, K_{-(2m-1)} = -k_{n+m}.
inline std::vector<double> multiband_momenta(std::size_t n, std::size_t L, std::size_t w) {
  const double unit = 2.0 * std::numbers::pi / static_cast<double>(L);
  std::vector<double> K;
  for (long long l = -static_cast<long long>(w); l <= static_cast<long long>(w); ++l) {
    const long long a = l >= 0 ? l : -l;
    long long m;
    if (l >= 0) {
      m = -(a / 2);
    } else {
      m = (a + 1) / 2;
    }
    const double k = unit * static_cast<double>(static_cast<long long>(n) + m);
    K.push_back(a % 2 == 0 ? k : -k);
  }
  return K;
}

// Projection of V onto the plane waves of multiband_momenta.
inline DenseMatrix multiband_projection(std::size_t n, std::size_t L, std::size_t w,
                                        const std::vector<PerturbationTerm>& V) {
  std::vector<std::vector<cplx>> waves;
  for (double k : multiband_momenta(n, L, w)) waves.push_back(plane_wave(L, k));
  return project_perturbation(waves, V);
}

struct ChiralReport {
  bool chiral = false;
  double violation = 0.0;  // max |P b P + b|
  bool spectrum_symmetric = false;
  double zero_mode_distance = 0.0;
  std::vector<cplx> eigenvalues;
};

// P b P = -b with P the index inversion about the middle level; when it
// holds, also checks that the spectrum is symmetric under negation and pins
// a level at zero.
inline ChiralReport chiral_symmetry_report(const EffectiveBlock& block, double tol = 1e-10) {
  const std::size_t d = block.dimension();
  if (d % 2 == 0) throw std::invalid_argument("chiral check needs an odd dimension");
  ChiralReport r;
  const DenseMatrix& m = block.matrix;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) r.violation = std::max(r.violation, std::abs(m(d - 1 - i, d - 1 - j) + m(i, j)));
  r.eigenvalues = eigenvalues(m);
  double mismatch = 0.0;
  std::vector<bool> used(d, false);
  for (std::size_t i = 0; i < d; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bj = 0;
    for (std::size_t j = 0; j < d; ++j) {
      if (used[j]) continue;
      const double dist = std::abs(r.eigenvalues[j] + r.eigenvalues[i]);
      if (dist < best) {
        best = dist;
        bj = j;
      }
    }
    used[bj] = true;
    mismatch = std::max(mismatch, best);
  }
  r.zero_mode_distance = std::numeric_limits<double>::infinity();
  for (const auto& e : r.eigenvalues) r.zero_mode_distance = std::min(r.zero_mode_distance, std::abs(e));
  const double scale = std::max(1.0, spectral_norm_estimate(m));
  r.spectrum_symmetric = mismatch <= tol * scale && r.zero_mode_distance <= tol * scale;
  r.chiral = r.violation <= tol && r.spectrum_symmetric;
  return r;
}

inline bool chiral_symmetry_check(const EffectiveBlock& block, double tol = 1e-10) {
  return chiral_symmetry_report(block, tol).chiral;
}

}  // namespace nhl
