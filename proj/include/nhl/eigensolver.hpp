#pragma once

// Dense complex non-symmetric eigensolver.
//
// Pipeline: diagonal balancing -> Householder Hessenberg reduction ->
// implicitly shifted single-shift complex QR (Wilkinson shift, exceptional
// shifts every 10 stalled sweeps) -> eigenvectors of the triangular Schur
// factor by back-substitution, mapped back through the accumulated unitary
// and the balancing scale. Everything is sequential and allocation-stable,
// so identical inputs give bit-identical outputs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhl/lattice.hpp"

namespace nhl {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Spectrum {
  std::vector<cplx> eigenvalues;
  std::vector<std::vector<cplx>> eigenvectors;  // right eigenvectors, unit 2-norm
  std::vector<double> residuals;                // ||H v - E v||_2 per pair

  std::size_t size() const { return eigenvalues.size(); }
};

// Frobenius norm; the scale used for residual and real/complex cuts.
inline double spectral_norm_estimate(const DenseMatrix& h) {
  double s = 0.0;
  for (const auto& z : h.entries()) s += std::norm(z);
  return std::sqrt(s);
}

// Relative residual bound every returned eigenpair satisfies.
inline constexpr double kResidualTolerance = 1e-8;

namespace detail {

inline double abs1(cplx z) { return std::abs(z.real()) + std::abs(z.imag()); }

// Parlett-Reinsch scaling with radix 2: a <- D^{-1} a D. Returns diag(D).
inline std::vector<double> balance(DenseMatrix& a) {
  const std::size_t n = a.dimension();
  std::vector<double> scale(n, 1.0);
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += abs1(a(j, i));
        r += abs1(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        const double inv = 1.0 / f;
        scale[i] *= f;
        cplx* row = a.row(i);
        for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
  return scale;
}

// Reduces a to upper Hessenberg form in place. When qt is non-null it must
// be the identity on entry and receives Q^T (row k of qt is column k of Q),
// with a_original = Q a_hess Q^H.
inline void hessenberg(DenseMatrix& a, DenseMatrix* qt) {
  const std::size_t n = a.dimension();
  if (n < 3) return;
  std::vector<cplx> v(n);
  std::vector<cplx> s(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;  // length of the reflected segment
    double tail = 0.0;
    for (std::size_t i = 1; i < m; ++i) tail += std::norm(a(k + 1 + i, k));
    if (tail == 0.0) continue;
    const cplx x0 = a(k + 1, k);
    const double alpha = std::sqrt(tail + std::norm(x0));
    const cplx phase = (std::abs(x0) == 0.0) ? cplx{1.0} : x0 / std::abs(x0);
    for (std::size_t i = 0; i < m; ++i) v[i] = a(k + 1 + i, k);
    v[0] += phase * alpha;
    double vv = 0.0;
    for (std::size_t i = 0; i < m; ++i) vv += std::norm(v[i]);
    const double beta = 2.0 / vv;

    // a <- (I - beta v v^H) a on rows k+1.., columns k..
    std::fill(s.begin(), s.end(), cplx{});
    for (std::size_t i = 0; i < m; ++i) {
      const cplx vi = std::conj(v[i]);
      const cplx* row = a.row(k + 1 + i);
      for (std::size_t j = k; j < n; ++j) s[j] += vi * row[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
      const cplx f = beta * v[i];
      cplx* row = a.row(k + 1 + i);
      for (std::size_t j = k; j < n; ++j) row[j] -= f * s[j];
    }
    // a <- a (I - beta v v^H) on all rows, columns k+1..
    for (std::size_t r = 0; r < n; ++r) {
      cplx* row = a.row(r);
      cplx acc{};
      for (std::size_t i = 0; i < m; ++i) acc += row[k + 1 + i] * v[i];
      acc *= beta;
      for (std::size_t i = 0; i < m; ++i) row[k + 1 + i] -= acc * std::conj(v[i]);
    }
    for (std::size_t i = 1; i < m; ++i) a(k + 1 + i, k) = 0.0;
    a(k + 1, k) = -phase * alpha;

    if (qt != nullptr) {
      // Q <- Q (I - beta v v^H); stored transposed so column updates are rows.
      std::fill(s.begin(), s.end(), cplx{});
      for (std::size_t i = 0; i < m; ++i) {
        const cplx vi = v[i];
        const cplx* row = qt->row(k + 1 + i);
        for (std::size_t r = 0; r < n; ++r) s[r] += row[r] * vi;
      }
      for (std::size_t i = 0; i < m; ++i) {
        const cplx f = beta * std::conj(v[i]);
        cplx* row = qt->row(k + 1 + i);
        for (std::size_t r = 0; r < n; ++r) row[r] -= s[r] * f;
      }
    }
  }
}

struct Givens {
  double c = 1.0;
  cplx s{};
  cplx r{};
};

// [c s; -conj(s) c] [x; y] = [r; 0]
inline Givens make_givens(cplx x, cplx y) {
  Givens g;
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  if (ay == 0.0) {
    g.c = 1.0;
    g.s = 0.0;
    g.r = x;
    return g;
  }
  if (ax == 0.0) {
    g.c = 0.0;
    g.s = 1.0;
    g.r = y;
    return g;
  }
  const double nu = std::hypot(ax, ay);
  const cplx ph = x / ax;
  g.c = ax / nu;
  g.s = ph * std::conj(y) / nu;
  g.r = ph * nu;
  return g;
}

// Complex Schur form of an upper Hessenberg matrix by single-shift QR.
// With zt non-null, the Schur vectors are accumulated (zt holds Z^T) and the
// full triangular factor is formed; otherwise only the diagonal is reliable.
inline void schur(DenseMatrix& h, DenseMatrix* zt) {
  const std::size_t n = h.dimension();
  if (n == 0) return;
  const bool full = zt != nullptr;
  const double eps = std::numeric_limits<double>::epsilon();
  const double small = std::numeric_limits<double>::min() * static_cast<double>(n) / eps;
  const std::size_t budget = 30 * std::max<std::size_t>(n, 1);
  std::size_t sweeps = 0;
  std::size_t stalled = 0;

  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
  while (hi >= 0) {
    // locate the active unreduced block lo..hi
    std::ptrdiff_t lo = hi;
    for (; lo > 0; --lo) {
      const double sub = abs1(h(lo, lo - 1));
      if (sub <= small) {
        h(lo, lo - 1) = 0.0;
        break;
      }
      double tst = abs1(h(lo - 1, lo - 1)) + abs1(h(lo, lo));
      if (tst == 0.0) {
        if (lo >= 2) tst += std::abs(h(lo - 1, lo - 2).real());
        if (lo + 1 <= hi) tst += std::abs(h(lo + 1, lo).real());
      }
      if (sub <= eps * tst) {
        h(lo, lo - 1) = 0.0;
        break;
      }
    }
    if (lo == hi) {
      --hi;
      stalled = 0;
      continue;
    }
    if (++sweeps > budget)
      throw ConvergenceError("QR iteration did not converge within " + std::to_string(budget) + " sweeps");
    ++stalled;

    const auto uh = static_cast<std::size_t>(hi);
    const auto ul = static_cast<std::size_t>(lo);
    cplx mu;
    if (stalled % 10 == 0) {
      mu = h(uh, uh) + 0.75 * std::abs(h(uh, uh - 1).real()) + cplx{0.0, 0.75 * std::abs(h(uh, uh - 1).imag())};
    } else {
      const cplx a = h(uh - 1, uh - 1);
      const cplx b = h(uh - 1, uh);
      const cplx c = h(uh, uh - 1);
      const cplx d = h(uh, uh);
      const cplx half = 0.5 * (a - d);
      const cplx disc = std::sqrt(half * half + b * c);
      const cplx tr = 0.5 * (a + d);
      const cplx m1 = tr + disc;
      const cplx m2 = tr - disc;
      mu = std::abs(m1 - d) <= std::abs(m2 - d) ? m1 : m2;
    }

    const std::size_t col_end = full ? n : uh + 1;
    const std::size_t row_begin = full ? 0 : ul;
    for (std::size_t k = ul; k < uh; ++k) {
      Givens g;
      if (k == ul) {
        g = make_givens(h(k, k) - mu, h(k + 1, k));
      } else {
        g = make_givens(h(k, k - 1), h(k + 1, k - 1));
        h(k, k - 1) = g.r;
        h(k + 1, k - 1) = 0.0;
      }
      const double c = g.c;
      const cplx s = g.s;
      const cplx sc = std::conj(s);
      {
        cplx* rk = h.row(k);
        cplx* rk1 = h.row(k + 1);
        for (std::size_t j = k; j < col_end; ++j) {
          const cplx x = rk[j];
          const cplx y = rk1[j];
          rk[j] = c * x + s * y;
          rk1[j] = c * y - sc * x;
        }
      }
      const std::size_t row_end = std::min(k + 2, uh) + 1;
      for (std::size_t i = row_begin; i < row_end; ++i) {
        cplx* ri = h.row(i);
        const cplx x = ri[k];
        const cplx y = ri[k + 1];
        ri[k] = c * x + sc * y;
        ri[k + 1] = c * y - s * x;
      }
      if (full) {
        cplx* zk = zt->row(k);
        cplx* zk1 = zt->row(k + 1);
        for (std::size_t i = 0; i < n; ++i) {
          const cplx x = zk[i];
          const cplx y = zk1[i];
          zk[i] = c * x + sc * y;
          zk1[i] = c * y - s * x;
        }
      }
    }
  }
}

inline void sort_order(const std::vector<cplx>& w, std::vector<std::size_t>& order) {
  order.resize(w.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (w[a].real() != w[b].real()) return w[a].real() < w[b].real();
    return w[a].imag() < w[b].imag();
  });
}

inline void check_finite(const DenseMatrix& h) {
  for (const auto& z : h.entries())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw std::invalid_argument("eigensolver input contains non-finite entries");
}

}  // namespace detail

// All eigenvalues, sorted by real part then imaginary part.
inline std::vector<cplx> eigenvalues(const DenseMatrix& h) {
  if (h.dimension() == 0) throw std::invalid_argument("eigensolver needs dimension >= 1");
  detail::check_finite(h);
  DenseMatrix a = h;
  detail::balance(a);
  detail::hessenberg(a, nullptr);
  detail::schur(a, nullptr);
  std::vector<cplx> w(a.dimension());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = a(i, i);
  std::vector<std::size_t> order;
  detail::sort_order(w, order);
  std::vector<cplx> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[order[i]];
  return out;
}

// Full eigendecomposition. Throws ConvergenceError when QR stalls or when an
// eigenpair misses the residual bound ||Hv - Ev|| <= 1e-8 ||H||_F.
inline Spectrum eig(const DenseMatrix& h) {
  const std::size_t n = h.dimension();
  if (n == 0) throw std::invalid_argument("eigensolver needs dimension >= 1");
  detail::check_finite(h);

  DenseMatrix t = h;
  const std::vector<double> scale = detail::balance(t);
  DenseMatrix zt = DenseMatrix::identity(n);
  detail::hessenberg(t, &zt);
  detail::schur(t, &zt);

  const double eps = std::numeric_limits<double>::epsilon();
  double tnorm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) tnorm = std::max(tnorm, detail::abs1(t(i, j)));
  const double smin = std::max(eps * tnorm, std::numeric_limits<double>::min() * static_cast<double>(n) / eps);
  constexpr double big = 1e100;

  std::vector<cplx> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = t(i, i);

  std::vector<std::vector<cplx>> vecs(n, std::vector<cplx>(n));
  std::vector<cplx> x(n);
  for (std::size_t k = n; k-- > 0;) {
    const cplx lambda = w[k];
    std::fill(x.begin(), x.end(), cplx{});
    x[k] = 1.0;
    for (std::size_t i = k; i-- > 0;) {
      const cplx* ti = t.row(i);
      cplx s{};
      for (std::size_t j = i + 1; j <= k; ++j) s += ti[j] * x[j];
      cplx d = ti[i] - lambda;
      if (detail::abs1(d) < smin) d = smin;
      x[i] = -s / d;
      const double ax = detail::abs1(x[i]);
      if (ax > big) {
        const double f = 1.0 / ax;
        for (std::size_t j = i; j <= k; ++j) x[j] *= f;
      }
    }
    std::vector<cplx>& v = vecs[k];
    for (std::size_t j = 0; j <= k; ++j) {
      const cplx xj = x[j];
      if (xj == cplx{}) continue;
      const cplx* zj = zt.row(j);
      for (std::size_t r = 0; r < n; ++r) v[r] += zj[r] * xj;
    }
    double nrm = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      v[r] *= scale[r];
      nrm = std::max(nrm, detail::abs1(v[r]));
    }
    if (nrm == 0.0) throw ConvergenceError("eigenvector back-substitution produced a zero vector");
    for (auto& z : v) z /= nrm;
    double n2 = 0.0;
    for (const auto& z : v) n2 += std::norm(z);
    n2 = 1.0 / std::sqrt(n2);
    for (auto& z : v) z *= n2;
  }

  const double fro = spectral_norm_estimate(h);
  const double tol = kResidualTolerance * std::max(fro, std::numeric_limits<double>::min());
  std::vector<double> res(n);
  std::vector<cplx> hv(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& v = vecs[k];
    double r2 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const cplx* hr = h.row(r);
      cplx acc{};
      for (std::size_t c = 0; c < n; ++c) acc += hr[c] * v[c];
      r2 += std::norm(acc - w[k] * v[r]);
    }
    res[k] = std::sqrt(r2);
    if (!(res[k] <= tol))
      throw ConvergenceError("eigenpair residual " + std::to_string(res[k]) + " exceeds " + std::to_string(tol));
  }

  std::vector<std::size_t> order;
  detail::sort_order(w, order);
  Spectrum out;
  out.eigenvalues.reserve(n);
  out.eigenvectors.reserve(n);
  out.residuals.reserve(n);
  for (std::size_t i : order) {
    out.eigenvalues.push_back(w[i]);
    out.eigenvectors.push_back(std::move(vecs[i]));
    out.residuals.push_back(res[i]);
  }
  return out;
}

}  // namespace nhl
