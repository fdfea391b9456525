#pragma once

// Model description types and dense Hamiltonian assembly for 1D tight-binding
// chains with local (generally non-Hermitian) perturbations.
//
// Site indices are 1-based everywhere a site is named (perturbation terms,
// position observables). DenseMatrix itself is a plain 0-based container:
// site i lives in row/column i-1.

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace nhl {

using cplx = std::complex<double>;

class InvalidModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Wraps an angle into [0, 2pi).
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

// Hopping amplitudes t_n keyed by range n >= 1. Every stored amplitude is
// nonzero; each term stands for t_n |i><i+n| + conj(t_n) |i+n><i|.
class HoppingSet {
 public:
  HoppingSet() = default;
  HoppingSet(std::initializer_list<std::pair<const int, cplx>> terms) {
    for (const auto& [n, t] : terms) set(n, t);
  }

  // Setting an amplitude to exactly zero removes the term.
  void set(int range, cplx amplitude) {
    if (range < 1) throw InvalidModel("hopping range must be >= 1, got " + std::to_string(range));
    if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag()))
      throw InvalidModel("hopping amplitude for range " + std::to_string(range) + " is not finite");
    if (amplitude == cplx{}) {
      terms_.erase(range);
    } else {
      terms_[range] = amplitude;
    }
  }

  cplx operator[](int range) const {
    auto it = terms_.find(range);
    return it == terms_.end() ? cplx{} : it->second;
  }

  int max_range() const { return terms_.empty() ? 0 : terms_.rbegin()->first; }
  bool empty() const { return terms_.empty(); }
  const std::map<int, cplx>& terms() const { return terms_; }

  friend bool operator==(const HoppingSet&, const HoppingSet&) = default;

 private:
  std::map<int, cplx> terms_;
};

// A literal matrix element amplitude * |site_i><site_j|. No Hermitian partner
// is generated.
struct PerturbationTerm {
  std::size_t site_i = 1;
  std::size_t site_j = 1;
  cplx amplitude{};

  friend bool operator==(const PerturbationTerm&, const PerturbationTerm&) = default;
};

enum class Boundary { Open, Periodic };

inline const char* to_string(Boundary b) { return b == Boundary::Open ? "open" : "periodic"; }

// Full description of a lattice model.
//
// Under periodic boundaries every forward bond i -> i+n carries the phase
// e^{i n flux_theta}. The forward bonds that cross the boundary additionally
// carry e^{i twist}. The uniform-flux form uses twist = 0; the gauge where
// the whole flux sits on the boundary bonds uses flux_theta = 0 and
// twist = L * theta. Both fields are ignored for open boundaries.
struct ModelSpec {
  std::size_t L = 0;
  Boundary boundary = Boundary::Open;
  HoppingSet hoppings;
  double flux_theta = 0.0;
  double twist = 0.0;
  std::vector<PerturbationTerm> perturbations;

  int max_range() const { return hoppings.max_range(); }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline void validate(const ModelSpec& spec) {
  const int M = spec.hoppings.max_range();
  if (M < 1) throw InvalidModel("model has no hopping terms");
  if (spec.L <= 2 * static_cast<std::size_t>(M))
    throw InvalidModel("L = " + std::to_string(spec.L) + " must exceed 2*M = " + std::to_string(2 * M));
  if (!std::isfinite(spec.flux_theta) || !std::isfinite(spec.twist))
    throw InvalidModel("flux phases must be finite");
  for (std::size_t k = 0; k < spec.perturbations.size(); ++k) {
    const auto& p = spec.perturbations[k];
    if (p.site_i < 1 || p.site_i > spec.L || p.site_j < 1 || p.site_j > spec.L)
      throw InvalidModel("perturbation " + std::to_string(k) + " site (" + std::to_string(p.site_i) + "," +
                         std::to_string(p.site_j) + ") outside 1.." + std::to_string(spec.L));
    if (!std::isfinite(p.amplitude.real()) || !std::isfinite(p.amplitude.imag()))
      throw InvalidModel("perturbation " + std::to_string(k) + " amplitude is not finite");
  }
}

// Returns a copy with both phases reduced modulo 2pi.
inline ModelSpec normalized(ModelSpec spec) {
  spec.flux_theta = wrap_angle(spec.flux_theta);
  spec.twist = wrap_angle(spec.twist);
  return spec;
}

// Square complex matrix, row-major.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), a_(n * n) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dimension() const { return n_; }

  cplx& operator()(std::size_t r, std::size_t c) { return a_[r * n_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return a_[r * n_ + c]; }

  cplx* row(std::size_t r) { return a_.data() + r * n_; }
  const cplx* row(std::size_t r) const { return a_.data() + r * n_; }

  const std::vector<cplx>& entries() const { return a_; }

  DenseMatrix adjoint() const {
    DenseMatrix m(n_);
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = 0; c < n_; ++c) m(c, r) = std::conj((*this)(r, c));
    return m;
  }

  DenseMatrix& operator+=(const DenseMatrix& o) {
    if (o.n_ != n_) throw std::invalid_argument("matrix dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    if (o.n_ != n_) throw std::invalid_argument("matrix dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : a_) m = std::max(m, std::abs(z));
    return m;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<cplx> a_;
};

namespace detail {

inline void add_perturbations(DenseMatrix& h, const std::vector<PerturbationTerm>& terms) {
  for (const auto& p : terms) h(p.site_i - 1, p.site_j - 1) += p.amplitude;
}

}  // namespace detail

inline DenseMatrix build_hamiltonian(const ModelSpec& spec) {
  validate(spec);
  const std::size_t L = spec.L;
  DenseMatrix h(L);
  const bool periodic = spec.boundary == Boundary::Periodic;
  for (const auto& [n, t] : spec.hoppings.terms()) {
    const auto range = static_cast<std::size_t>(n);
    const cplx fwd = periodic ? t * std::polar(1.0, n * spec.flux_theta) : t;
    for (std::size_t i = 0; i + range < L; ++i) {
      h(i, i + range) += fwd;
      h(i + range, i) += std::conj(fwd);
    }
    if (periodic) {
      const cplx wrap = fwd * std::polar(1.0, spec.twist);
      // forward bonds i -> i+n-L crossing the boundary
      for (std::size_t i = L - range; i < L; ++i) {
        const std::size_t j = i + range - L;
        h(i, j) += wrap;
        h(j, i) += std::conj(wrap);
      }
    }
  }
  detail::add_perturbations(h, spec.perturbations);
  return h;
}

// Moves a uniform flux onto the boundary bonds via U = diag(e^{i theta j}),
// H -> U H U^dagger. Bulk bonds become flux-free; the forward wrap bonds pick
// up e^{i theta L}. Off-diagonal perturbation terms acquire e^{i theta (i-j)}.
inline ModelSpec apply_gauge_transform(const ModelSpec& spec) {
  if (spec.boundary != Boundary::Periodic)
    throw InvalidModel("gauge transform requires periodic boundary conditions");
  validate(spec);
  ModelSpec out = spec;
  const double theta = spec.flux_theta;
  if (theta == 0.0) return out;
  out.flux_theta = 0.0;
  out.twist = wrap_angle(spec.twist + theta * static_cast<double>(spec.L));
  for (auto& p : out.perturbations) {
    const double shift = static_cast<double>(p.site_i) - static_cast<double>(p.site_j);
    p.amplitude *= std::polar(1.0, theta * shift);
  }
  return out;
}

// True iff P conj(H) P == H entrywise within 1e-12, P the site inversion
// j -> L+1-j.
inline bool is_pt_symmetric(const ModelSpec& spec) {
  const DenseMatrix h = build_hamiltonian(spec);
  const std::size_t L = h.dimension();
  for (std::size_t r = 0; r < L; ++r)
    for (std::size_t c = 0; c < L; ++c)
      if (std::abs(std::conj(h(L - 1 - r, L - 1 - c)) - h(r, c)) > 1e-12) return false;
  return true;
}

// Maps the model onto a chain of new_size sites. Perturbations in the left
// half keep their site indices; those in the right half keep their distance
// to site L. Periodic models keep the total flux L*theta fixed.
inline ModelSpec resized(const ModelSpec& spec, std::size_t new_size) {
  ModelSpec out = spec;
  out.L = new_size;
  const auto old_l = static_cast<long long>(spec.L);
  const auto new_l = static_cast<long long>(new_size);
  auto remap = [&](std::size_t site) {
    const auto s = static_cast<long long>(site);
    const long long mapped = (2 * s <= old_l) ? s : s + (new_l - old_l);
    if (mapped < 1 || mapped > new_l) throw InvalidModel("cannot resize: perturbation falls outside the new chain");
    return static_cast<std::size_t>(mapped);
  };
  for (auto& p : out.perturbations) {
    p.site_i = remap(p.site_i);
    p.site_j = remap(p.site_j);
  }
  if (spec.boundary == Boundary::Periodic)
    out.flux_theta = spec.flux_theta * static_cast<double>(spec.L) / static_cast<double>(new_size);
  validate(out);
  return out;
}

}  // namespace nhl
