#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "nhl/eigensolver.hpp"
#include "nhl/lattice.hpp"
#include "nhl/models.hpp"
#include "test_util.hpp"

using namespace nhl;
using nhl::testing::multiset_distance;

namespace {

ModelSpec chain(std::size_t L, Boundary b = Boundary::Open) {
  ModelSpec s;
  s.L = L;
  s.boundary = b;
  s.hoppings.set(1, 1.0);
  return s;
}

}  // namespace

TEST(HoppingSet, ZeroAmplitudeRemovesTerm) {
  HoppingSet h{{1, 1.0}, {2, 0.5}};
  EXPECT_EQ(h.max_range(), 2);
  h.set(2, 0.0);
  EXPECT_EQ(h.max_range(), 1);
  EXPECT_EQ(h.terms().size(), 1u);
  EXPECT_THROW(h.set(0, 1.0), InvalidModel);
  EXPECT_THROW(h.set(1, cplx{std::nan(""), 0.0}), InvalidModel);
}

TEST(BuildHamiltonian, GainOnFirstSite) {
  ModelSpec s = chain(3);
  s.perturbations.push_back({1, 1, cplx{0.0, 2.0}});
  const DenseMatrix h = build_hamiltonian(s);
  const cplx expected[3][3] = {{{0, 2}, 1, 0}, {1, 0, 1}, {0, 1, 0}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(h(r, c), expected[r][c]) << r << "," << c;
}

TEST(BuildHamiltonian, PeriodicFluxPhases) {
  ModelSpec s = chain(4, Boundary::Periodic);
  s.flux_theta = std::numbers::pi / 8;
  const DenseMatrix h = build_hamiltonian(s);
  const cplx f = std::polar(1.0, std::numbers::pi / 8);
  EXPECT_NEAR(std::abs(h(0, 1) - f), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h(1, 0) - std::conj(f)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h(3, 0) - f), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h(0, 3) - std::conj(f)), 0.0, 1e-15);
  EXPECT_EQ(h(0, 2), cplx{});
}

TEST(BuildHamiltonian, OpenChainHasNoWrapBonds) {
  ModelSpec s = chain(6);
  s.hoppings.set(2, 0.3);
  const DenseMatrix h = build_hamiltonian(s);
  EXPECT_EQ(h(5, 0), cplx{});
  EXPECT_EQ(h(0, 5), cplx{});
  EXPECT_EQ(h(4, 0), cplx{});
  EXPECT_EQ(h(0, 2), cplx{0.3});
}

TEST(BuildHamiltonian, LongRangePeriodicWrap) {
  ModelSpec s = chain(7, Boundary::Periodic);
  s.hoppings.set(3, cplx{0.2, 0.1});
  const DenseMatrix h = build_hamiltonian(s);
  // site 6 -> site 2 crosses the boundary with range 3
  EXPECT_EQ(h(5, 1), (cplx{0.2, 0.1}));
  EXPECT_EQ(h(1, 5), (cplx{0.2, -0.1}));
  EXPECT_EQ(h.adjoint(), h);
}

TEST(BuildHamiltonian, RejectsInvalidModels) {
  EXPECT_THROW(build_hamiltonian(chain(2)), InvalidModel);
  ModelSpec s = chain(5);
  s.hoppings.set(2, 0.5);
  s.L = 4;
  EXPECT_THROW(build_hamiltonian(s), InvalidModel);
  ModelSpec p = chain(5);
  p.perturbations.push_back({6, 1, 1.0});
  EXPECT_THROW(build_hamiltonian(p), InvalidModel);
  p.perturbations = {{0, 1, 1.0}};
  EXPECT_THROW(build_hamiltonian(p), InvalidModel);
  ModelSpec e;
  e.L = 5;
  EXPECT_THROW(build_hamiltonian(e), InvalidModel);
}

TEST(BuildHamiltonian, HermitianWithoutPerturbations) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ModelSpec s = chain(9 + trial, trial % 2 ? Boundary::Periodic : Boundary::Open);
    s.hoppings.set(1, cplx{u(rng), u(rng)});
    s.hoppings.set(2, cplx{u(rng), u(rng)});
    s.hoppings.set(3, cplx{u(rng), u(rng)});
    s.flux_theta = trial % 2 ? 3.0 * u(rng) : 0.0;
    const DenseMatrix h = build_hamiltonian(s);
    EXPECT_EQ((h - h.adjoint()).max_abs(), 0.0);
  }
}

TEST(BuildHamiltonian, LinearInPerturbations) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> site(1, 12);
  for (int trial = 0; trial < 10; ++trial) {
    ModelSpec base = chain(12, Boundary::Periodic);
    base.flux_theta = u(rng);
    ModelSpec a = base, b = base, both = base;
    for (int k = 0; k < 3; ++k) {
      PerturbationTerm t{site(rng), site(rng), cplx{u(rng), u(rng)}};
      a.perturbations.push_back(t);
      both.perturbations.push_back(t);
      PerturbationTerm q{site(rng), site(rng), cplx{u(rng), u(rng)}};
      b.perturbations.push_back(q);
      both.perturbations.push_back(q);
    }
    const DenseMatrix lhs = build_hamiltonian(both);
    const DenseMatrix rhs = build_hamiltonian(a) + (build_hamiltonian(b) - build_hamiltonian(base));
    EXPECT_LT((lhs - rhs).max_abs(), 1e-15);
  }
}

TEST(GaugeTransform, ZeroFluxIsIdentity) {
  ModelSpec s = flux_ring({10, 1.0, 0.4, 0.0, 0.3});
  EXPECT_EQ(apply_gauge_transform(s), s);
}

TEST(GaugeTransform, MovesFluxToWrapBond) {
  ModelSpec s = chain(6, Boundary::Periodic);
  s.flux_theta = std::numbers::pi / 6;
  const ModelSpec g = apply_gauge_transform(s);
  EXPECT_EQ(g.flux_theta, 0.0);
  const DenseMatrix h = build_hamiltonian(g);
  for (std::size_t i = 0; i + 1 < 6; ++i) EXPECT_NEAR(std::abs(h(i, i + 1) - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(h(5, 0) - std::polar(1.0, -std::numbers::pi)), 0.0, 1e-14);
}

TEST(GaugeTransform, RejectsOpenBoundary) { EXPECT_THROW(apply_gauge_transform(chain(6)), InvalidModel); }

TEST(GaugeTransform, PreservesSpectrum) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 5; ++trial) {
    ModelSpec s = flux_ring({20, 1.0, 0.7, u(rng), u(rng)});
    s.hoppings.set(2, cplx{0.3, -0.2});
    s.perturbations.push_back({3, 5, cplx{0.2, 0.4}});
    s.perturbations.push_back({19, 2, cplx{-0.1, 0.3}});
    const auto a = eigenvalues(build_hamiltonian(s));
    const auto b = eigenvalues(build_hamiltonian(apply_gauge_transform(s)));
    EXPECT_LT(multiset_distance(a, b), 1e-10);
  }
}

TEST(PtSymmetry, Examples) {
  EXPECT_FALSE(is_pt_symmetric(gain_chain(20, 1.0, 1.0)));
  EXPECT_TRUE(is_pt_symmetric(nnn_chain(20, 1.0, 0.4, 0.7)));
  EXPECT_TRUE(is_pt_symmetric(nnn_chain(20, 1.0, 0.4, 0.7, EdgePotential::Symmetric)));
  EXPECT_TRUE(is_pt_symmetric(flux_ring({20, 1.0, 0.8, 0.03, 0.9})));
  EXPECT_TRUE(is_pt_symmetric(flux_ring({21, 1.0, 0.8, 0.03, std::numbers::pi / 2})));
}

TEST(Resize, RemapsEdgeTermsAndKeepsFlux) {
  ModelSpec s = flux_ring({10, 1.0, 0.5, 0.05, 0.2});
  s.perturbations.push_back({9, 10, 0.1});
  const ModelSpec r = resized(s, 30);
  EXPECT_EQ(r.L, 30u);
  EXPECT_EQ(r.perturbations[0].site_i, 1u);
  EXPECT_EQ(r.perturbations[1].site_i, 30u);
  EXPECT_EQ(r.perturbations[2].site_i, 29u);
  EXPECT_EQ(r.perturbations[2].site_j, 30u);
  EXPECT_NEAR(r.flux_theta * 30, s.flux_theta * 10, 1e-15);
}

TEST(Normalized, WrapsPhases) {
  ModelSpec s = chain(5, Boundary::Periodic);
  s.flux_theta = -0.5;
  s.twist = 7.0;
  const ModelSpec n = normalized(s);
  EXPECT_NEAR(n.flux_theta, 2 * std::numbers::pi - 0.5, 1e-15);
  EXPECT_NEAR(n.twist, 7.0 - 2 * std::numbers::pi, 1e-15);
}
