#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nhl/models.hpp"
#include "nhl/spectral_analysis.hpp"

using namespace nhl;

namespace {

std::vector<cplx> profile(std::size_t L, double c) {
  std::vector<cplx> v(L);
  for (std::size_t j = 1; j <= L; ++j) v[j - 1] = std::exp(c * static_cast<double>(j) / static_cast<double>(L));
  return v;
}

Spectrum spectrum_of(const ModelSpec& m) { return eig(build_hamiltonian(m)); }

double norm_of(const ModelSpec& m) { return spectral_norm_estimate(build_hamiltonian(m)); }

}  // namespace

TEST(Classify, HermitianChainIsReal) {
  const ModelSpec m = gain_chain(60, 1.0, 0.0);
  const auto c = classify_spectrum(spectrum_of(m), norm_of(m));
  EXPECT_EQ(c.n_com, 0u);
  EXPECT_EQ(c.p_com, 0.0);
  EXPECT_NEAR(c.tol_imag, 1e-8 * norm_of(m), 1e-20);
}

TEST(Classify, GainChainBreaksAlmostEverything) {
  const ModelSpec m = gain_chain(100, 1.0, 1.0);
  const auto c = classify_spectrum(spectrum_of(m), norm_of(m));
  EXPECT_GT(c.p_com, 0.9);
  EXPECT_DOUBLE_EQ(c.p_com, static_cast<double>(c.n_com) / 100.0);
}

TEST(Classify, FluxRingBelowThresholdIsReal) {
  const ModelSpec m = flux_ring({100, 1.0, 0.2, 0.5 / 100.0, std::numbers::pi / 2});
  EXPECT_EQ(classify_spectrum(spectrum_of(m), norm_of(m)).p_com, 0.0);
}

TEST(Classify, CutAndPartnersOnHandMadeList) {
  const std::vector<cplx> w = {{-1.0, 0.0}, {0.0, -0.5}, {0.0, 0.5}, {2.0, 1e-12}};
  const auto c = classify_eigenvalues(w, 1.0);
  ASSERT_EQ(c.complex_indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(c.conjugate_partner, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(c.max_pairing_distance(), 0.0);
  EXPECT_DOUBLE_EQ(c.p_com, 0.5);
  const auto ex = classify_eigenvalues(w, 1.0, std::nullopt, {1});
  EXPECT_EQ(ex.n_com, 1u);
  EXPECT_DOUBLE_EQ(ex.p_com, 0.25);
  EXPECT_EQ(classify_eigenvalues(w, 1.0, 0.6).n_com, 0u);
  EXPECT_THROW(classify_eigenvalues(w, 0.0), std::invalid_argument);
}

TEST(Classify, IndicesRespectTheCut) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<cplx> w(50);
    for (auto& z : w) z = {u(rng), u(rng) * std::pow(10.0, -12.0 * std::abs(u(rng)))};
    const auto c = classify_eigenvalues(w, 100.0);
    std::vector<bool> listed(w.size(), false);
    for (std::size_t k : c.complex_indices) listed[k] = true;
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(listed[i], std::abs(w[i].imag()) > c.tol_imag);
    EXPECT_EQ(c.p_com, static_cast<double>(c.n_com) / 50.0);
  }
}

TEST(Classify, PtModelsPairUp) {
  for (const ModelSpec& m : {flux_ring({60, 1.0, 0.8, 0.0, 1.5707963}), nnn_chain(70, 1.0, 0.5, 0.6),
                             flux_ring({90, 1.0, 1.0, 0.01, 1.5707963})}) {
    const double n = norm_of(m);
    const auto c = classify_spectrum(spectrum_of(m), n);
    EXPECT_GT(c.n_com, 0u);
    EXPECT_LE(c.max_pairing_distance(), 1e-8 * n);
  }
}

TEST(Classify, ZeroGainIsRealForHermitianModels) {
  for (const ModelSpec& m : {gain_chain(50, 1.0, 0.0), nnn_chain(51, 1.0, 0.4, 0.0),
                             flux_ring({40, 1.0, 0.0, 0.3, 1.0})}) {
    EXPECT_EQ(classify_spectrum(spectrum_of(m), norm_of(m)).p_com, 0.0);
  }
}

TEST(MeanPosition, Examples) {
  EXPECT_NEAR(mean_position(std::vector<cplx>(99, 1.0)), 50.0, 1e-12);
  std::vector<cplx> d(20, 0.0);
  d[6] = 1.0;
  EXPECT_EQ(mean_position(d), 7.0);
  // closed form: sum j q^j / sum q^j with q = e^{4/L}
  const double L = 100.0, q = std::exp(4.0 / L);
  const double sum = q * (std::pow(q, L) - 1.0) / (q - 1.0);
  const double wsum = q * (1.0 - (L + 1.0) * std::pow(q, L) + L * std::pow(q, L + 1.0)) / ((1.0 - q) * (1.0 - q));
  const double expected = wsum / sum;
  EXPECT_NEAR(mean_position(profile(100, 2.0)), expected, 1e-9);
  // continuum limit 100 * (1 / (1 - e^-4) - 1/4)
  EXPECT_NEAR(expected, 100.0 * (1.0 / (1.0 - std::exp(-4.0)) - 0.25), 0.6);
  EXPECT_THROW(mean_position(std::vector<cplx>(5, 0.0)), std::invalid_argument);
}

TEST(MeanPosition, BoundedAndInvariant) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t L = 3 + trial * 7;
    std::vector<cplx> v(L);
    for (auto& z : v) z = {nd(rng), nd(rng)};
    const double x = mean_position(v);
    EXPECT_GE(x, 1.0);
    EXPECT_LE(x, static_cast<double>(L));
    std::vector<cplx> w = v;
    const cplx f = 3.7 * std::polar(1.0, nd(rng));
    for (auto& z : w) z *= f;
    EXPECT_NEAR(mean_position(w), x, 1e-12 * L);
  }
}

TEST(HalfAsymmetry, Examples) {
  double direct = 0.0;
  for (int j = 1; j <= 100; ++j) direct += std::abs(j - 50.0);
  EXPECT_NEAR(half_asymmetry(std::vector<cplx>(100, 1.0)), direct / 100.0, 1e-12);
  EXPECT_NEAR(direct / 100.0, 25.0, 1e-12);
  std::vector<cplx> d(100, 0.0);
  d[49] = 1.0;
  EXPECT_EQ(half_asymmetry(d), 0.0);
  std::vector<cplx> edges(100);
  for (std::size_t j = 1; j <= 100; ++j)
    edges[j - 1] = std::exp(-0.2 * static_cast<double>(j)) + std::exp(-0.2 * static_cast<double>(101 - j));
  EXPECT_GT(half_asymmetry(edges), 25.0);
  EXPECT_THROW(half_asymmetry(std::vector<cplx>(4, 0.0)), std::invalid_argument);
}

TEST(DecayFit, ExactProfiles) {
  const IndexRange w = default_window(100, 1);
  EXPECT_NEAR(fit_decay_constant(profile(100, 2.0), w), 2.0, 1e-10);
  EXPECT_NEAR(fit_decay_constant(profile(100, -3.5), w), -3.5, 1e-10);
  std::vector<cplx> wave(100);
  for (std::size_t j = 0; j < 100; ++j) wave[j] = std::polar(1.0, 0.3 * static_cast<double>(j));
  EXPECT_NEAR(fit_decay_constant(wave, w), 0.0, 1e-10);
}

TEST(DecayFit, DefaultWindow) {
  const IndexRange w = default_window(100, 1);
  EXPECT_EQ(w.first, 21u);
  EXPECT_EQ(w.last, 80u);
  const IndexRange small = default_window(20, 1);
  EXPECT_EQ(small.first, 6u);
  EXPECT_EQ(small.last, 15u);
  const IndexRange wide = default_window(100, 30);
  EXPECT_EQ(wide.first, 31u);
  EXPECT_EQ(wide.last, 70u);
}

TEST(DecayFit, Rejections) {
  const auto v = profile(100, 1.0);
  EXPECT_THROW(fit_decay_constant(v, {40, 48}), std::invalid_argument);
  EXPECT_THROW(fit_decay_constant(v, {1, 50}), std::invalid_argument);
  EXPECT_THROW(fit_decay_constant(v, {2, 50}, 2), std::invalid_argument);
  EXPECT_THROW(fit_decay_constant(v, {50, 100}), std::invalid_argument);
  EXPECT_THROW(fit_decay_constant(v, {50, 101}), std::invalid_argument);
  auto z = v;
  z[60] = 0.0;
  EXPECT_THROW(fit_decay_constant(z, {40, 70}), std::invalid_argument);
  EXPECT_NO_THROW(fit_decay_constant(v, {2, 99}));
}

TEST(DecayFit, GainChainMidSpectrumStateIsScaleFree) {
  const ModelSpec m = gain_chain(400, 1.0, 1.0);
  const Spectrum s = spectrum_of(m);
  const std::size_t k = select_state(s, StateSelection::MedianImaginary);
  const double c = fit_decay_constant(s.eigenvectors[k], default_window(400, 1));
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_GT(std::abs(c), 0.1);
  EXPECT_LT(std::abs(c), 10.0);
}

TEST(ScaleFree, GainChainDecayConstantIsSizeIndependent) {
  const auto fit = fit_scale_free([](std::size_t L) { return gain_chain(L, 1.0, 1.0); }, {100, 200, 400});
  ASSERT_EQ(fit.c_estimates.size(), 3u);
  EXPECT_EQ(fit.status, "ok");
  EXPECT_LT(fit.c_relative_spread, 0.05);
  // the spectrum-averaged imaginary part falls off as 1/L
  EXPECT_NEAR(fit.mean_im_exponent, -1.0, 0.1);
  EXPECT_LT(fit.im_scaling_exponent, 0.0);
}

TEST(ScaleFree, ZeroGainReportsNoComplexStates) {
  const auto fit = fit_scale_free([](std::size_t L) { return gain_chain(L, 1.0, 0.0); }, {30, 40, 50});
  EXPECT_FALSE(fit.has_complex_states);
  EXPECT_EQ(fit.status, "no complex states");
  EXPECT_TRUE(std::isnan(fit.c_mean));
}

TEST(ScaleFree, Rejections) {
  auto fam = [](std::size_t L) { return gain_chain(L, 1.0, 1.0); };
  EXPECT_THROW(fit_scale_free(fam, {30, 40}), std::invalid_argument);
  EXPECT_THROW(fit_scale_free(fam, {30, 50, 40}), std::invalid_argument);
}

TEST(ScaleFree, SelectionRules) {
  Spectrum s;
  s.eigenvalues = {{0, 1}, {0, -1}, {0, 1}, {0, 0}, {0, 0.5}};
  s.eigenvectors.assign(5, std::vector<cplx>(3, 1.0));
  s.residuals.assign(5, 0.0);
  EXPECT_EQ(select_state(s, StateSelection::MaxImaginary), 0u);
  EXPECT_EQ(select_state(s, StateSelection::MedianImaginary), 4u);
}

TEST(SelfSimilarity, RescaledCurvesAgreeAcrossSizes) {
  const PositionCurve a = rescaled_position_curve(spectrum_of(gain_chain(100, 1.0, 1.0)));
  const PositionCurve b = rescaled_position_curve(spectrum_of(gain_chain(200, 1.0, 1.0)));
  // the curves coincide well away from the band edges
  EXPECT_LT(curve_distance(b, a), 0.1);
  for (double x : a.x) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(SelfSimilarity, InterpolationHelpers) {
  const PositionCurve c{{0.1, 0.5, 0.9}, {1.0, 2.0, 4.0}};
  EXPECT_EQ(interpolate(c, 0.0), 1.0);
  EXPECT_EQ(interpolate(c, 1.0), 4.0);
  EXPECT_NEAR(interpolate(c, 0.3), 1.5, 1e-15);
  EXPECT_NEAR(interpolate(c, 0.7), 3.0, 1e-15);
  EXPECT_EQ(curve_distance(c, c), 0.0);
}

TEST(BoundStates, StrongGainChainHasOneEdgeState) {
  const ModelSpec m = gain_chain(200, 1.0, 1.5);
  const Spectrum s = spectrum_of(m);
  const auto b = detect_bound_states(m, s, norm_of(m));
  ASSERT_EQ(b.size(), 1u);
  // beta = i g / t gives E = i (g - t^2 / g)
  EXPECT_NEAR(std::abs(s.eigenvalues[b[0]] - cplx{0.0, 1.5 - 1.0 / 1.5}), 0.0, 1e-6);
}

TEST(BoundStates, WeakGainChainHasNone) {
  const ModelSpec m = gain_chain(200, 1.0, 0.5);
  EXPECT_TRUE(detect_bound_states(m, spectrum_of(m), norm_of(m)).empty());
}

TEST(BoundStates, NextNearestChainHasTwoEdgeModesAndRealContinuum) {
  const ModelSpec m = nnn_chain(120, 1.0, 0.1, 2.0);
  const Spectrum s = spectrum_of(m);
  const double n = norm_of(m);
  const auto b = detect_bound_states(m, s, n);
  EXPECT_EQ(b.size(), 2u);
  for (std::size_t k : b) EXPECT_GT(std::abs(s.eigenvalues[k].imag()), 1e-8 * n);
  EXPECT_EQ(classify_continuum(m, s, n).n_com, 0u);
  EXPECT_EQ(classify_spectrum(s, n).n_com, 2u);
}

TEST(BoundStates, StatisticSeparatesFamilies) {
  EXPECT_LT(window_decay_statistic(profile(200, 3.0), 1), 10.0);
  EXPECT_GT(window_decay_statistic(profile(200, -40.0), 1), 10.0);
  std::vector<cplx> edge(200, 0.0);
  edge[0] = 1.0;
  edge[1] = 0.1;
  EXPECT_EQ(window_decay_statistic(edge, 1), std::numeric_limits<double>::infinity());
  EXPECT_EQ(window_decay_statistic(profile(10, -40.0), 1), 0.0);
}

TEST(StateMetrics, ColumnsAreConsistent) {
  const ModelSpec m = gain_chain(200, 1.0, 1.5);
  const Spectrum s = spectrum_of(m);
  const auto b = detect_bound_states(m, s, norm_of(m));
  const auto rows = state_metrics(m, s, b);
  ASSERT_EQ(rows.size(), 200u);
  std::size_t nb = 0;
  for (const auto& r : rows) {
    EXPECT_EQ(r.energy, s.eigenvalues[r.index]);
    EXPECT_EQ(r.mean_position, mean_position(s.eigenvectors[r.index]));
    nb += r.is_bound ? 1 : 0;
  }
  EXPECT_EQ(nb, b.size());
  EXPECT_GT(std::abs(rows[b[0]].c_fit), 10.0);
}
