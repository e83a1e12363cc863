#include <cmath>

#include <gtest/gtest.h>

#include "dfgan/errors.h"
#include "dfgan/theory.h"
#include "oracles.h"

namespace dfgan {
namespace {

TorusGrid z(std::size_t n) { return TorusGrid({n}); }

DiscretePdf pdf(const TorusGrid& g, std::vector<double> m) { return DiscretePdf(g, std::move(m)); }

DiscretePdf random_pdf(const TorusGrid& g, Rng& rng, bool strictly_positive) {
  std::vector<double> m(g.size());
  double s = 0.0;
  for (double& v : m) {
    v = rng.uniform() + (strictly_positive ? 0.05 : 0.0);
    if (!strictly_positive && rng.uniform() < 0.3) v = 0.0;
    s += v;
  }
  if (s == 0.0) {
    m[0] = 1.0;
    s = 1.0;
  }
  for (double& v : m) v /= s;
  return DiscretePdf(g, m, 1e-9);
}

TorusGrid random_grid(Rng& rng) {
  if (rng.uniform() < 0.5) return TorusGrid({1 + rng.index(12)});
  return TorusGrid({1 + rng.index(6), 1 + rng.index(6)});
}

TEST(TorusGrid, FlatAndCoordsRoundTrip) {
  const TorusGrid g({3, 4});
  EXPECT_EQ(g.size(), 12u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    EXPECT_EQ(g.flat(c), i);
    EXPECT_EQ(c, oracle::unflatten(i, {3, 4}));
  }
  const std::size_t a = g.flat(std::vector<std::size_t>{2, 1});
  const std::size_t b = g.flat(std::vector<std::size_t>{1, 3});
  EXPECT_EQ(g.coords(g.difference(a, b)), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(g.coords(g.sum(a, b)), (std::vector<std::size_t>{0, 0}));
  EXPECT_THROW(TorusGrid(std::vector<std::size_t>{}), ConfigError);
}

TEST(DiscretePdf, Validation) {
  EXPECT_THROW(pdf(z(2), {0.6, 0.6}), ConfigError);
  EXPECT_THROW(pdf(z(2), {1.5, -0.5}), ConfigError);
  EXPECT_THROW(pdf(z(3), {0.5, 0.5}), ConfigError);
  EXPECT_NO_THROW(pdf(z(2), {0.25, 0.75}));
}

TEST(CircConvolve, DeltaZeroIsIdentity) {
  const DiscretePdf p = pdf(z(4), {0.1, 0.2, 0.3, 0.4});
  EXPECT_EQ(circ_convolve(p, DiscretePdf::delta(z(4), 0)).mass(), p.mass());
}

TEST(CircConvolve, DeltaOneShifts) {
  const DiscretePdf p = pdf(z(4), {0.5, 0.5, 0.0, 0.0});
  const auto r = circ_convolve(p, DiscretePdf::delta(z(4), 1)).mass();
  EXPECT_EQ(r, (std::vector<double>{0.0, 0.5, 0.5, 0.0}));
}

TEST(CircConvolve, HandValueOnZ3) {
  const auto r = circ_convolve(pdf(z(3), {0.5, 0.25, 0.25}), pdf(z(3), {0.5, 0.5, 0.0})).mass();
  const auto ref = oracle::circ_convolve({0.5, 0.25, 0.25}, {0.5, 0.5, 0.0}, {3});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r[i], ref[i], 1e-15);
  EXPECT_NEAR(r[0], 0.375, 1e-15);
  EXPECT_NEAR(r[1], 0.375, 1e-15);
  EXPECT_NEAR(r[2], 0.25, 1e-15);
}

TEST(CircConvolve, MatchesDoubleSumAndIsCommutativeAssociative) {
  Rng rng(1);
  for (int t = 0; t < 40; ++t) {
    const TorusGrid g = random_grid(rng);
    const DiscretePdf a = random_pdf(g, rng, false);
    const DiscretePdf b = random_pdf(g, rng, false);
    const DiscretePdf c = random_pdf(g, rng, false);
    const auto ab = circ_convolve(a, b).mass();
    const auto ref = oracle::circ_convolve(a.mass(), b.mass(), g.dims());
    const auto ba = circ_convolve(b, a).mass();
    const auto ab_c = circ_convolve(circ_convolve(a, b), c).mass();
    const auto a_bc = circ_convolve(a, circ_convolve(b, c)).mass();
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(ab[i], ref[i], 1e-12);
      EXPECT_NEAR(ab[i], ba[i], 1e-12);
      EXPECT_NEAR(ab_c[i], a_bc[i], 1e-12);
      EXPECT_GE(ab[i], 0.0);
      total += ab[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(CircConvolve, GridMismatch) {
  EXPECT_THROW(circ_convolve(DiscretePdf::uniform(z(2)), DiscretePdf::uniform(z(3))), ConfigError);
}

TEST(Spectrum, DeltaZeroIsAllOnes) {
  for (const Complex& v : spectrum(DiscretePdf::delta(TorusGrid({3, 4}), 0)).values) {
    EXPECT_NEAR(std::abs(v - Complex(1.0)), 0.0, 1e-15);
  }
}

TEST(Spectrum, UniformIsUnitImpulse) {
  const auto s = spectrum(DiscretePdf::uniform(z(5))).values;
  EXPECT_NEAR(std::abs(s[0] - Complex(1.0)), 0.0, 1e-15);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_NEAR(std::abs(s[i]), 0.0, 1e-15);
}

TEST(Spectrum, DeltaOneOnZ2) {
  const auto s = spectrum(DiscretePdf::delta(z(2), 1)).values;
  EXPECT_NEAR(std::abs(s[0] - Complex(1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s[1] - Complex(-1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(1.0 + s[1]), 0.0, 1e-15);
}

TEST(Spectrum, MatchesNaiveDftAndConvolutionTheorem) {
  Rng rng(2);
  for (int t = 0; t < 40; ++t) {
    const TorusGrid g = random_grid(rng);
    const DiscretePdf p = random_pdf(g, rng, false);
    const DiscretePdf q = random_pdf(g, rng, false);
    const auto sp = spectrum(p).values;
    const auto ref = oracle::dft(p.mass(), g.dims());
    const auto sq = spectrum(q).values;
    const auto spq = spectrum(circ_convolve(p, q)).values;
    EXPECT_NEAR(std::abs(sp[0] - Complex(1.0)), 0.0, 1e-12);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(std::abs(sp[i] - ref[i]), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(spq[i] - sp[i] * sq[i]), 0.0, 1e-10);
      // Conjugate symmetry of a real input.
      std::vector<std::size_t> neg = g.coords(i);
      for (std::size_t a = 0; a < neg.size(); ++a) neg[a] = (g.dims()[a] - neg[a]) % g.dims()[a];
      EXPECT_NEAR(std::abs(sp[g.flat(neg)] - std::conj(sp[i])), 0.0, 1e-12);
    }
    const auto back = inverse_dft_real(spectrum(p));
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(back[i], p[i], 1e-12);
  }
}

TEST(Jsd, FrozenValues) {
  EXPECT_EQ(jsd(pdf(z(2), {0.3, 0.7}), pdf(z(2), {0.3, 0.7})), 0.0);
  EXPECT_NEAR(jsd(DiscretePdf::delta(z(2), 0), DiscretePdf::delta(z(2), 1)), oracle::kLn2, 1e-15);
  EXPECT_NEAR(jsd(pdf(z(2), {0.5, 0.5}), pdf(z(2), {0.25, 0.75})), oracle::kJsdHalfVsQuarter, 1e-15);
  EXPECT_NEAR(oracle::jsd({0.5, 0.5}, {0.25, 0.75}), oracle::kJsdHalfVsQuarter, 1e-15);
}

TEST(Jsd, PropertiesOnRandomPdfs) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const TorusGrid g = random_grid(rng);
    const DiscretePdf p = random_pdf(g, rng, false);
    const DiscretePdf q = random_pdf(g, rng, false);
    const double v = jsd(p, q);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, oracle::kLn2 + 1e-15);
    EXPECT_NEAR(v, jsd(q, p), 1e-15);
    EXPECT_NEAR(v, oracle::jsd(p.mass(), q.mass()), 1e-13);
    EXPECT_EQ(jsd(p, p), 0.0);
  }
}

TEST(OptimalDiscriminator, EqualDistributionsGiveHalfExactly) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const TorusGrid g = random_grid(rng);
    const DiscretePdf p = random_pdf(g, rng, false);
    for (double d : optimal_discriminator(p, p, random_pdf(g, rng, false))) EXPECT_EQ(d, 0.5);
  }
}

TEST(OptimalDiscriminator, Z2UniformNoise) {
  const auto d = optimal_discriminator(DiscretePdf::delta(z(2), 0), DiscretePdf::delta(z(2), 1),
                                       DiscretePdf::uniform(z(2)));
  EXPECT_EQ(d[0], 0.75);
  EXPECT_EQ(d[1], 0.25);
}

TEST(OptimalDiscriminator, NoFilteringSaturates) {
  const auto d = optimal_discriminator(DiscretePdf::delta(z(4), 0), DiscretePdf::delta(z(4), 2),
                                       DiscretePdf::delta(z(4), 0));
  EXPECT_EQ(d[0], 1.0);
  EXPECT_EQ(d[2], 0.0);
  EXPECT_EQ(d[1], 0.5);  // 0/0 cells
}

TEST(MixtureObjective, Values) {
  const DiscretePdf u = DiscretePdf::uniform(z(2));
  const DiscretePdf d0 = DiscretePdf::delta(z(2), 0), d1 = DiscretePdf::delta(z(2), 1);
  EXPECT_NEAR(mixture_objective(d0, d1, u), oracle::kJsdZ2Mixtures, 1e-15);
  EXPECT_NEAR(oracle::jsd({0.75, 0.25}, {0.25, 0.75}), oracle::kJsdZ2Mixtures, 1e-15);
  EXPECT_EQ(mixture_objective(d0, d0, u), 0.0);
  Rng rng(5);
  const TorusGrid g({3, 3});
  const DiscretePdf a = random_pdf(g, rng, false), b = random_pdf(g, rng, false),
                    e = random_pdf(g, rng, true);
  EXPECT_NEAR(mixture_objective(a, b, e), mixture_objective(b, a, e), 1e-15);
}

TEST(SolveMixture, IdentityFilter) {
  const DiscretePdf t = pdf(z(3), {0.2, 0.3, 0.5});
  const auto s = solve_mixture(t, DiscretePdf::delta(z(3), 0));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s.q[i], t[i], 1e-15);
}

TEST(SolveMixture, Z2UniformHandSolve) {
  const DiscretePdf u = DiscretePdf::uniform(z(2));
  const DiscretePdf t = pdf(z(2), {0.5 * (0.75 + 0.5), 0.5 * (0.25 + 0.5)});
  const auto s = solve_mixture(t, u);
  EXPECT_NEAR(s.q[0], 0.75, 1e-15);
  EXPECT_NEAR(s.q[1], 0.25, 1e-15);
  // Independent 2x2 elimination of (I + C) q = 2t.
  const auto ref = oracle::gauss_solve({{1.5, 0.5}, {0.5, 1.5}}, {2 * t[0], 2 * t[1]});
  EXPECT_NEAR(ref[0], 0.75, 1e-15);
  EXPECT_NEAR(ref[1], 0.25, 1e-15);
}

TEST(SolveMixture, DegenerateZ2DeltaOne) {
  const DiscretePdf e = DiscretePdf::delta(z(2), 1);
  EXPECT_NEAR(min_filter_gap(e), 0.0, 1e-15);
  try {
    solve_mixture(DiscretePdf::uniform(z(2)), e);
    FAIL() << "expected NonUniqueError";
  } catch (const NonUniqueError& err) {
    EXPECT_LE(err.min_gap(), kSingularityTolerance);
  }
}

TEST(SolveMixture, RoundTripAgainstIndependentSolver) {
  Rng rng(6);
  for (int t = 0; t < 60; ++t) {
    const TorusGrid g = random_grid(rng);
    const DiscretePdf q = random_pdf(g, rng, false);
    const DiscretePdf e = random_pdf(g, rng, true);
    ASSERT_GT(min_filter_gap(e), 1e-6);
    const DiscretePdf mix = filtered_mixture(q, e);
    const auto s = solve_mixture(mix, e);
    // Dense (I + C_eps) assembled from the direct convolution oracle.
    const std::size_t n = g.size();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> unit(n, 0.0);
      unit[j] = 1.0;
      const auto colj = oracle::circ_convolve(unit, e.mass(), g.dims());
      for (std::size_t i = 0; i < n; ++i) a[i][j] = (i == j ? 1.0 : 0.0) + colj[i];
    }
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = 2.0 * mix[i];
    const auto ref = oracle::gauss_solve(a, b);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(s.q[i], q[i], 1e-8);
      EXPECT_NEAR(ref[i], q[i], 1e-8);
    }
    EXPECT_LE(s.spectral_residual, 1e-8);
    EXPECT_GE(s.condition_spectral, 1.0);
  }
}

TEST(SolveMixture, PerturbationIsNotInKernel) {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    const TorusGrid g({2 + rng.index(8)});
    const DiscretePdf e = random_pdf(g, rng, true);
    std::vector<double> delta(g.size(), 0.0);
    delta[0] = 0.1;
    delta[1 + rng.index(g.size() - 1)] = -0.1;
    const auto c = oracle::circ_convolve(delta, e.mass(), g.dims());
    double norm = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) norm = std::max(norm, std::abs(delta[i] + c[i]));
    EXPECT_GT(norm, 0.0);
  }
}

TEST(VerifyTheorem, AllRandomTrialsRecover) {
  Rng rng(8);
  TheoremOptions o;
  o.trials = 50;
  o.max_grid = 64;
  o.include_degenerate = true;
  const TheoremReport r = verify_theorem(o, rng);
  EXPECT_TRUE(r.ok()) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_EQ(r.passed, 50u);
  EXPECT_GT(r.degenerate_total, 0u);
  EXPECT_EQ(r.degenerate_flagged, r.degenerate_total);
  EXPECT_LE(r.worst_residual, 1e-8);
}

TEST(VerifyTheorem, RejectsZeroTrials) {
  Rng rng(9);
  TheoremOptions o;
  o.trials = 0;
  EXPECT_THROW(verify_theorem(o, rng), ConfigError);
}

TEST(DegenerateFilters, SpectrumReachesMinusOne) {
  Rng rng(10);
  const auto filters = degenerate_filters(rng, 64, 20);
  ASSERT_FALSE(filters.empty());
  bool has_z2 = false;
  for (const DiscretePdf& f : filters) {
    EXPECT_LE(min_filter_gap(f), kSingularityTolerance);
    EXPECT_LE(f.grid().size(), 64u);
    if (f.grid().dims() == std::vector<std::size_t>{2} && f[1] == 1.0) has_z2 = true;
  }
  EXPECT_TRUE(has_z2);
}

TEST(StrictlyPositiveFilter, NeverDegenerate) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const TorusGrid g = random_grid(rng);
    const DiscretePdf e = random_pdf(g, rng, true);
    const auto s = spectrum(e).values;
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(std::abs(s[i]), 1.0);
    EXPECT_GT(min_filter_gap(e), 0.0);
  }
}

}  // namespace
}  // namespace dfgan
