#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "dfgan/errors.h"
#include "dfgan/metrics.h"
#include "dfgan/rng.h"
#include "dfgan/synthdata.h"
#include "oracles.h"

namespace dfgan {
namespace {

namespace fs = std::filesystem;

RealMatrix points(std::initializer_list<double> xs) {
  RealMatrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

double hjsd(const RealMatrix& a, const RealMatrix& b, std::size_t bins, double lo, double hi,
            double alpha) {
  const HistogramRange r[] = {{lo, hi}};
  return histogram_jsd(a, b, bins, r, alpha);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(HistogramJsd, IdenticalIsZero) {
  Rng rng(1);
  const RealMatrix x = rng.normal_matrix(300, 2);
  EXPECT_EQ(hjsd(x, x, 16, -4, 4, 1e-6), 0.0);
}

TEST(HistogramJsd, DisjointBinsSaturate) {
  EXPECT_NEAR(hjsd(points({-1, -1, -1}), points({1, 1}), 2, -2, 2, 1e-6), oracle::kLn2, 1e-4);
}

TEST(HistogramJsd, EqualHistograms) {
  EXPECT_EQ(hjsd(points({-1, 1}), points({1, -1}), 2, -2, 2, 1e-6), 0.0);
}

TEST(HistogramJsd, OutOfRangeClipsToEdgeBins) {
  EXPECT_EQ(hjsd(points({-100, 100}), points({-1.5, 1.5}), 2, -2, 2, 1e-6), 0.0);
}

TEST(HistogramJsd, MatchesOracleOnHandHistogram) {
  // real: bins {2, 2}; fake: bins {1, 3}.
  const double v = hjsd(points({-1, -1, 1, 1}), points({-1, 1, 1, 1}), 2, -2, 2, 0.0);
  EXPECT_NEAR(v, oracle::kJsdHalfVsQuarter, 1e-15);
}

TEST(HistogramJsd, SymmetricAndOrderInvariant) {
  Rng rng(2);
  const RealMatrix a = rng.normal_matrix(200, 2);
  const RealMatrix b = 0.5 * rng.normal_matrix(150, 2).array() + 0.3;
  const HistogramRange r[] = {{-4, 4}};
  const double ab = histogram_jsd(a, b, 8, r, 1e-6);
  EXPECT_NEAR(ab, histogram_jsd(b, a, 8, r, 1e-6), 1e-15);
  const RealMatrix a_rev = a.colwise().reverse();
  EXPECT_EQ(ab, histogram_jsd(a_rev, b, 8, r, 1e-6));
  EXPECT_GE(ab, 0.0);
  EXPECT_LE(ab, oracle::kLn2);
}

TEST(HistogramJsd, SmoothingMonotone) {
  const RealMatrix a = points({-1, -1, -1}), b = points({1, 1});
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.0, 1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3, 1e6}) {
    const double v = hjsd(a, b, 2, -2, 2, alpha);
    EXPECT_LE(v, oracle::kLn2 + 1e-15);
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(HistogramJsd, PerDimensionRanges) {
  RealMatrix a(2, 2), b(2, 2);
  a << 0.5, 10.0, 0.5, 10.0;
  b << 0.5, 10.0, 0.5, 30.0;
  const HistogramRange r[] = {{0, 1}, {0, 40}};
  EXPECT_GT(histogram_jsd(a, b, 2, r, 0.0), 0.0);
  const HistogramRange bad[] = {{0, 1}, {0, 1}, {0, 1}};
  EXPECT_THROW(histogram_jsd(a, b, 2, bad, 0.0), ConfigError);
}

TEST(HistogramJsd, Validation) {
  EXPECT_THROW(hjsd(points({1}), RealMatrix(0, 1), 2, -1, 2, 0.0), ConfigError);
  EXPECT_THROW(hjsd(points({1}), points({1}), 1, -1, 2, 0.0), ConfigError);
}

TEST(ModeCoverage, OnePerCenter) {
  MixtureSpec spec;
  const RealMatrix c = mixture_centers(spec);
  const ModeCoverage m = mode_coverage(c, c, 0.02, 1);
  EXPECT_EQ(m.covered, 8u);
  EXPECT_EQ(m.hq_fraction, 1.0);
}

TEST(ModeCoverage, CollapsedSamples) {
  const RealMatrix c = mixture_centers(MixtureSpec{});
  RealMatrix s(50, 2);
  s.rowwise() = c.row(3);
  const ModeCoverage m = mode_coverage(s, c, 0.02, 20);
  EXPECT_EQ(m.covered, 1u);
  EXPECT_EQ(m.hq_fraction, 1.0);
}

TEST(ModeCoverage, ThreeSigmaBoundary) {
  RealMatrix c(1, 2), s(2, 2);
  c << 0.0, 0.0;
  s << 4.0 * 0.1, 0.0, 3.0 * 0.1 - 1e-12, 0.0;
  const ModeCoverage m = mode_coverage(s, c, 0.1, 1);
  EXPECT_EQ(m.hq_fraction, 0.5);
  EXPECT_EQ(m.covered, 1u);
  EXPECT_EQ(mode_coverage(s, c, 0.1, 2).covered, 0u);
}

TEST(ModeCoverage, TiesGoToLowestIndex) {
  RealMatrix c(2, 1), s(1, 1);
  c << -1.0, 1.0;
  s << 0.0;
  EXPECT_EQ(mode_coverage(s, c, 1.0, 1).covered, 1u);
}

TEST(ModeCoverage, PermutationInvariantAndMonotone) {
  Rng rng(3);
  MixtureSpec spec;
  spec.mode_std = 0.05;
  const RealMatrix c = mixture_centers(spec);
  const RealMatrix s = generate(spec).samples.topRows(400) + 0.05 * rng.normal_matrix(400, 2);
  const ModeCoverage m = mode_coverage(s, c, spec.mode_std, 20);
  const ModeCoverage rev = mode_coverage(s.colwise().reverse(), c.colwise().reverse(), spec.mode_std, 20);
  EXPECT_EQ(m.covered, rev.covered);
  EXPECT_EQ(m.hq_fraction, rev.hq_fraction);
  std::size_t prev = 0;
  for (Eigen::Index n : {50, 100, 200, 400}) {
    const std::size_t k = mode_coverage(s.topRows(n), c, spec.mode_std, 20).covered;
    EXPECT_GE(k, prev);
    prev = k;
  }
}

MetricsRecord sample_record() {
  MetricsRecord r;
  r.iter = 100;
  r.loss_d = -1.25;
  r.loss_g = 0.1;
  r.loss_eps = 3.0;
  r.grad_norm_g = 12.5;
  r.hist_jsd = 0.2;
  r.modes_covered = 7;
  r.hq_fraction = 0.75;
  return r;
}

TEST(Csv, RowFormatAndRoundTrip) {
  MetricsRecord r = sample_record();
  EXPECT_EQ(to_csv_row(r), "100,-1.25,0.10000000000000001,3,12.5,,0.20000000000000001,7,0.75,");
  EXPECT_EQ(parse_csv_row(to_csv_row(r)), r);
  r.sigma = 0.5;
  r.wall_ms = 1234.5;
  r.loss_d = 1.0 / 3.0;
  EXPECT_EQ(parse_csv_row(to_csv_row(r)), r);
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_THROW(parse_csv_row("1,2,3"), IoError);
}

TEST(Csv, SinkWritesHeaderOnceAndAppends) {
  const fs::path dir = fs::temp_directory_path() / "dfgan_csv_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path p = dir / "m.csv";
  {
    CsvSink sink(p);
    MetricsRecord r = sample_record();
    sink.emit(r);
    r.iter = 200;
    sink.emit(r);
  }
  {
    CsvSink sink(p, true);
    MetricsRecord r = sample_record();
    r.iter = 300;
    sink.emit(r);
  }
  std::istringstream in(read_file(p));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], kMetricsCsvHeader);
  EXPECT_EQ(parse_csv_row(lines[1]).iter, 100u);
  EXPECT_EQ(parse_csv_row(lines[2]).iter, 200u);
  EXPECT_EQ(parse_csv_row(lines[3]).iter, 300u);
  fs::remove_all(dir);
}

TEST(Csv, UnwritablePathNamesIt) {
  try {
    CsvSink sink("/nonexistent_dir_dfgan/m.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir_dfgan/m.csv"), std::string::npos);
  }
}

TEST(Synthdata, RingCenters) {
  MixtureSpec s;
  const RealMatrix c = mixture_centers(s);
  EXPECT_NEAR(c(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(c(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(c(2, 0), 0.0, 1e-15);
  EXPECT_NEAR(c(2, 1), 2.0, 1e-15);
}

TEST(Synthdata, GridAndTwoDeltas) {
  MixtureSpec g;
  g.kind = MixtureKind::grid;
  g.k = 9;
  g.radius = 1.5;
  const RealMatrix c = mixture_centers(g);
  EXPECT_EQ(c.rows(), 9);
  EXPECT_NEAR(c.col(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(c.col(0).maxCoeff() - c.col(0).minCoeff(), 3.0, 1e-15);
  MixtureSpec d;
  d.kind = MixtureKind::two_deltas_1d;
  d.k = 2;
  d.radius = 1.0;
  const RealMatrix dc = mixture_centers(d);
  EXPECT_EQ(dc.cols(), 1);
  EXPECT_EQ(dc(0, 0), -1.0);
  EXPECT_EQ(dc(1, 0), 1.0);
  g.k = 8;
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Synthdata, ZeroStdSingleModeIsConstant) {
  MixtureSpec s;
  s.k = 1;
  s.mode_std = 0.0;
  s.n = 100;
  const Dataset d = generate(s);
  for (Eigen::Index i = 0; i < d.samples.rows(); ++i) EXPECT_EQ(d.samples.row(i), d.centers.row(0));
}

TEST(Synthdata, ExactDeltas) {
  MixtureSpec s;
  s.kind = MixtureKind::two_deltas_1d;
  s.k = 2;
  s.mode_std = 0.0;
  s.radius = 1.0;
  s.n = 200;
  const Dataset d = generate(s);
  for (Eigen::Index i = 0; i < d.samples.rows(); ++i) EXPECT_EQ(std::abs(d.samples(i, 0)), 1.0);
}

TEST(Synthdata, PerModeMeansAndCovariance) {
  MixtureSpec s;
  s.mode_std = 0.05;
  s.n = 8000;
  s.seed = 12;
  const Dataset d = generate(s);
  for (Eigen::Index j = 0; j < 8; ++j) {
    RealMatrix members(0, 2);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < d.samples.rows(); ++i) {
      if ((d.samples.row(i) - d.centers.row(j)).norm() < 0.5) idx.push_back(i);
    }
    ASSERT_GT(idx.size(), 800u);
    RowVector mean = RowVector::Zero(2);
    for (Eigen::Index i : idx) mean += d.samples.row(i);
    mean /= static_cast<double>(idx.size());
    EXPECT_LT((mean - d.centers.row(j)).cwiseAbs().maxCoeff(), 0.01);
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (Eigen::Index i : idx) {
      const Eigen::RowVector2d dv = d.samples.row(i) - mean;
      cov += dv.transpose() * dv;
    }
    cov /= static_cast<double>(idx.size());
    EXPECT_NEAR(cov(0, 0), 0.0025, 0.0005);
    EXPECT_NEAR(cov(1, 1), 0.0025, 0.0005);
    EXPECT_NEAR(cov(0, 1), 0.0, 0.0005);
  }
}

TEST(Synthdata, PureInSpec) {
  MixtureSpec s;
  s.n = 50;
  EXPECT_EQ(generate(s).samples, generate(s).samples);
  MixtureSpec t = s;
  t.seed = 1;
  EXPECT_NE(generate(s).samples, generate(t).samples);
}

TEST(Synthdata, LatentStatisticsAndValidation) {
  Rng rng(5);
  const RealMatrix z = sample_latent(2, 100000, rng);
  EXPECT_LT(std::abs(z.col(0).mean()), 0.02);
  EXPECT_LT(std::abs(z.col(1).mean()), 0.02);
  Rng a(6), b(6);
  EXPECT_EQ(sample_latent(3, 4, a), sample_latent(3, 4, b));
  EXPECT_THROW(sample_latent(0, 4, a), ConfigError);
  EXPECT_THROW(parse_mixture_kind("spiral"), ConfigError);
}

}  // namespace
}  // namespace dfgan
