#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dfgan/batchnorm.h"
#include "dfgan/errors.h"
#include "dfgan/gradcheck.h"
#include "dfgan/mlp.h"
#include "dfgan/param_store.h"
#include "dfgan/rng.h"
#include "oracles.h"

namespace dfgan {
namespace {

RealMatrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  RealMatrix m(rows.size(), rows.begin()->size());
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

ParamStore single_layer(double w, double b) {
  ParamStore p;
  p.add("0.W", mat({{w}}));
  p.add("0.b", mat({{b}}));
  return p;
}

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
  EXPECT_EQ(a, b);
}

TEST(Rng, SerializeRoundTripContinuesIdentically) {
  Rng a(11);
  a.normal();  // leaves a spare Box-Muller value pending
  Rng b;
  b.deserialize(a.serialize());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, MixSeedSeparatesStreams) {
  EXPECT_NE(mix_seed(1, 1), mix_seed(1, 2));
  EXPECT_NE(mix_seed(1, 1), mix_seed(2, 1));
  EXPECT_EQ(mix_seed(5, 3), mix_seed(5, 3));
}

TEST(ParamStore, GradSlotsMatchShapes) {
  ParamStore p;
  p.add("a", RealMatrix::Ones(2, 3));
  p.add("b", RealMatrix::Ones(1, 4), false);
  EXPECT_EQ(p.grad("a").rows(), 2);
  EXPECT_EQ(p.grad("a").cols(), 3);
  EXPECT_TRUE(p.grad("a").isZero());
  EXPECT_EQ(p.trainable_count(), 6u);
  EXPECT_TRUE(p.contains("b"));
  EXPECT_FALSE(p.contains("c"));
}

TEST(ParamStore, MutableValueBumpsVersion) {
  ParamStore p;
  p.add("a", RealMatrix::Ones(1, 1));
  const auto v = p.version();
  p.mutable_value("a")(0, 0) = 2.0;
  EXPECT_GT(p.version(), v);
}

TEST(MlpForward, ZeroWeightsGiveZeroOutput) {
  const std::vector<LayerSpec> specs = {{3, 4, Activation::linear, false}};
  ParamStore p;
  p.add("0.W", RealMatrix::Zero(3, 4));
  p.add("0.b", RealMatrix::Zero(1, 4));
  Rng rng(1);
  const auto f = mlp_forward(p, rng.normal_matrix(5, 3), specs);
  EXPECT_TRUE(f.output.isZero(0.0));
}

TEST(MlpForward, AffineArithmetic) {
  ParamStore p = single_layer(2.0, 1.0);
  const std::vector<LayerSpec> specs = {{1, 1, Activation::linear, false}};
  EXPECT_EQ(mlp_forward(p, mat({{3.0}}), specs).output(0, 0), 7.0);
}

TEST(MlpForward, ReluKillsNegative) {
  ParamStore p;
  p.add("0.W", mat({{1.0}}));
  p.add("0.b", mat({{0.0}}));
  p.add("1.W", mat({{-1.0}}));
  p.add("1.b", mat({{0.0}}));
  const std::vector<LayerSpec> specs = {{1, 1, Activation::relu, false},
                                        {1, 1, Activation::linear, false}};
  EXPECT_EQ(mlp_forward(p, mat({{-5.0}}), specs).output(0, 0), 0.0);
}

TEST(MlpForward, ShapeMismatchIsConfigError) {
  ParamStore p = single_layer(1.0, 0.0);
  const std::vector<LayerSpec> specs = {{1, 1, Activation::linear, false}};
  EXPECT_THROW(mlp_forward(p, RealMatrix::Zero(2, 3), specs), ConfigError);
}

TEST(MlpForward, NonFiniteActivationNamesLayer) {
  ParamStore p = single_layer(1.0, 0.0);
  const std::vector<LayerSpec> specs = {{1, 1, Activation::linear, false}};
  try {
    mlp_forward(p, mat({{std::numeric_limits<double>::infinity()}}), specs);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
  }
}

TEST(LayerSpecs, ScaledTanhOnlyFinal) {
  const std::vector<LayerSpec> bad = {{2, 3, Activation::scaled_tanh, false},
                                      {3, 1, Activation::linear, false}};
  EXPECT_THROW(validate_layer_specs(bad), ConfigError);
  const std::vector<LayerSpec> good = {{2, 3, Activation::relu, false},
                                       {3, 1, Activation::scaled_tanh, false}};
  EXPECT_NO_THROW(validate_layer_specs(good));
  const std::vector<LayerSpec> unchained = {{2, 3, Activation::relu, false},
                                            {4, 1, Activation::linear, false}};
  EXPECT_THROW(validate_layer_specs(unchained), ConfigError);
}

TEST(MlpBackward, LinearInputGradient) {
  ParamStore p = single_layer(3.0, 0.0);
  const std::vector<LayerSpec> specs = {{1, 1, Activation::linear, false}};
  const auto f = mlp_forward(p, mat({{0.7}}), specs);
  EXPECT_EQ(mlp_backward(f.tape, mat({{1.0}}))(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(p.grad("0.W")(0, 0), 0.7);
  EXPECT_DOUBLE_EQ(p.grad("0.b")(0, 0), 1.0);
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(5);
  const std::vector<LayerSpec> specs = {{2, 4, Activation::relu, true},
                                        {4, 1, Activation::sigmoid, false}};
  ParamStore p;
  init_mlp_params(p, specs, rng);
  const auto f = mlp_forward(p, rng.normal_matrix(6, 2), specs);
  EXPECT_TRUE(mlp_backward(f.tape, RealMatrix::Zero(6, 1)).isZero(0.0));
  for (const auto& e : p.entries()) EXPECT_TRUE(e.grad.isZero(0.0)) << e.name;
}

TEST(MlpBackward, SigmoidAtZero) {
  ParamStore p = single_layer(1.0, 0.0);
  const std::vector<LayerSpec> specs = {{1, 1, Activation::sigmoid, false}};
  const auto f = mlp_forward(p, mat({{0.0}}), specs);
  const double expected = oracle::sigmoid(0.0) * (1.0 - oracle::sigmoid(0.0));
  EXPECT_DOUBLE_EQ(mlp_backward(f.tape, mat({{1.0}}))(0, 0), expected);
  EXPECT_DOUBLE_EQ(expected, 0.25);
}

TEST(MlpBackward, StaleTapeRejected) {
  ParamStore p = single_layer(1.0, 0.0);
  const std::vector<LayerSpec> specs = {{1, 1, Activation::linear, false}};
  const auto f = mlp_forward(p, mat({{1.0}}), specs);
  p.mutable_value("0.W")(0, 0) = 2.0;
  EXPECT_THROW(mlp_backward(f.tape, mat({{1.0}})), StaleTapeError);
}

TEST(Activations, DerivativesMatchFiniteDifferences) {
  for (Activation a : {Activation::relu, Activation::leaky_relu, Activation::tanh,
                       Activation::scaled_tanh, Activation::sigmoid, Activation::linear}) {
    for (double x : {-1.3, -0.4, 0.35, 1.7}) {
      const auto f = [a](double v) { return apply_activation(a, RealMatrix::Constant(1, 1, v))(0, 0); };
      const RealMatrix out = apply_activation(a, RealMatrix::Constant(1, 1, x));
      const double analytic = activation_derivative(a, out)(0, 0);
      EXPECT_NEAR(analytic, oracle::central_difference(f, x, 1e-6), 1e-7) << to_string(a) << " " << x;
    }
  }
}

TEST(Activations, ParseRoundTrip) {
  for (Activation a : {Activation::relu, Activation::leaky_relu, Activation::tanh,
                       Activation::scaled_tanh, Activation::sigmoid, Activation::linear}) {
    EXPECT_EQ(parse_activation(to_string(a)), a);
  }
  EXPECT_THROW(parse_activation("swish"), ConfigError);
}

TEST(BatchNorm, TwoValueColumn) {
  const auto f = batchnorm_forward(mat({{1.0}, {3.0}}), RowVector::Ones(1), RowVector::Zero(1), 1e-8);
  EXPECT_NEAR(f.output(0, 0), -1.0, 1e-8);
  EXPECT_NEAR(f.output(1, 0), 1.0, 1e-8);
  EXPECT_DOUBLE_EQ(f.batch_mean(0), 2.0);
  EXPECT_DOUBLE_EQ(f.batch_var(0), 1.0);
}

TEST(BatchNorm, ConstantColumnMapsToZero) {
  const auto f = batchnorm_forward(mat({{5.0}, {5.0}, {5.0}}), RowVector::Ones(1), RowVector::Zero(1));
  EXPECT_TRUE(f.output.isZero(0.0));
}

TEST(BatchNorm, AffineAfterNormalization) {
  RowVector g(1), b(1);
  g << 2.0;
  b << 1.0;
  const auto f = batchnorm_forward(mat({{-1.0}, {1.0}}), g, b, 1e-12);
  EXPECT_NEAR(f.output(0, 0), -1.0, 1e-10);
  EXPECT_NEAR(f.output(1, 0), 3.0, 1e-10);
}

TEST(BatchNorm, SingleRowIsDegenerate) {
  EXPECT_THROW(batchnorm_forward(mat({{1.0, 2.0}}), RowVector::Ones(2), RowVector::Zero(2)),
               DegenerateBatchError);
}

TEST(BatchNorm, MomentsProperty) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const RealMatrix x = 3.0 * rng.normal_matrix(2 + rng.index(30), 4).array() + 1.5;
    const auto f = batchnorm_forward(x, RowVector::Ones(4), RowVector::Zero(4));
    for (Eigen::Index c = 0; c < 4; ++c) {
      const double mean = f.output.col(c).mean();
      const double var = (f.output.col(c).array() - mean).square().mean();
      const double s2 = f.batch_var(c);
      EXPECT_LT(std::abs(mean), 1e-10);
      EXPECT_LT(std::abs(var - s2 / (s2 + kBatchNormEps)), 1e-10);
    }
  }
}

TEST(BatchNorm, BackwardZeroUpstream) {
  Rng rng(2);
  const auto f = batchnorm_forward(rng.normal_matrix(5, 3), RowVector::Ones(3), RowVector::Zero(3));
  const auto g = batchnorm_backward(f.cache, RealMatrix::Zero(5, 3));
  EXPECT_TRUE(g.input.isZero(0.0));
  EXPECT_TRUE(g.gamma.isZero(0.0));
  EXPECT_TRUE(g.beta.isZero(0.0));
}

TEST(BatchNorm, ConstantUpstreamInputGradSumsToZero) {
  Rng rng(4);
  RealMatrix x = rng.normal_matrix(6, 2);
  x.rowwise() -= x.colwise().mean();
  const auto f = batchnorm_forward(x, RowVector::Ones(2), RowVector::Zero(2));
  const auto g = batchnorm_backward(f.cache, RealMatrix::Constant(6, 2, 0.8));
  for (Eigen::Index c = 0; c < 2; ++c) EXPECT_NEAR(g.input.col(c).sum(), 0.0, 1e-12);
}

TEST(BatchNorm, BackwardMatchesFiniteDifferences) {
  Rng rng(23);
  const RealMatrix w = rng.normal_matrix(4, 2);
  ParamStore p;
  p.add("x", rng.normal_matrix(4, 2));
  p.add("gamma", RealMatrix(1.0 + 0.3 * rng.normal_matrix(1, 2).array()));
  p.add("beta", rng.normal_matrix(1, 2));
  const ScalarObjective fn = [&w](ParamStore& s, bool acc) {
    const auto f = batchnorm_forward(s.value("x"), s.value("gamma"), s.value("beta"));
    if (acc) {
      const auto g = batchnorm_backward(f.cache, w);
      s.grad("x") += g.input;
      s.grad("gamma") += g.gamma;
      s.grad("beta") += g.beta;
    }
    return (f.output.array() * w.array()).sum();
  };
  EXPECT_LT(gradient_check(fn, p).max_rel_error, 1e-4);
}

TEST(BatchNorm, InferenceUsesRunningStatistics) {
  RowVector mean(1), var(1);
  mean << 2.0;
  var << 4.0;
  const RealMatrix y =
      batchnorm_inference(mat({{6.0}}), RowVector::Ones(1), RowVector::Zero(1), mean, var, 0.0);
  EXPECT_DOUBLE_EQ(y(0, 0), 2.0);
}

TEST(Mlp, EvalModeIsPerExample) {
  Rng rng(31);
  const std::vector<LayerSpec> specs = {{2, 6, Activation::relu, true},
                                        {6, 6, Activation::leaky_relu, true},
                                        {6, 1, Activation::sigmoid, false}};
  ParamStore p;
  init_mlp_params(p, specs, rng);
  for (int i = 0; i < 5; ++i) mlp_forward(p, rng.normal_matrix(8, 2), specs);  // move running stats
  const RealMatrix x = rng.normal_matrix(7, 2);
  const RealMatrix batched = mlp_forward(p, x, specs, {Mode::eval, false}).output;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const RealMatrix one = mlp_forward(p, x.row(r), specs, {Mode::eval, false}).output;
    EXPECT_NEAR(one(0, 0), batched(r, 0), 1e-12);
  }
}

TEST(Mlp, RunningStatsUpdateOnlyWhenAsked) {
  Rng rng(37);
  const std::vector<LayerSpec> specs = {{2, 3, Activation::relu, true}};
  ParamStore p;
  init_mlp_params(p, specs, rng);
  const RealMatrix before = p.value("0.running_mean");
  mlp_forward(p, rng.normal_matrix(4, 2), specs, {Mode::train, false});
  EXPECT_EQ(p.value("0.running_mean"), before);
  mlp_forward(p, rng.normal_matrix(4, 2), specs, {Mode::train, true});
  EXPECT_NE(p.value("0.running_mean"), before);
}

TEST(Mlp, LayerGradientsOnRandomParameterizations) {
  Rng rng(41);
  for (Activation a : {Activation::relu, Activation::leaky_relu, Activation::tanh,
                       Activation::scaled_tanh, Activation::sigmoid, Activation::linear}) {
    for (bool bn : {false, true}) {
      for (int trial = 0; trial < 50; ++trial) {
        const std::vector<LayerSpec> specs = {{3, 4, a, bn}};
        ParamStore p;
        init_mlp_params(p, specs, rng);
        if (bn) {
          p.mutable_value("0.gamma") = RealMatrix(1.0 + 0.3 * rng.normal_matrix(1, 4).array());
          p.mutable_value("0.beta") = 0.2 * rng.normal_matrix(1, 4);
        } else {
          p.mutable_value("0.b") = 0.2 * rng.normal_matrix(1, 4);
        }
        p.add("input", rng.normal_matrix(5, 3));
        const RealMatrix w = rng.normal_matrix(5, 4);
        const ScalarObjective fn = [&](ParamStore& s, bool acc) {
          auto f = mlp_forward(s, s.value("input"), specs, {Mode::train, false});
          if (acc) s.grad("input") += mlp_backward(f.tape, w);
          return (f.output.array() * w.array()).sum();
        };
        const auto r = gradient_check(fn, p);
        EXPECT_LT(r.max_rel_error, 1e-4) << to_string(a) << " bn=" << bn << " trial " << trial
                                         << " worst " << r.worst_param;
      }
    }
  }
}

TEST(Mlp, ChainedInputGradientMatchesFiniteDifferences) {
  Rng rng(43);
  const std::vector<LayerSpec> g_specs = {{2, 5, Activation::tanh, false},
                                          {5, 2, Activation::linear, false}};
  const std::vector<LayerSpec> d_specs = {{2, 5, Activation::tanh, false},
                                          {5, 1, Activation::sigmoid, false}};
  ParamStore g, d;
  init_mlp_params(g, g_specs, rng);
  init_mlp_params(d, d_specs, rng);
  const RealMatrix z = rng.normal_matrix(4, 2);
  const ScalarObjective fn = [&](ParamStore& s, bool acc) {
    auto gf = mlp_forward(s, z, g_specs);
    auto df = mlp_forward(d, gf.output, d_specs);
    if (acc) {
      mlp_backward(gf.tape, mlp_backward(df.tape, RealMatrix::Ones(4, 1)));
      d.zero_grad();
    }
    return df.output.sum();
  };
  EXPECT_LT(gradient_check(fn, g).max_rel_error, 1e-4);
}

TEST(GradientCheck, LinearFunction) {
  ParamStore p;
  p.add("theta", RealMatrix::Constant(1, 1, 0.4));
  const ScalarObjective fn = [](ParamStore& s, bool acc) {
    if (acc) s.grad("theta")(0, 0) += 3.0;
    return 3.0 * s.value("theta")(0, 0);
  };
  EXPECT_LT(gradient_check(fn, p).max_rel_error, 1e-8);
}

TEST(GradientCheck, Square) {
  ParamStore p;
  p.add("theta", RealMatrix::Constant(1, 1, 1.5));
  const ScalarObjective fn = [](ParamStore& s, bool acc) {
    const double t = s.value("theta")(0, 0);
    if (acc) s.grad("theta")(0, 0) += 2.0 * t;
    return t * t;
  };
  const auto r = gradient_check(fn, p, 1e-5);
  EXPECT_DOUBLE_EQ(r.worst_analytic, 3.0);
  EXPECT_NEAR(r.worst_numeric, 3.0, 1e-8);
  EXPECT_LT(r.max_rel_error, 1e-8);
}

TEST(GradientCheck, CorruptedGradientReported) {
  ParamStore p;
  p.add("theta", RealMatrix::Constant(1, 1, 1.5));
  const ScalarObjective fn = [](ParamStore& s, bool acc) {
    const double t = s.value("theta")(0, 0);
    if (acc) s.grad("theta")(0, 0) += 2.0 * 2.0 * t;
    return t * t;
  };
  EXPECT_NEAR(gradient_check(fn, p).max_rel_error, 0.5, 1e-6);
}

TEST(GradientCheck, NondeterministicFunctionRejected) {
  ParamStore p;
  p.add("theta", RealMatrix::Constant(1, 1, 1.0));
  int calls = 0;
  const ScalarObjective fn = [&calls](ParamStore& s, bool acc) {
    if (acc) s.grad("theta")(0, 0) += 1.0;
    return s.value("theta")(0, 0) + 1e-3 * ++calls;
  };
  EXPECT_THROW(gradient_check(fn, p), NumericError);
}

}  // namespace
}  // namespace dfgan
