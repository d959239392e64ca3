#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>

#include "stegcnn/checkpoint.hpp"
#include "stegcnn/gradcheck.hpp"
#include "stegcnn/network.hpp"
#include "stegcnn/rng.hpp"

using namespace stegcnn;

namespace {

ImageGrid random_image(int n, std::uint64_t seed) {
    Xoshiro256 rng{seed};
    ImageGrid g(n, n);
    for (double& v : g.values()) v = rng.normal();
    return g;
}

ParameterStore noisy_network(const NetworkSpec& spec, std::uint64_t seed) {
    ParameterStore p = build_network(spec, seed);
    Xoshiro256 rng{seed + 100};
    for (double& v : p.values()) v += 0.1 * rng.normal();
    return p;
}

}  // namespace

TEST(Network, PaperDimensionChainAndCounts) {
    const NetworkSpec spec = paper_network_spec();
    const NetworkShape shape = network_shape(spec);
    ASSERT_EQ(shape.layers.size(), 2u);
    EXPECT_EQ(shape.layers[0].output_side, 510);
    EXPECT_EQ(shape.layers[1].output_side, 2);
    EXPECT_EQ(shape.feature_count, 256);
    EXPECT_EQ(layer_parameter_count(spec, 0), 10u);
    EXPECT_EQ(layer_parameter_count(spec, 1), 16'581'248u);
    EXPECT_EQ(output_parameter_count(spec), 514u);
    EXPECT_EQ(parameter_count(spec), 10u + 16'581'248u + 514u);
}

TEST(Network, DeskCounts) {
    const NetworkSpec spec = desk_network_spec(32, 16);
    EXPECT_EQ(spec.conv_layers[1].kernel_size, 29);
    const NetworkShape shape = network_shape(spec);
    EXPECT_EQ(shape.layers[1].output_side, 2);
    EXPECT_EQ(shape.feature_count, 64);
    EXPECT_EQ(output_parameter_count(spec), 130u);
    EXPECT_EQ(parameter_count(spec), build_network(spec, 1).size());
}

TEST(Network, InvalidChainNamesFailingLayer) {
    NetworkSpec spec = desk_network_spec(16, 2);
    spec.conv_layers[1].kernel_size = 20;
    try {
        network_shape(spec);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
    }
    EXPECT_THROW(build_network(spec, 1), std::invalid_argument);
}

TEST(Network, InitIsDeterministicAndScaled) {
    const NetworkSpec spec = desk_network_spec(16, 4);
    const ParameterStore a = build_network(spec, 5), b = build_network(spec, 5), c = build_network(spec, 6);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    for (double w : a.kernel_weights(0, 0)) EXPECT_LE(std::abs(w), 1.0 / 3.0);
    for (double w : a.kernel_weights(1, 2)) EXPECT_LE(std::abs(w), 1.0 / 13.0);
    for (double w : a.output_weights(1)) EXPECT_LE(std::abs(w), 1.0 / 4.0);
    for (double bias : a.layer_biases(1)) EXPECT_EQ(bias, 0.0);
    for (double bias : a.output_biases()) EXPECT_EQ(bias, 0.0);
}

TEST(Network, ZeroParametersGiveHalfHalf) {
    const NetworkSpec spec = desk_network_spec(8, 3);
    const ParameterStore zero(spec);
    const ClassLogProbs p = forward(zero, spec, random_image(8, 1));
    EXPECT_DOUBLE_EQ(p[0], std::log(0.5));
    EXPECT_DOUBLE_EQ(p[1], std::log(0.5));
    EXPECT_EQ(p.predicted(), 0);  // tie -> cover
}

TEST(Network, RejectsWrongImageSize) {
    const NetworkSpec spec = desk_network_spec(8, 3);
    EXPECT_THROW(forward(ParameterStore(spec), spec, ImageGrid(9, 9)), std::invalid_argument);
}

TEST(Network, MatchesStraightLineOracle) {
    // N=8: conv 3x3 -> 6x6 tanh, then K kernels 5x5 -> 2x2 tanh, then affine + log-softmax.
    const int K = 3;
    const NetworkSpec spec = desk_network_spec(8, K);
    const ParameterStore p = noisy_network(spec, 12);
    const ImageGrid img = random_image(8, 13);
    const double* v = p.values().data();

    double a1[6][6];
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            double s = v[9];
            for (int u = 0; u < 3; ++u)
                for (int w = 0; w < 3; ++w) s += v[u * 3 + w] * img(i + u, j + w);
            a1[i][j] = std::tanh(s);
        }
    const double* w2 = v + 10;
    const double* b2 = w2 + K * 25;
    const double* wo = b2 + K;
    const double* bo = wo + 2 * K * 4;
    double feats[K * 4];
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double s = b2[k];
                for (int u = 0; u < 5; ++u)
                    for (int w = 0; w < 5; ++w) s += w2[k * 25 + u * 5 + w] * a1[i + u][j + w];
                feats[k * 4 + i * 2 + j] = std::tanh(s);
            }
    double z[2];
    for (int c = 0; c < 2; ++c) {
        z[c] = bo[c];
        for (int f = 0; f < K * 4; ++f) z[c] += wo[c * K * 4 + f] * feats[f];
    }
    const double m = std::max(z[0], z[1]);
    const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));

    const ClassLogProbs got = forward(p, spec, img);
    EXPECT_NEAR(got[0], z[0] - lse, 1e-10);
    EXPECT_NEAR(got[1], z[1] - lse, 1e-10);
    const auto f = extract_features(p, spec, img);
    ASSERT_EQ(f.size(), static_cast<std::size_t>(K * 4));
    for (int i = 0; i < K * 4; ++i) EXPECT_NEAR(f[static_cast<std::size_t>(i)], feats[i], 1e-12);
}

TEST(Network, LogSoftmaxNormalizes) {
    Xoshiro256 rng{3};
    for (int i = 0; i < 100; ++i) {
        const ClassLogProbs p = log_softmax({rng.uniform(-50, 50), rng.uniform(-50, 50)});
        EXPECT_NEAR(std::exp(p[0]) + std::exp(p[1]), 1.0, 1e-9);
    }
    const ClassLogProbs big = log_softmax({1000.0, 0.0});
    EXPECT_TRUE(std::isfinite(big[1]));
}

TEST(Network, LossDefinition) {
    const ClassLogProbs uniform = log_softmax({0.0, 0.0});
    EXPECT_NEAR(loss(uniform, 0), std::log(2.0), 1e-15);
    EXPECT_NEAR(loss(uniform, 1), 0.6931, 1e-4);
    ClassLogProbs certain;
    certain.logp = {-std::numeric_limits<double>::infinity(), 0.0};
    EXPECT_EQ(loss(certain, 1), 0.0);
    const ClassLogProbs r = log_softmax({0.3, -1.2});
    EXPECT_EQ(loss(r, 0), -r[0]);
    EXPECT_THROW(loss(r, 2), std::invalid_argument);
}

TEST(Network, ForwardIsBitReproducible) {
    const NetworkSpec spec = desk_network_spec(12, 4);
    const ParameterStore p = noisy_network(spec, 1);
    const ImageGrid img = random_image(12, 2);
    const ClassLogProbs a = forward(p, spec, img), b = forward(p, spec, img);
    EXPECT_EQ(a.logp, b.logp);
}

TEST(Backward, SymmetricLogitGradient) {
    const NetworkSpec spec = desk_network_spec(8, 2);
    const ParameterStore zero(spec);
    const ParameterStore g = backward(zero, spec, random_image(8, 4), 1);
    EXPECT_DOUBLE_EQ(g.output_biases()[0], 0.5);
    EXPECT_DOUBLE_EQ(g.output_biases()[1], -0.5);
}

TEST(Backward, ZeroImageGivesZeroFirstLayerWeightGrads) {
    const NetworkSpec spec = desk_network_spec(8, 3);
    const ParameterStore p = noisy_network(spec, 8);
    const ParameterStore g = backward(p, spec, ImageGrid(8, 8), 0);
    for (double w : g.kernel_weights(0, 0)) EXPECT_EQ(w, 0.0);
    EXPECT_NE(g.layer_biases(0)[0], 0.0);
}

TEST(Backward, AccumulateScalesAndAdds) {
    const NetworkSpec spec = desk_network_spec(8, 2);
    const ParameterStore p = noisy_network(spec, 2);
    const ImageGrid img = random_image(8, 3);
    const ParameterStore g = backward(p, spec, img, 1);
    ParameterStore acc(spec);
    accumulate_gradient(p, spec, img, 1, acc, 0.25);
    accumulate_gradient(p, spec, img, 1, acc, 0.75);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(acc.values()[i], g.values()[i], 1e-15);
}

class GradCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradCheck, EveryParameterClassPasses) {
    const GradCheckReport r = gradient_check(GetParam(), 17);
    ASSERT_EQ(r.classes.size(), 6u);
    for (const auto& c : r.classes) EXPECT_TRUE(c.passed) << c.name << " worst " << c.worst_rel_error;
    EXPECT_TRUE(r.passed());
}

INSTANTIATE_TEST_SUITE_P(Sizes, GradCheck, ::testing::Values(6, 8, 12));

TEST(GradCheckHarness, InjectedFaultIsAttributedToItsClass) {
    GradCheckOptions opts;
    opts.fault_class = "output.bias";
    const GradCheckReport r = gradient_check(8, 1, opts);
    EXPECT_FALSE(r.passed());
    for (const auto& c : r.classes) EXPECT_EQ(c.passed, c.name != "output.bias") << c.name;
    opts.fault_class = "nonsense";
    EXPECT_THROW(gradient_check(8, 1, opts), std::invalid_argument);
}

TEST(GradCheckHarness, ClassNamesCoverLayout) {
    const auto names = parameter_classes(desk_network_spec(8, 2));
    ASSERT_EQ(names.size(), parameter_count(desk_network_spec(8, 2)));
    EXPECT_EQ(names.front(), "layer1.weights");
    EXPECT_EQ(names[9], "layer1.bias");
    EXPECT_EQ(names.back(), "output.bias");
}

TEST(Pooling, NoneIsPassThrough) {
    NetworkSpec spec = desk_network_spec(8, 2);
    const ParameterStore p = noisy_network(spec, 4);
    NetworkSpec pooled = spec;
    pooled.conv_layers[0].pool = PoolSpec::none();
    const ImageGrid img = random_image(8, 5);
    EXPECT_EQ(forward(p, spec, img).logp, forward(p, pooled, img).logp);
}

TEST(Pooling, PooledNetworkGradientsCheck) {
    // 12 -> conv3 -> 10 -> max pool 2 -> 5 -> conv4 (2 kernels) -> 2 -> mean pool 2 -> 1
    NetworkSpec spec;
    spec.input_size = 12;
    spec.conv_layers = {{1, 3, {1, 0}, ActivationKind::relu(), PoolSpec::max(2, 2)},
                        {2, 4, {1, 0}, ActivationKind::gaussian(1.0), PoolSpec::mean(2, 2)}};
    const ParameterStore p = noisy_network(spec, 3);
    const ImageGrid img = random_image(12, 9);
    const ParameterStore g = backward(p, spec, img, 0);
    ParameterStore q = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double h = 1e-5, w = q.values()[i];
        q.values()[i] = w + h;
        const double up = loss(forward(q, spec, img), 0);
        q.values()[i] = w - h;
        const double dn = loss(forward(q, spec, img), 0);
        q.values()[i] = w;
        EXPECT_LT(relative_error(g.values()[i], (up - dn) / (2 * h)), 1e-4) << "param " << i;
    }
}

TEST(Checkpoint, RoundTripIsValueExact) {
    NetworkSpec spec = desk_network_spec(16, 3);
    spec.conv_layers[0].act = ActivationKind::gaussian(0.7);
    Checkpoint c{noisy_network(spec, 77), 42, {0.123456789012345678, 0.0987654321}, {{"config_digest", "abc"}, {"note", "two words"}}};
    c.params.values()[0] = -0.0;
    c.params.values()[1] = 1e-310;  // subnormal
    const auto path = std::filesystem::temp_directory_path() / "stegcnn_test_roundtrip.ckpt";
    save_checkpoint(path, c);
    const Checkpoint back = load_checkpoint(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.spec(), spec);
    EXPECT_EQ(back.epoch, 42);
    EXPECT_EQ(back.stats, c.stats);
    EXPECT_EQ(back.metadata, c.metadata);
    ASSERT_EQ(back.params.size(), c.params.size());
    for (std::size_t i = 0; i < c.params.size(); ++i)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(back.params.values()[i]), std::bit_cast<std::uint64_t>(c.params.values()[i]));
    EXPECT_EQ(back.meta("note"), "two words");
    EXPECT_FALSE(back.meta("missing"));
}

TEST(Checkpoint, RejectsCorruption) {
    const NetworkSpec spec = desk_network_spec(8, 2);
    const Checkpoint c{build_network(spec, 1), 1, {}, {}};
    const std::string bytes = encode_checkpoint(c);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
    EXPECT_THROW(decode_checkpoint("not a checkpoint\n"), std::runtime_error);
    std::string wrong = bytes;
    wrong.replace(wrong.find("input_size 8"), 12, "input_size 9");
    EXPECT_THROW(decode_checkpoint(wrong), std::exception);
    EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.ckpt"), std::runtime_error);
}

TEST(Network, PaperCountingIsFast) {
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_EQ(parameter_count(paper_network_spec()), 16'581'772u);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}
