#include <gtest/gtest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "sutrack/encoder.hpp"
#include "sutrack/ops.hpp"

using namespace sutrack;
using namespace sutrack::testing;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const Tensor& t) {
    Rows r(t.dim(0), std::vector<double>(t.dim(1)));
    for (std::size_t i = 0; i < t.dim(0); ++i)
        for (std::size_t j = 0; j < t.dim(1); ++j) r[i][j] = t.at({i, j});
    return r;
}

std::vector<double> hand_ln(const std::vector<double>& x, double eps) {
    double mean = 0, var = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    std::vector<double> y;
    for (double v : x) y.push_back((v - mean) / std::sqrt(var + eps));
    return y;
}

double hand_gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); }

Tensor identity(std::size_t d) {
    Tensor t = Tensor::zeros({d, d});
    for (std::size_t i = 0; i < d; ++i) t.mutable_values()[i * d + i] = 1.0;
    return t;
}

}  // namespace

TEST(Encoder, DepthZeroIsFinalLayerNorm) {
    ParameterSet ps;
    Rng rng(1);
    Encoder enc({0, 8, 2, 4.0, 1e-5}, ps, rng);
    Tensor x = random_leaf({5, 8}, rng, -3, 3).detach();
    const Tensor y = enc.encode(x);
    const Rows rows = to_rows(x);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto want = hand_ln(rows[i], 1e-5);
        for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(y.at({i, j}), want[j], 1e-12);
    }
}

TEST(Encoder, SwappingTokensSwapsOutputs) {
    ParameterSet ps;
    Rng rng(2);
    Encoder enc({2, 8, 2, 4.0, 1e-5}, ps, rng);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor tokens = random_leaf({7, 8}, rng).detach();
        Tensor pos = random_leaf({7, 8}, rng).detach();
        const std::size_t a = rng.below(7), b = rng.below(7);
        Rows t = to_rows(tokens), p = to_rows(pos);
        std::swap(t[a], t[b]);
        std::swap(p[a], p[b]);
        std::vector<double> flat_t, flat_p;
        for (std::size_t i = 0; i < 7; ++i) {
            flat_t.insert(flat_t.end(), t[i].begin(), t[i].end());
            flat_p.insert(flat_p.end(), p[i].begin(), p[i].end());
        }
        const Rows y = to_rows(enc.encode(add(tokens, pos)));
        Rows ys = to_rows(enc.encode(add(Tensor({7, 8}, flat_t), Tensor({7, 8}, flat_p))));
        std::swap(ys[a], ys[b]);
        for (std::size_t i = 0; i < 7; ++i)
            for (std::size_t j = 0; j < 8; ++j) ASSERT_NEAR(y[i][j], ys[i][j], 1e-12);
    }
}

TEST(Encoder, UniformAttentionBlockMatchesHandComputation) {
    const std::size_t d = 4, hidden = 3;
    const double eps = 1e-5;
    Rng rng(3);
    EncoderBlock blk;
    blk.norm1 = {Tensor::ones({d}), Tensor::zeros({d})};
    blk.norm2 = {Tensor::ones({d}), Tensor::zeros({d})};
    // q = k = 0 rows, v = identity
    Tensor qkv = Tensor::zeros({3 * d, d});
    for (std::size_t i = 0; i < d; ++i) qkv.mutable_values()[(2 * d + i) * d + i] = 1.0;
    blk.qkv_weight = qkv;
    blk.qkv_bias = Tensor::zeros({3 * d});
    blk.proj_weight = identity(d);
    blk.proj_bias = Tensor::zeros({d});
    blk.fc1_weight = random_leaf({hidden, d}, rng).detach();
    blk.fc1_bias = random_leaf({hidden}, rng).detach();
    blk.fc2_weight = random_leaf({d, hidden}, rng).detach();
    blk.fc2_bias = random_leaf({d}, rng).detach();

    const Tensor x = Tensor({3, d}, {0.5, -1.0, 2.0, 0.0, 1.5, 1.5, -0.5, 3.0, -2.0, 0.25, 0.75, 1.0});
    const Rows xr = to_rows(x);
    std::vector<double> mean_ln(d, 0.0);
    for (const auto& row : xr) {
        const auto l = hand_ln(row, eps);
        for (std::size_t j = 0; j < d; ++j) mean_ln[j] += l[j] / 3.0;
    }
    const Rows w1 = to_rows(blk.fc1_weight), w2 = to_rows(blk.fc2_weight);
    const auto b1 = blk.fc1_bias.values();
    const auto b2 = blk.fc2_bias.values();

    const Rows y = to_rows(encoder_block(x, blk, 1, eps));
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<double> h(d);
        for (std::size_t j = 0; j < d; ++j) h[j] = xr[i][j] + mean_ln[j];
        const auto hn = hand_ln(h, eps);
        std::vector<double> a(hidden);
        for (std::size_t k = 0; k < hidden; ++k) {
            double s = b1[k];
            for (std::size_t j = 0; j < d; ++j) s += w1[k][j] * hn[j];
            a[k] = hand_gelu(s);
        }
        for (std::size_t j = 0; j < d; ++j) {
            double m = b2[j];
            for (std::size_t k = 0; k < hidden; ++k) m += w2[j][k] * a[k];
            EXPECT_NEAR(y[i][j], h[j] + m, 1e-12);
        }
    }
}

TEST(Encoder, FiniteOnLargeInputs) {
    ParameterSet ps;
    Rng rng(4);
    Encoder enc({2, 16, 4, 4.0, 1e-5}, ps, rng);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor y = enc.encode(random_leaf({25, 16}, rng, -10, 10).detach());
        for (double v : y.values()) ASSERT_TRUE(std::isfinite(v));
    }
    const Tensor saturated = enc.encode(Tensor({3, 16}, 10.0));
    for (double v : saturated.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Encoder, ShapeAndConfigErrors) {
    ParameterSet ps;
    Rng rng(5);
    Encoder enc({1, 8, 2, 4.0, 1e-5}, ps, rng);
    EXPECT_THROW(enc.encode(Tensor({3, 6})), std::invalid_argument);
    EXPECT_THROW(enc.encode(Tensor({8})), std::invalid_argument);
    ParameterSet ps2;
    EXPECT_THROW(Encoder({1, 10, 4, 4.0, 1e-5}, ps2, rng), std::invalid_argument);
}

TEST(Encoder, ParametersAreInEncoderGroup) {
    ParameterSet ps;
    Rng rng(6);
    Encoder enc({2, 8, 2, 4.0, 1e-5}, ps, rng);
    for (const auto& p : ps.all()) EXPECT_EQ(p.group, ParamGroup::encoder) << p.name;
    EXPECT_EQ(ps.at("encoder.blocks.1.mlp.fc1.weight").value.shape(), (Shape{32, 8}));
}

TEST(Encoder, DepthTwoGradientCheck) {
    ParameterSet ps;
    Rng rng(7);
    Encoder enc({2, 8, 2, 4.0, 1e-5}, ps, rng);
    Tensor x = random_leaf({4, 8}, rng);
    const Tensor r = random_weights({4, 8}, rng);
    std::vector<Tensor> wrt{x};
    for (const auto& p : ps.all()) wrt.push_back(p.value);
    const auto res = gradcheck([&] { return project(enc.encode(x), r); }, wrt, rng, 8);
    EXPECT_TRUE(res.ok) << res.message;
}
