#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "support/gradient_suite.hpp"
#include "sutrack/ops.hpp"
#include "sutrack/parameters.hpp"

using namespace sutrack;
using namespace sutrack::testing;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "sutrack_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(Tensor, RejectsMismatchedData) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), std::invalid_argument);
    EXPECT_THROW(Tensor({2, 0}), std::invalid_argument);
}

TEST(Tensor, CopiesAliasCloneDoesNot) {
    Tensor a({2}, {1, 2});
    Tensor b = a;
    Tensor c = a.clone();
    a.mutable_values()[0] = 5;
    EXPECT_EQ(b[0], 5);
    EXPECT_EQ(c[0], 1);
}

TEST(Ops, SoftmaxOfZerosIsUniform) {
    Tensor y = softmax(Tensor::zeros({3}));
    for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(Ops, SoftmaxSumsToOneAndIsPositive) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = random_leaf({4, 7}, rng, -30, 30);
        Tensor y = softmax(x);
        for (std::size_t r = 0; r < 4; ++r) {
            double s = 0;
            for (std::size_t c = 0; c < 7; ++c) {
                EXPECT_GT(y.at({r, c}), 0.0);
                s += y.at({r, c});
            }
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    }
}

TEST(Ops, MatmulIdentity) {
    Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor x({3, 1}, {0.5, -2, 7});
    Tensor y = matmul(eye, x);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Ops, LayerNormOfConstantIsZero) {
    // (x − mean)/sqrt(var + eps) with x − mean = 0 exactly
    Tensor y = layer_norm(Tensor({5}, 3.25));
    for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Ops, LayerNormDirectFormula) {
    Tensor x({4}, {1, 2, 3, 4});
    Tensor y = layer_norm(x, 1e-5);
    const double var = 1.25;
    const double expected[] = {-1.5, -0.5, 0.5, 1.5};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y[i], expected[i] / std::sqrt(var + 1e-5), 1e-15);
}

TEST(Ops, ShapeErrorsNameBothShapes) {
    try {
        add(Tensor({2, 3}), Tensor({4}));
        FAIL() << "expected throw";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("(2, 3)"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(4,)"), std::string::npos) << msg;
    }
    EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), std::invalid_argument);
    EXPECT_THROW(log(Tensor({1}, -1.0)), std::domain_error);
}

TEST(Autodiff, SumGivesOnes) {
    Tensor x({4}, {1, 2, 3, 4});
    x.set_requires_grad(true);
    backward(sum(x));
    for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Autodiff, SquareGivesTwoX) {
    Tensor x({2}, {1, 2});
    x.set_requires_grad(true);
    backward(sum(mul(x, x)));
    EXPECT_EQ(x.grad()[0], 2.0);
    EXPECT_EQ(x.grad()[1], 4.0);
}

TEST(Autodiff, RepeatedBackwardAccumulatesUntilReset) {
    Tensor x({2}, {1, 2});
    x.set_requires_grad(true);
    backward(sum(mul(x, x)));
    backward(sum(mul(x, x)));
    EXPECT_EQ(x.grad()[1], 8.0);
    x.zero_grad();
    EXPECT_FALSE(x.has_grad());
}

TEST(Autodiff, NonScalarLossThrows) {
    Tensor x({2}, {1, 2});
    x.set_requires_grad(true);
    EXPECT_THROW(backward(mul(x, x)), std::invalid_argument);
}

TEST(Autodiff, NoGradGuardRecordsNothing) {
    Tensor x({2}, {1, 2});
    x.set_requires_grad(true);
    NoGradGuard guard;
    Tensor y = mul(x, x);
    EXPECT_FALSE(y.requires_grad());
}

TEST(Autodiff, GradientSuiteTwentySeeds) {
    for (const auto& r : run_gradient_suite(20)) {
        EXPECT_EQ(r.failures, 0u) << r.name << ": " << r.first_failure;
    }
}

TEST(AdamW, ZeroGradZeroDecayLeavesParameter) {
    ParameterSet ps;
    Tensor w = ps.add("w", Tensor({3}, {1, -2, 3}), ParamGroup::other);
    AdamW opt(ps, {0.1, 0.1, 0.9, 0.999, 1e-8, 0.0});
    backward(sum(mul(w, Tensor::zeros({3}))));
    opt.step(ps);
    EXPECT_EQ(w[0], 1.0);
    EXPECT_EQ(w[1], -2.0);
    EXPECT_EQ(w[2], 3.0);
}

TEST(AdamW, OneAndTwoStepsMatchHandRecurrence) {
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ParameterSet ps;
    Tensor w = ps.add("w", Tensor({1}, {0.5}), ParamGroup::other);
    AdamW opt(ps, {lr, lr, b1, b2, eps, 0.0});
    double m = 0, v = 0, ref = 0.5;
    for (int t = 1; t <= 2; ++t) {
        ps.zero_grad();
        backward(sum(w));  // grad = 1
        opt.step(ps);
        m = b1 * m + (1 - b1) * 1.0;
        v = b2 * v + (1 - b2) * 1.0;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        ref = ref - lr * mhat / (std::sqrt(vhat) + eps);
        EXPECT_DOUBLE_EQ(w[0], ref) << "step " << t;
    }
}

TEST(AdamW, DecoupledDecayAndGroupRates) {
    ParameterSet ps;
    Tensor e = ps.add("enc", Tensor({1}, {2.0}), ParamGroup::encoder);
    Tensor o = ps.add("other", Tensor({1}, {2.0}), ParamGroup::other);
    AdamW opt(ps, {0.01, 0.1, 0.9, 0.999, 1e-8, 0.5});
    backward(sum(e) + sum(o));
    opt.step(ps);
    EXPECT_DOUBLE_EQ(e[0], 2.0 * (1 - 0.01 * 0.5) - 0.01 * 1.0 / (1.0 + 1e-8));
    EXPECT_DOUBLE_EQ(o[0], 2.0 * (1 - 0.1 * 0.5) - 0.1 * 1.0 / (1.0 + 1e-8));
}

TEST(AdamW, MissingGradientNamesParameter) {
    ParameterSet ps;
    Tensor a = ps.add("used", Tensor({1}, {1.0}), ParamGroup::other);
    ps.add("unused.weight", Tensor({1}, {1.0}), ParamGroup::other);
    AdamW opt(ps, {});
    backward(sum(a));
    try {
        opt.step(ps);
        FAIL();
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find("unused.weight"), std::string::npos);
    }
    EXPECT_EQ(a[0], 1.0);
}

TEST(AdamW, DeterministicTrajectories) {
    auto run = [] {
        ParameterSet ps;
        Rng rng(9);
        Tensor w = ps.add_uniform("w", {4}, 1.0, rng, ParamGroup::other);
        AdamW opt(ps, {1e-2, 1e-2});
        for (int i = 0; i < 10; ++i) {
            ps.zero_grad();
            backward(sum(mul(w, w)));
            opt.step(ps);
        }
        return std::vector<double>(w.values().begin(), w.values().end());
    };
    EXPECT_EQ(run(), run());
}

TEST(Parameters, NamesAreUnique) {
    ParameterSet ps;
    ps.add("a", Tensor({1}), ParamGroup::other);
    EXPECT_THROW(ps.add("a", Tensor({1}), ParamGroup::other), std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsBitwise) {
    ParameterSet ps;
    Rng rng(4);
    ps.add_uniform("embed.W_p", {3, 12}, 1.0, rng, ParamGroup::other);
    ps.add_uniform("encoder.x", {5}, 1.0, rng, ParamGroup::encoder);
    const auto path = temp_path("roundtrip.sutk").string();
    save_checkpoint(path, ps);

    const auto loaded = read_checkpoint(path);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[0].name, "embed.W_p");
    EXPECT_EQ(loaded[0].value.shape(), (Shape{3, 12}));

    ParameterSet other;
    Rng rng2(99);
    other.add_uniform("embed.W_p", {3, 12}, 1.0, rng2, ParamGroup::other);
    other.add_uniform("encoder.x", {5}, 1.0, rng2, ParamGroup::encoder);
    load_checkpoint(path, other);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto a = ps.all()[i].value.values();
        const auto b = other.all()[i].value.values();
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST(Checkpoint, LayoutIsLittleEndianSUTK) {
    ParameterSet ps;
    ps.add("ab", Tensor({2}, {1.0, -2.0}), ParamGroup::other);
    const auto path = temp_path("layout.sutk");
    save_checkpoint(path.string(), ps);
    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // magic 4 + version 4 + count 4 + namelen 2 + name 2 + rank 1 + dim 4 + 2·8
    ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 2 + 2 + 1 + 4 + 16);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SUTK");
    EXPECT_EQ(bytes[4], 1);  // version
    EXPECT_EQ(bytes[8], 1);  // count
    EXPECT_EQ(bytes[12], 2);
    EXPECT_EQ(bytes[14], 'a');
    EXPECT_EQ(bytes[16], 1);  // rank
    EXPECT_EQ(bytes[17], 2);  // dim
    double v;
    std::memcpy(&v, bytes.data() + 21, 8);
    EXPECT_EQ(v, 1.0);
}

TEST(Checkpoint, CorruptFilesAreRejected) {
    const auto path = temp_path("bad.sutk");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE";
    }
    EXPECT_THROW(read_checkpoint(path.string()), std::runtime_error);
    ParameterSet ps;
    ps.add("a", Tensor({2}, {1.0, 2.0}), ParamGroup::other);
    save_checkpoint(path.string(), ps);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
    EXPECT_THROW(read_checkpoint(path.string()), std::runtime_error);

    ParameterSet mismatch;
    mismatch.add("a", Tensor({3}), ParamGroup::other);
    save_checkpoint(path.string(), ps);
    EXPECT_THROW(load_checkpoint(path.string(), mismatch), std::runtime_error);
    EXPECT_THROW(read_checkpoint(temp_path("missing.sutk").string()), std::runtime_error);
}
