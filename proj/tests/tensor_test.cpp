#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace leafnet;

namespace {

// Triple-loop oracle in long double.
TensorD naive_matmul(const TensorD& a, const TensorD& b) {
    TensorD c({a.dim(0), b.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
        for (std::size_t j = 0; j < b.dim(1); ++j) {
            long double s = 0;
            for (std::size_t k = 0; k < a.dim(1); ++k) {
                s += static_cast<long double>(a.at(i, k)) * b.at(k, j);
            }
            c.at(i, j) = static_cast<double>(s);
        }
    }
    return c;
}

}  // namespace

TEST(Shape, RejectsZeroDimsAndEmptyRank) {
    EXPECT_THROW(Shape({2, 0}), ShapeError);
    EXPECT_THROW(Shape(std::vector<std::size_t>{}), ShapeError);
    EXPECT_EQ(Shape({126, 126, 32}).to_string(), "(126, 126, 32)");
    EXPECT_EQ(Shape({3, 4, 5}).numel(), 60u);
}

TEST(Tensor, DataLengthMustMatchShape) {
    EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST(Tensor, RowMajorIndexing) {
    Tensor t(Shape{2, 3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<float>(i);
    }
    EXPECT_EQ(t.at(1, 2, 3), 23.0f);
    EXPECT_EQ(t.at(1, 0, 0), 12.0f);
}

TEST(Tensor, CheckFiniteNamesContext) {
    Tensor t(Shape{3}, 1.0f);
    t[1] = std::numeric_limits<float>::quiet_NaN();
    try {
        t.check_finite("probe");
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("probe"), std::string::npos);
    }
}

TEST(Matmul, MatchesNaiveOracleOnRandomShapes) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(9), n = 1 + rng.below(9);
        const TensorD a = leafnet::testing::random_tensor({m, k}, rng);
        const TensorD b = leafnet::testing::random_tensor({k, n}, rng);
        const TensorD c = matmul(a, b);
        const TensorD ref = naive_matmul(a, b);
        for (std::size_t i = 0; i < c.size(); ++i) {
            EXPECT_NEAR(c[i], ref[i], 1e-12);
        }
        const TensorD atb = matmul_at_b(transpose(a), b);
        const TensorD abt = matmul_a_bt(a, transpose(b));
        for (std::size_t i = 0; i < c.size(); ++i) {
            EXPECT_NEAR(atb[i], ref[i], 1e-12);
            EXPECT_NEAR(abt[i], ref[i], 1e-12);
        }
    }
}

TEST(Matmul, RejectsMismatchedInnerDims) {
    EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({4, 2})), ShapeError);
}

TEST(Matmul, OverflowIsReportedAsNumericError) {
    Tensor a({1, 2}, 3e38f);
    Tensor b({2, 1}, 3e38f);
    EXPECT_THROW(matmul(a, b), NumericError);
}

TEST(Softmax, DominantLogit) {
    const TensorD p = softmax(TensorD({3}, {10.0, 0.0, 0.0}));
    EXPECT_NEAR(p[0], 0.99990920, 1e-7);
    EXPECT_NEAR(p[1], 4.5395e-5, 1e-8);
    EXPECT_NEAR(p[2], 4.5395e-5, 1e-8);
}

TEST(Softmax, ShiftInvariantAndStableForHugeLogits) {
    const TensorD a = softmax(TensorD({3}, {1.0, 2.0, 3.0}));
    const TensorD b = softmax(TensorD({3}, {1001.0, 1002.0, 1003.0}));
    double sum = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(a[i], b[i], 1e-15);
        sum += b[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Softmax, NonFiniteInputThrows) {
    EXPECT_THROW(softmax(Tensor({2}, {1.0f, std::numeric_limits<float>::infinity()})), NumericError);
}

TEST(Softmax, UniformLogitsGiveUniformProbs) {
    const Tensor p = softmax(Tensor({38}, 0.25f));
    for (float v : p.data()) {
        EXPECT_NEAR(v, 1.0f / 38.0f, 1e-7);
    }
}

TEST(Relu, ForwardAndBackward) {
    const Tensor x({4}, {-1.0f, 0.0f, 2.0f, -3.0f});
    EXPECT_EQ(relu(x).values(), (std::vector<float>{0, 0, 2, 0}));
    const Tensor g = relu_backward(x, Tensor({4}, 5.0f));
    EXPECT_EQ(g.values(), (std::vector<float>{0, 0, 5, 0}));
}

TEST(Argmax, TiesGoToLowestIndex) {
    EXPECT_EQ(argmax(Tensor({4}, {1, 3, 3, 2})), 1u);
    EXPECT_EQ(argmax(Tensor({3}, 0.5f)), 0u);
    const Tensor m({2, 3}, {0, 5, 5, 9, 1, 9});
    EXPECT_EQ(argmax(m, 1), (std::vector<std::size_t>{1, 0}));
    EXPECT_EQ(argmax(m, 0), (std::vector<std::size_t>{1, 0, 1}));
}

TEST(ShapeOps, PadSliceReshapeTranspose) {
    Tensor img({2, 2, 1}, {1, 2, 3, 4});
    const Tensor p = pad2d(img, 1);
    EXPECT_EQ(p.shape(), Shape({4, 4, 1}));
    EXPECT_EQ(p.at(1, 1, 0), 1.0f);
    EXPECT_EQ(p.at(2, 2, 0), 4.0f);
    EXPECT_EQ(p.at(0, 0, 0), 0.0f);
    EXPECT_EQ(slice(p, 0, 1, 3), slice(slice(p, 0, 1, 3), 0, 0, 2));
    EXPECT_EQ(slice(slice(p, 0, 1, 3), 1, 1, 3), img);

    const Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(transpose(transpose(m)), m);
    EXPECT_EQ(transpose(m).at(2, 1), 6.0f);
    EXPECT_EQ(reshape(m, Shape{3, 2}).values(), m.values());
    EXPECT_THROW(reshape(m, Shape{4, 2}), ShapeError);
}

TEST(ShapeOps, ReduceSumAndBias) {
    const Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(reduce_sum(m, 0).values(), (std::vector<float>{5, 7, 9}));
    EXPECT_EQ(reduce_sum(m, 1).values(), (std::vector<float>{6, 15}));
    EXPECT_EQ(reduce_sum(Tensor({3}, 2.0f), 0).values(), (std::vector<float>{6}));
    Tensor y = m;
    add_bias(y, Tensor({3}, {10, 20, 30}));
    EXPECT_EQ(y.values(), (std::vector<float>{11, 22, 33, 14, 25, 36}));
}

TEST(Rng, DerivedStreamsAreDistinctAndReproducible) {
    EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
    EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
    EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        EXPECT_EQ(u, b.uniform());
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(a.below(7), 7u);
        b.below(7);
    }
}

TEST(Rng, NormalMoments) {
    Rng rng(5);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.01);
}
