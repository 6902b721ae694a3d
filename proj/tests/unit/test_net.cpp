#include <chartwise/net.hpp>
#include <chartwise/oracle.hpp>
#include <chartwise/random.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace chartwise;

namespace {

Eigen::VectorXd random_vector(Rng& rng, int n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) v(k) = rng.uniform(-scale, scale);
    return v;
}

std::vector<double> flatten_grad(const MlpGradient& g) {
    std::vector<double> out;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        for (Eigen::Index r = 0; r < g.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < g.weights[l].cols(); ++c) out.push_back(g.weights[l](r, c));
        for (Eigen::Index r = 0; r < g.biases[l].size(); ++r) out.push_back(g.biases[l](r));
    }
    return out;
}

} // namespace

TEST(Init, ShapesAndZeroBiases) {
    const Mlp mlp = init_mlp({3, 32, 16, 2}, 42);
    ASSERT_EQ(mlp.n_layers(), 3);
    EXPECT_EQ(mlp.weights[0].rows(), 32);
    EXPECT_EQ(mlp.weights[0].cols(), 3);
    EXPECT_EQ(mlp.weights[1].rows(), 16);
    EXPECT_EQ(mlp.weights[1].cols(), 32);
    EXPECT_EQ(mlp.weights[2].rows(), 2);
    EXPECT_EQ(mlp.weights[2].cols(), 16);
    for (const auto& b : mlp.biases) EXPECT_EQ(b.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Init, Deterministic) {
    const Mlp a = init_mlp({4, 8, 2}, 7);
    const Mlp b = init_mlp({4, 8, 2}, 7);
    EXPECT_EQ(oracle::flatten(a), oracle::flatten(b));
    EXPECT_NE(oracle::flatten(a), oracle::flatten(init_mlp({4, 8, 2}, 8)));
}

TEST(Init, GlorotBound) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Mlp mlp = init_mlp({2, 2}, seed);
        EXPECT_LE(mlp.weights[0].cwiseAbs().maxCoeff(), std::sqrt(6.0 / 4.0));
    }
}

TEST(Init, ZeroWidthRejected) {
    try {
        init_mlp({3, 0, 2}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parameter);
    }
}

TEST(Forward, ZeroWeightsGiveLastBias) {
    Mlp mlp = init_mlp({3, 5, 2}, 1);
    for (auto& w : mlp.weights) w.setZero();
    mlp.biases.back() << 0.25, -1.5;
    const Eigen::VectorXd y = forward(mlp, Eigen::Vector3d(1, 2, 3));
    EXPECT_EQ(y, mlp.biases.back());
}

TEST(Forward, LinearLayer) {
    Eigen::MatrixXd w(2, 3);
    w << 1, 2, 3, 4, 5, 6;
    const Mlp mlp = linear_mlp(w, Eigen::Vector2d(0.5, -0.5));
    const Eigen::Vector3d x(1, -1, 2);
    EXPECT_TRUE(forward(mlp, x).isApprox(w * x + Eigen::Vector2d(0.5, -0.5), 1e-15));
    EXPECT_EQ(jacobian(mlp, x), w);
}

TEST(Forward, MatchesNaiveLoops) {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const Mlp mlp = init_mlp({3, 32, 16, 2}, rng);
        const Eigen::VectorXd x = random_vector(rng, 3);
        const Eigen::VectorXd y = forward(mlp, x);
        const auto ref = oracle::naive_forward(mlp, std::vector<double>(x.data(), x.data() + 3));
        for (int k = 0; k < 2; ++k) EXPECT_NEAR(y(k), ref[k], 1e-14);
    }
}

TEST(Forward, BatchMatchesSingle) {
    Rng rng(5);
    const Mlp mlp = init_mlp({4, 8, 3}, rng);
    Eigen::MatrixXd xs(4, 6);
    for (int c = 0; c < 6; ++c) xs.col(c) = random_vector(rng, 4);
    const auto cache = forward_batch(mlp, xs);
    for (int c = 0; c < 6; ++c) EXPECT_TRUE(cache.output().col(c).isApprox(forward(mlp, xs.col(c)), 1e-14));
}

TEST(Forward, DimensionMismatch) {
    const Mlp mlp = init_mlp({3, 4, 2}, 1);
    try {
        forward(mlp, Eigen::Vector2d(1, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::dimension);
    }
}

TEST(Forward, FiniteOnLargeInputs) {
    const Mlp mlp = init_mlp({3, 32, 16, 2}, 9);
    const Eigen::Vector3d x(1e6, -1e6, 1e3);
    EXPECT_TRUE(forward(mlp, x).allFinite());
    EXPECT_TRUE(jacobian(mlp, x).allFinite());
}

TEST(Jacobian, MatchesFiniteDifferences) {
    Rng rng(11);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Mlp mlp = init_mlp({3, 32, 16, 2}, rng);
        const Eigen::VectorXd x = random_vector(rng, 3);
        const Eigen::MatrixXd fd =
            finite_difference_jacobian([&](const Eigen::VectorXd& v) { return forward(mlp, v); }, x, 1e-5);
        worst = std::max(worst, max_relative_error(jacobian(mlp, x), fd));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Jacobian, ChainRule) {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        const Mlp g = init_mlp({3, 16, 2}, rng);
        const Mlp f = init_mlp({2, 8, 4}, rng);
        // g's linear output layer folds into f's first layer, giving f o g
        // as one tanh network.
        Mlp fg;
        fg.layer_dims = {3, 16, 8, 4};
        fg.weights = {g.weights[0], f.weights[0] * g.weights[1], f.weights[1]};
        fg.biases = {g.biases[0], f.weights[0] * g.biases[1] + f.biases[0], f.biases[1]};
        const Eigen::VectorXd x = random_vector(rng, 3, 2.0);
        ASSERT_LT((forward(fg, x) - forward(f, forward(g, x))).cwiseAbs().maxCoeff(), 1e-12);
        const Eigen::MatrixXd chain = jacobian(f, forward(g, x)) * jacobian(g, x);
        EXPECT_LT((jacobian(fg, x) - chain).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Jacobian, RowsEqualInputGradients) {
    Rng rng(13);
    for (int t = 0; t < 20; ++t) {
        const Mlp mlp = init_mlp({5, 32, 16, 3}, rng);
        const Eigen::VectorXd x = random_vector(rng, 5);
        const Eigen::MatrixXd jac = jacobian(mlp, x);
        const auto cache = forward_batch(mlp, x);
        for (int r = 0; r < 3; ++r) {
            MlpGradient scratch = MlpGradient::zeros_like(mlp);
            const Eigen::VectorXd e = Eigen::VectorXd::Unit(3, r);
            const Eigen::MatrixXd row = backward_batch(mlp, cache, e, scratch);
            EXPECT_LT((row.col(0).transpose() - jac.row(r)).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Jacobian, BatchMatchesSingle) {
    Rng rng(14);
    const Mlp mlp = init_mlp({4, 32, 16, 2}, rng);
    Eigen::MatrixXd xs(4, 5);
    for (int c = 0; c < 5; ++c) xs.col(c) = random_vector(rng, 4);
    const auto jacs = jacobians_batch(mlp, forward_batch(mlp, xs));
    for (int c = 0; c < 5; ++c) EXPECT_LT((jacs[c] - jacobian(mlp, xs.col(c))).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Grad, ZeroUpstream) {
    const Mlp mlp = init_mlp({3, 8, 2}, 2);
    EXPECT_EQ(grad(mlp, Eigen::Vector3d(1, 2, 3), Eigen::Vector2d::Zero()).max_abs(), 0.0);
}

TEST(Grad, LinearLayerOuterProduct) {
    Rng rng(15);
    Eigen::MatrixXd w(2, 3);
    w.setRandom();
    const Mlp mlp = linear_mlp(w);
    const Eigen::Vector3d x(0.5, -1, 2);
    const Eigen::Vector2d u(3, -2);
    const MlpGradient g = grad(mlp, x, u);
    EXPECT_TRUE(g.weights[0].isApprox(u * x.transpose(), 1e-15));
    EXPECT_TRUE(g.biases[0].isApprox(u, 1e-15));
}

TEST(Grad, MatchesParameterFiniteDifferences) {
    Rng rng(16);
    for (int t = 0; t < 10; ++t) {
        const Mlp mlp = init_mlp({3, 32, 16, 2}, rng);
        const Eigen::VectorXd x = random_vector(rng, 3);
        const Eigen::VectorXd u = random_vector(rng, 2);
        const auto analytic = flatten_grad(grad(mlp, x, u));
        const auto fd = oracle::fd_gradient(
            [&](const std::vector<double>& p) { return u.dot(forward(oracle::unflatten(mlp, p), x)); },
            oracle::flatten(mlp), 1e-6);
        ASSERT_EQ(analytic.size(), fd.size());
        for (std::size_t k = 0; k < fd.size(); ++k)
            EXPECT_NEAR(analytic[k], fd[k], 1e-4 * std::max(1.0, std::abs(fd[k])));
    }
}

TEST(Autoencoder, Shapes) {
    Rng rng(1);
    const auto ae = make_chart_autoencoder(4, 2, {32, 16}, rng, 3);
    EXPECT_EQ(ae.encoder.layer_dims, (std::vector<int>{4, 32, 16, 2}));
    EXPECT_EQ(ae.decoder.layer_dims, (std::vector<int>{2, 16, 32, 4}));
    EXPECT_EQ(ae.chart_index, 3);
    EXPECT_EQ(ae.reconstruct(Eigen::Vector4d(1, 2, 3, 4)).size(), 4);
}
