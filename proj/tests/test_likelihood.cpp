#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sbbm;

namespace {

SignedAdjacency random_graph(std::mt19937_64& rng, Index n, DiagonalPolicy policy, double density = 0.5) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SignedAdjacency a(n, policy);
    const Index d = policy == DiagonalPolicy::include ? 1 : 0;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < j + d; ++i)
            if (u(rng) < density) a.set(i, j, u(rng) < 0.5 ? 1 : -1);
    return a;
}

NodeParams random_params(std::mt19937_64& rng, Index n, double scale = 1.5) {
    std::normal_distribution<double> g(0.0, scale);
    NodeParams p = NodeParams::zeros(n);
    for (Index i = 0; i < n; ++i) {
        p.gamma_plus[i] = g(rng);
        p.eta_plus[i] = g(rng);
        p.gamma_minus[i] = g(rng);
        p.eta_minus[i] = g(rng);
    }
    return p;
}

std::vector<int> random_labels(std::mt19937_64& rng, Index n, int K) {
    std::uniform_int_distribution<int> d(0, K - 1);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& l : out) l = d(rng);
    return out;
}

}  // namespace

TEST(Nll, ZeroThetaIsLog3) {
    std::mt19937_64 rng(1);
    const SignedAdjacency a = random_graph(rng, 9, DiagonalPolicy::exclude);
    const NllValue v = nll_of_params(a, NodeParams::zeros(9), Membership::single_block(9));
    EXPECT_NEAR(v.value, std::log(3.0), 1e-14);
    EXPECT_EQ(v.pair_count, 36);
}

TEST(Nll, SingleSelfPairHandValue) {
    SignedAdjacency a(1, DiagonalPolicy::include);
    a.set(0, 0, 1);
    ThetaPair t{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Zero(1, 1)};
    EXPECT_NEAR(nll(a, t).value, 0.5514447, 1e-7);
    EXPECT_NEAR(nll(a, t).value, -1.0 + std::log(2.0 + std::exp(1.0)), 1e-15);
}

TEST(Nll, VanishesWhenEveryPairIsCertain) {
    SignedAdjacency a(4);
    for (Index i = 0; i < 4; ++i)
        for (Index j = i + 1; j < 4; ++j) a.set(i, j, 1);
    ThetaPair t{Eigen::MatrixXd::Constant(4, 4, 30.0), Eigen::MatrixXd::Zero(4, 4)};
    EXPECT_LE(nll(a, t).value, 1e-12);
    double prev = INFINITY;
    for (double th = 0; th <= 30; th += 2) {
        t.plus.setConstant(th);
        const double v = nll(a, t).value;
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(Nll, RejectsEmptyPairSet) {
    EXPECT_THROW(nll_of_params(SignedAdjacency(1), NodeParams::zeros(1), Membership::single_block(1)),
                 std::domain_error);
}

TEST(Objective, MatchesPerPairOracle) {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 40; ++rep) {
        const auto policy = rep % 2 ? DiagonalPolicy::include : DiagonalPolicy::exclude;
        const Index n = 3 + rep % 9;
        const int K = 1 + rep % 3;
        const SignedAdjacency a = random_graph(rng, n, policy);
        const NodeParams p = random_params(rng, n, rep < 20 ? 1.5 : 200.0);  // second half: stable path
        const auto lab = random_labels(rng, n, K);
        const double want = oracle::nll(a, p, lab);
        const Eigen::ArrayXi labels = Eigen::Map<const Eigen::ArrayXi>(lab.data(), n);
        EXPECT_NEAR(Objective(a).value(p.flatten(), labels), want, 1e-11 * std::max(1.0, std::abs(want)));
        EXPECT_NEAR(nll_of_params(a, p, Membership(lab, K)).value, want, 1e-11 * std::max(1.0, std::abs(want)));
    }
}

TEST(Gradient, HandValueOnSelfPair) {
    const SignedAdjacency a(1, DiagonalPolicy::include);
    const Gradient g = gradient(a, NodeParams::zeros(1), Membership::single_block(1));
    EXPECT_NEAR(g.gamma_plus[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(g.eta_plus[0], 2.0 / 3.0, 1e-15);
}

TEST(Gradient, MatchesCentralDifferences) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 30; ++rep) {
        const auto policy = rep % 2 ? DiagonalPolicy::include : DiagonalPolicy::exclude;
        const Index n = 10;
        const int K = 1 + rep % 3;
        const SignedAdjacency a = random_graph(rng, n, policy);
        const NodeParams p = random_params(rng, n);
        const auto lab = random_labels(rng, n, K);
        Eigen::VectorXd g;
        Objective(a).evaluate(p.flatten(), Eigen::Map<const Eigen::ArrayXi>(lab.data(), n), &g);
        const Eigen::VectorXd fd = oracle::fd_gradient(a, p, lab, 1e-5);
        EXPECT_LE((g - fd).norm() / std::max(fd.norm(), 1e-12), 1e-5) << "rep " << rep;
    }
}

TEST(Objective, LabelCostsMatchFullRecomputation) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 12;
        const int K = 3;
        const auto policy = rep % 2 ? DiagonalPolicy::include : DiagonalPolicy::exclude;
        const SignedAdjacency a = random_graph(rng, n, policy);
        const NodeParams p = random_params(rng, n);
        auto lab = random_labels(rng, n, K);
        const Objective obj(a);
        const Eigen::VectorXd x = p.flatten();
        const Index i = rep % n;
        const auto costs = obj.label_costs(x, Eigen::Map<const Eigen::ArrayXi>(lab.data(), n), K, i);
        const int cur = lab[static_cast<std::size_t>(i)];
        const double base = oracle::nll(a, p, lab);
        for (int k = 0; k < K; ++k) {
            auto moved = lab;
            moved[static_cast<std::size_t>(i)] = k;
            const double delta = oracle::nll(a, p, moved) - base;
            const double predicted = (costs[static_cast<std::size_t>(k)] - costs[static_cast<std::size_t>(cur)]) *
                                     obj.normalizer();
            EXPECT_NEAR(predicted, delta, 1e-10);
        }
    }
}

TEST(Objective, RejectsBadShapes) {
    const Objective obj{SignedAdjacency(3)};
    Eigen::ArrayXi labels(3);
    labels << 0, 1, 0;
    EXPECT_THROW(obj.value(Eigen::VectorXd::Zero(8), labels), std::invalid_argument);
    labels << 0, -1, 0;
    EXPECT_THROW(obj.value(Eigen::VectorXd::Zero(12), labels), std::invalid_argument);
}
