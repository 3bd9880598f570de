#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sbbm;

TEST(ProjectNode, FeasiblePointUnchanged) {
    const NodeVector q(-1, 2, 1, 0);
    EXPECT_EQ(project_node(q, 0.0), q);
}

TEST(ProjectNode, SingleViolationHandValue) {
    const NodeVector x = project_node(NodeVector(0.5, 1, 0.2, 0), 0.0);
    EXPECT_NEAR((x - NodeVector(0.35, 1, 0.35, 0)).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(ProjectNode, DoubleViolationMatchesQp) {
    const NodeVector q(1, -3, 0, 0);
    const NodeVector x = project_node(q, 0.0);
    EXPECT_LE((x - oracle::project_qp(q, 0.0)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(x[0] - x[2], 1e-12);
    EXPECT_GE(x[0] + x[1] - x[2] - x[3], -1e-12);
}

TEST(ProjectNode, RandomPointsMatchQpAndAreIdempotent) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 3.0);
    int both = 0;
    for (int rep = 0; rep < 500; ++rep) {
        const NodeVector q(g(rng), g(rng), g(rng), g(rng));
        const double eps = rep % 3 == 0 ? 0.0 : 1e-6;
        const NodeVector x = project_node(q, eps);
        if (q[0] - q[2] + eps > 0 && q[2] + q[3] - q[0] - q[1] + eps > 0) ++both;
        EXPECT_LE((x - oracle::project_qp(q, eps)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LE((project_node(x, eps) - x).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_GT(both, 20);
}

TEST(ProjectNode, RejectsBadInput) {
    EXPECT_THROW(project_node(NodeVector(NAN, 0, 0, 0), 0.0), std::domain_error);
    EXPECT_THROW(project_node(NodeVector::Zero(), -1.0), std::invalid_argument);
}

TEST(ProjectAll, FeasibleParamsUnchanged) {
    NodeParams p = NodeParams::from_beta_gamma(Eigen::Vector3d(1, 2, 0), Eigen::Vector3d(-1, 0, -2),
                                               Eigen::Vector3d(-1, -1, -1), Eigen::Vector3d(0, 1, 2));
    ASSERT_TRUE(p.feasible(1e-6));
    EXPECT_EQ(project_all(p, FeasibleSpec{}), p);
}

TEST(ProjectAll, OutputIsFeasible) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 2.0);
    NodeParams p = NodeParams::zeros(50);
    for (Index i = 0; i < 50; ++i) {
        p.gamma_plus[i] = g(rng);
        p.eta_plus[i] = g(rng);
        p.gamma_minus[i] = g(rng);
        p.eta_minus[i] = g(rng);
    }
    EXPECT_TRUE(project_all(p, FeasibleSpec{}).feasible(1e-6));
    Eigen::VectorXd x = p.flatten();
    project_flat(x, 1e-6);
    EXPECT_EQ(NodeParams::unflatten(x), project_all(p, FeasibleSpec{}));
}

TEST(GaugeFixK2, HandExample) {
    NodeParams p = NodeParams::zeros(2);
    p.gamma_plus << 0.1, 0.2;
    p.eta_plus << 0.5, -0.3;
    const Membership m({0, 1}, 2);
    const NodeParams q = gauge_fix_k2(p, m);
    EXPECT_NEAR(q.gamma_plus[0], 0.6, 1e-15);
    EXPECT_NEAR(q.gamma_plus[1], -0.3, 1e-15);
    EXPECT_EQ(q.eta_plus[0], 0.0);
    EXPECT_NEAR(q.eta_plus[1], 0.2, 1e-15);
    const ThetaPair before = build_theta(p, m), after = build_theta(q, m);
    EXPECT_NEAR(after.plus(0, 1), 0.3, 1e-15);
    EXPECT_NEAR(after.plus(0, 0), 1.2, 1e-15);
    EXPECT_LE((before.plus - after.plus).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GaugeFixK2, FixedPointWhenAnchorEtaIsZero) {
    NodeParams p = NodeParams::zeros(3);
    p.gamma_plus << 0.4, -0.2, 1.0;
    p.eta_plus << 0.0, 0.7, -0.1;
    p.eta_minus << 0.0, 0.3, 0.5;
    EXPECT_EQ(gauge_fix_k2(p, Membership({1, 0, 1}, 2)), p);
}

TEST(GaugeFixK2, RequiresTwoCommunities) {
    EXPECT_THROW(gauge_fix_k2(NodeParams::zeros(3), Membership({0, 1, 2}, 3)), std::invalid_argument);
}
