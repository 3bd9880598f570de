#include "sbbm/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sbbm;

namespace {

NodeParams two_node_params() {
    NodeParams p = NodeParams::zeros(2);
    p.gamma_plus << 0.1, 0.2;
    p.eta_plus << 0.5, 0.2;
    return p;
}

}  // namespace

TEST(BuildTheta, ZeroParamsGiveZeroMatrices) {
    const ThetaPair t = build_theta(NodeParams::zeros(5), Membership({0, 1, 0, 2, 1}, 3));
    EXPECT_TRUE(t.plus.isZero(0.0));
    EXPECT_TRUE(t.minus.isZero(0.0));
}

TEST(BuildTheta, CrossPairDropsEtaAndDiagonalKeepsIt) {
    const ThetaPair t = build_theta(two_node_params(), Membership({0, 1}, 2));
    EXPECT_NEAR(t.plus(0, 1), 0.3, 1e-15);
    EXPECT_NEAR(t.plus(1, 0), 0.3, 1e-15);
    EXPECT_NEAR(t.plus(0, 0), 1.2, 1e-15);
    EXPECT_TRUE(t.minus.isZero(0.0));
}

TEST(BuildTheta, SymmetricForRandomInputs) {
    NodeParams p = NodeParams::zeros(7);
    p.gamma_plus.setRandom();
    p.eta_plus.setRandom();
    p.gamma_minus.setRandom();
    p.eta_minus.setRandom();
    const ThetaPair t = build_theta(p, Membership({0, 1, 1, 0, 2, 2, 0}, 3));
    EXPECT_TRUE(t.plus.isApprox(t.plus.transpose(), 0.0));
    EXPECT_TRUE(t.minus.isApprox(t.minus.transpose(), 0.0));
}

TEST(BuildTheta, RejectsMismatchedSizes) {
    EXPECT_THROW(build_theta(NodeParams::zeros(3), Membership({0, 1}, 2)), std::invalid_argument);
    NodeParams bad = NodeParams::zeros(3);
    bad.eta_minus.resize(2);
    EXPECT_THROW(build_theta(bad, Membership({0, 1, 0}, 2)), std::invalid_argument);
}

TEST(ProbTriple, SymmetricAtZero) {
    const ProbTriple p = prob_triple(0.0, 0.0);
    EXPECT_NEAR(p.plus, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.minus, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.zero, 1.0 / 3.0, 1e-15);
}

TEST(ProbTriple, HandValue) {
    const ProbTriple p = prob_triple(std::log(2.0), 0.0);
    EXPECT_NEAR(p.plus, 0.5, 1e-15);
    EXPECT_NEAR(p.minus, 0.25, 1e-15);
    EXPECT_NEAR(p.zero, 0.25, 1e-15);
}

TEST(ProbTriple, LargeLogOddsStayFinite) {
    const ProbTriple p = prob_triple(20.0, 20.0);
    EXPECT_NEAR(p.plus, 0.5, 1e-8);
    EXPECT_NEAR(p.minus, 0.5, 1e-8);
    EXPECT_LE(p.zero, 1e-8);

    const ProbTriple q = prob_triple(700.0, -700.0);
    EXPECT_TRUE(std::isfinite(q.plus) && std::isfinite(q.minus) && std::isfinite(q.zero));
    EXPECT_NEAR(q.plus, 1.0, 1e-15);
}

TEST(ProbTriple, SumsToOne) {
    for (double a = -30; a <= 30; a += 3.7)
        for (double b = -30; b <= 30; b += 4.1) {
            const ProbTriple p = prob_triple(a, b);
            EXPECT_NEAR(p.plus + p.minus + p.zero, 1.0, 1e-14);
        }
}

TEST(ProbTriple, RejectsNonFinite) {
    EXPECT_THROW(prob_triple(NAN, 0.0), std::domain_error);
    EXPECT_THROW(prob_triple(0.0, INFINITY), std::domain_error);
}

TEST(ProbMatrices, ZeroThetaIsUniform) {
    ThetaPair t{Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Zero(4, 4)};
    const ProbMatrices p = prob_matrices(t);
    EXPECT_TRUE(p.plus.isConstant(1.0 / 3.0, 1e-15));
    EXPECT_TRUE(p.minus.isConstant(1.0 / 3.0, 1e-15));
}

TEST(ProbMatrices, RejectsShapeMismatch) {
    ThetaPair t{Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 2)};
    EXPECT_THROW(prob_matrices(t), std::invalid_argument);
}

TEST(SignedAdjacency, ValidatesEntries) {
    Eigen::MatrixXi m(2, 2);
    m << 0, 1, -1, 0;
    EXPECT_THROW(SignedAdjacency::from_matrix(m), std::invalid_argument);
    m << 0, 2, 2, 0;
    EXPECT_THROW(SignedAdjacency::from_matrix(m), std::invalid_argument);
    m << 1, 0, 0, 0;
    EXPECT_THROW(SignedAdjacency::from_matrix(m), std::invalid_argument);
    EXPECT_NO_THROW(SignedAdjacency::from_matrix(m, DiagonalPolicy::include));
}

TEST(SignedAdjacency, CountsPairsAndEdges) {
    SignedAdjacency a(4);
    a.set(0, 1, 1);
    a.set(2, 3, -1);
    a.set(1, 3, -1);
    EXPECT_EQ(a.count_edges(1), 1);
    EXPECT_EQ(a.count_edges(-1), 2);
    EXPECT_EQ(a.pair_count(), 6);
    EXPECT_EQ(a(3, 2), -1);
    EXPECT_EQ(SignedAdjacency(4, DiagonalPolicy::include).pair_count(), 10);
}

TEST(Membership, RejectsOutOfRangeLabels) {
    EXPECT_THROW(Membership({0, 2}, 2), std::invalid_argument);
    EXPECT_THROW(Membership({0, -1}, 2), std::invalid_argument);
    EXPECT_THROW(Membership({0}, 0), std::invalid_argument);
    const Membership m({0, 1, 1}, 3);
    EXPECT_EQ(m.community_sizes(), (std::vector<Index>{1, 2, 0}));
}

TEST(NodeParams, FeasibilityMargins) {
    NodeParams p = NodeParams::zeros(1);
    p.gamma_plus << -1.0;
    p.eta_plus << 2.5;
    p.gamma_minus << 1.0;
    p.eta_minus << 0.0;
    EXPECT_TRUE(p.feasible(0.0));
    EXPECT_TRUE(p.feasible(1e-6));
    p.gamma_minus << -1.0;  // gamma+ = gamma-
    EXPECT_TRUE(p.feasible(0.0));
    EXPECT_FALSE(p.feasible(1e-6));
}

TEST(NodeParams, FlattenRoundTrip) {
    NodeParams p = NodeParams::zeros(3);
    p.gamma_plus << 1, 2, 3;
    p.eta_minus << -1, -2, -3;
    EXPECT_EQ(NodeParams::unflatten(p.flatten()), p);
    EXPECT_THROW(NodeParams::unflatten(Eigen::VectorXd::Zero(5)), std::invalid_argument);
}
