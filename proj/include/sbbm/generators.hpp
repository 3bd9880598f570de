#pragma once

// Seeded synthetic signed networks: a generic sampler for the signed block
// beta-model and the three simulation designs (a latent-position strong-balance
// design and two heterogeneous weak-balance designs).
//
// Node-level draws use one stream per (purpose, node) and pair draws one stream
// per column j covering i < j in order, so growing n extends earlier draws
// rather than reshuffling them.

#include "sbbm/model.hpp"
#include "sbbm/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sbbm {

struct Truth {
    Membership membership;
    Eigen::MatrixXd p_plus;
    Eigen::MatrixXd p_minus;
    std::optional<NodeParams> params;
};

struct SampleOutput {
    SignedAdjacency adjacency;
    Truth truth;
};

struct Example1Config {
    Index n = 500;
    double mu = -2.5;
    std::uint64_t seed = 0;
    DiagonalPolicy diagonal_policy = DiagonalPolicy::exclude;
};

struct Example23Config {
    Index n = 500;
    int K = 4;
    double mean_beta = -3.5;
    double var_beta = 9.0;
    double delta_lo = 0.0;
    double delta_hi = 2.0;
    std::uint64_t seed = 0;
    DiagonalPolicy diagonal_policy = DiagonalPolicy::exclude;
};

/// Draws every pair independently from its (p+, p-, p0) triple.
inline SignedAdjacency sample_from_probabilities(const Eigen::MatrixXd& p_plus, const Eigen::MatrixXd& p_minus,
                                                 std::uint64_t seed, DiagonalPolicy policy) {
    const Index n = p_plus.rows();
    SignedAdjacency adj(n, policy);
    const Index diag = policy == DiagonalPolicy::include ? 1 : 0;
    for (Index j = 0; j < n; ++j) {
        RandomStream rng(seed, StreamPurpose::edges, static_cast<std::uint64_t>(j));
        for (Index i = 0; i < j + diag; ++i) {
            const double u = rng.uniform();
            if (u < p_plus(i, j))
                adj.set(i, j, 1);
            else if (u < p_plus(i, j) + p_minus(i, j))
                adj.set(i, j, -1);
        }
    }
    return adj;
}

inline SampleOutput sample_sbbm(const NodeParams& params, const Membership& membership, std::uint64_t seed,
                                DiagonalPolicy policy = DiagonalPolicy::exclude) {
    if (!params.consistent() || params.n() != membership.n())
        throw std::invalid_argument("sample_sbbm: dimension mismatch");
    if (!params.all_finite() || !params.feasible(0.0))
        throw std::invalid_argument("sample_sbbm: parameters violate the balance constraints");
    ProbMatrices p = prob_matrices(build_theta(params, membership));
    SignedAdjacency adj = sample_from_probabilities(p.plus, p.minus, seed, policy);
    return {std::move(adj), Truth{membership, std::move(p.plus), std::move(p.minus), params}};
}

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

/// P(|A_ij| = 1) in the latent-position design.
inline double example1_presence(double mu, double a_i, double a_j, double a_bar, double x_dot) {
    return detail::logistic(mu + a_i + a_j - 2.0 * a_bar + x_dot);
}

/// Latent-position design: X rows (1,0)/(0,1) with probability 1/2, column
/// centered; edge presence sigma(mu + a_i + a_j - 2 mean(a) + x_i.x_j) and sign
/// sigma(v_i v_j) with v_i = (x_i1 - x_i2)/sqrt(2). Truth P+/P- are the
/// products of presence and conditional sign probabilities.
inline SampleOutput gen_example1(const Example1Config& cfg) {
    if (cfg.n < 2) throw std::invalid_argument("gen_example1: n must be >= 2");
    const Index n = cfg.n;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd a(n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        RandomStream type_rng(cfg.seed, StreamPurpose::node_type, static_cast<std::uint64_t>(i));
        const bool first = type_rng.uniform() < 0.5;
        x(i, 0) = first ? 1.0 : 0.0;
        x(i, 1) = first ? 0.0 : 1.0;
        labels[static_cast<std::size_t>(i)] = first ? 0 : 1;
        RandomStream a_rng(cfg.seed, StreamPurpose::node_intensity, static_cast<std::uint64_t>(i));
        a[i] = a_rng.uniform(1.0, 3.0);
    }
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::VectorXd v = (xc.col(0) - xc.col(1)) / std::sqrt(2.0);
    const double abar = a.mean();
    const Eigen::MatrixXd gram = xc * xc.transpose();

    Eigen::MatrixXd pp(n, n), pm(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const double present = example1_presence(cfg.mu, a[i], a[j], abar, gram(i, j));
            const double positive = detail::logistic(v[i] * v[j]);
            pp(i, j) = present * positive;
            pm(i, j) = present * (1.0 - positive);
        }
    }
    SignedAdjacency adj = sample_from_probabilities(pp, pm, cfg.seed, cfg.diagonal_policy);
    return {std::move(adj), Truth{Membership(std::move(labels), 2), std::move(pp), std::move(pm), std::nullopt}};
}

/// Heterogeneous weak-balance design: beta-, gamma- ~ N(mean, var),
/// delta ~ U(delta_lo, delta_hi), beta+ = beta- + delta, gamma+ = gamma- - delta,
/// labels uniform over K communities.
inline SampleOutput gen_example23(const Example23Config& cfg) {
    if (cfg.K < 1 || cfg.n < cfg.K) throw std::invalid_argument("gen_example23: need n >= K >= 1");
    if (!(cfg.var_beta > 0.0)) throw std::invalid_argument("gen_example23: variance must be > 0");
    if (!(cfg.delta_lo >= 0.0 && cfg.delta_lo < cfg.delta_hi))
        throw std::invalid_argument("gen_example23: need 0 <= delta_lo < delta_hi");
    const Index n = cfg.n;
    const double sd = std::sqrt(cfg.var_beta);
    Eigen::VectorXd bm(n), gm(n), delta(n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        RandomStream rb(cfg.seed, StreamPurpose::beta_minus, idx);
        RandomStream rg(cfg.seed, StreamPurpose::gamma_minus, idx);
        RandomStream rd(cfg.seed, StreamPurpose::delta, idx);
        RandomStream rc(cfg.seed, StreamPurpose::community, idx);
        bm[i] = rb.normal(cfg.mean_beta, sd);
        gm[i] = rg.normal(cfg.mean_beta, sd);
        delta[i] = rd.uniform(cfg.delta_lo, cfg.delta_hi);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(rc.below(static_cast<std::uint64_t>(cfg.K)));
    }
    const NodeParams params = NodeParams::from_beta_gamma(bm + delta, bm, gm - delta, gm);
    return sample_sbbm(params, Membership(std::move(labels), cfg.K), cfg.seed, cfg.diagonal_policy);
}

inline SampleOutput gen_example2(Index n, int K, std::uint64_t seed) {
    Example23Config cfg;
    cfg.n = n;
    cfg.K = K;
    cfg.mean_beta = -3.5;
    cfg.var_beta = 9.0;
    cfg.seed = seed;
    return gen_example23(cfg);
}

inline SampleOutput gen_example3(Index n, double sigma2, std::uint64_t seed) {
    Example23Config cfg;
    cfg.n = n;
    cfg.K = 4;
    cfg.mean_beta = -3.0;
    cfg.var_beta = sigma2;
    cfg.seed = seed;
    return gen_example23(cfg);
}

}  // namespace sbbm
