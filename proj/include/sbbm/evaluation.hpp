#pragma once

// Partition and probability-estimation metrics, signed modularity, the triad
// census, and population-level strong/weak balance checks.

#include "sbbm/model.hpp"
#include "sbbm/spectral.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbbm {

/// Fraction of node pairs on which the two partitions disagree about
/// co-membership. Label values are arbitrary.
inline double clustering_error(const std::vector<int>& psi_hat, const std::vector<int>& psi_star) {
    if (psi_hat.size() != psi_star.size()) throw std::invalid_argument("clustering_error: length mismatch");
    const auto n = static_cast<std::int64_t>(psi_hat.size());
    if (n < 2) throw std::invalid_argument("clustering_error: need at least two nodes");

    // disagreements = same_in_truth + same_in_estimate - 2 * same_in_both
    std::map<int, std::int64_t> hat_sizes, star_sizes;
    std::map<std::pair<int, int>, std::int64_t> joint;
    for (std::size_t i = 0; i < psi_hat.size(); ++i) {
        ++hat_sizes[psi_hat[i]];
        ++star_sizes[psi_star[i]];
        ++joint[{psi_hat[i], psi_star[i]}];
    }
    auto pairs = [](std::int64_t c) { return c * (c - 1) / 2; };
    std::int64_t same_hat = 0, same_star = 0, same_both = 0;
    for (const auto& [k, c] : hat_sizes) same_hat += pairs(c);
    for (const auto& [k, c] : star_sizes) same_star += pairs(c);
    for (const auto& [k, c] : joint) same_both += pairs(c);
    return static_cast<double>(same_hat + same_star - 2 * same_both) / static_cast<double>(pairs(n));
}

inline double clustering_error(const Membership& hat, const Membership& star) {
    return clustering_error(hat.labels(), star.labels());
}

/// Maximum-weight perfect matching on a square weight matrix (Hungarian
/// method, O(K^3)). Returns assignment[row] = column.
inline std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight) {
    const int K = static_cast<int>(weight.rows());
    if (weight.cols() != K) throw std::invalid_argument("max_weight_assignment: matrix not square");
    const double inf = std::numeric_limits<double>::infinity();
    // Minimize -weight; 1-based potentials u, v and column owners p.
    std::vector<double> u(K + 1, 0.0), v(K + 1, 0.0);
    std::vector<int> p(K + 1, 0), way(K + 1, 0);
    for (int i = 1; i <= K; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(K + 1, inf);
        std::vector<bool> used(K + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= K; ++j) {
                if (used[j]) continue;
                const double cur = -weight(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= K; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(static_cast<std::size_t>(K), -1);
    for (int j = 1; j <= K; ++j)
        if (p[j] > 0) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    return assignment;
}

/// min over column permutations of ||Z_hat Pi - Z*||_F^2 / n, solved as a
/// linear assignment on the K x K overlap matrix. Each misplaced node costs 2.
inline double membership_error(const Membership& hat, const Membership& star) {
    if (hat.n() != star.n()) throw std::invalid_argument("membership_error: size mismatch");
    if (hat.K() != star.K()) throw std::invalid_argument("membership_error: K mismatch");
    const int K = hat.K();
    const Index n = hat.n();
    if (n == 0) throw std::invalid_argument("membership_error: empty membership");
    Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(K, K);
    for (Index i = 0; i < n; ++i) overlap(hat[i], star[i]) += 1.0;
    const std::vector<int> match = max_weight_assignment(overlap);
    double matched = 0.0;
    for (int k = 0; k < K; ++k) matched += overlap(k, match[static_cast<std::size_t>(k)]);
    return 2.0 * (static_cast<double>(n) - matched) / static_cast<double>(n);
}

/// ||P_hat - P*||_F^2 / ||P*||_F^2. With include_diagonal = false the diagonal
/// entries are left out of both norms.
inline double prob_error(const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& p_star, bool include_diagonal = true) {
    if (p_hat.rows() != p_star.rows() || p_hat.cols() != p_star.cols())
        throw std::invalid_argument("prob_error: shape mismatch");
    double num = (p_hat - p_star).squaredNorm();
    double den = p_star.squaredNorm();
    if (!include_diagonal) {
        num -= (p_hat.diagonal() - p_star.diagonal()).squaredNorm();
        den -= p_star.diagonal().squaredNorm();
    }
    if (!(den > 0.0)) throw std::domain_error("prob_error: truth matrix has zero norm");
    return num / den;
}

/// Positive-subgraph modularity minus negative-subgraph modularity. A sign
/// class with no edges contributes 0.
inline double signed_modularity(const SignedAdjacency& adjacency, const std::vector<int>& psi) {
    const Index n = adjacency.n();
    if (static_cast<Index>(psi.size()) != n) throw std::invalid_argument("signed_modularity: size mismatch");

    auto term = [&](int sign) {
        Eigen::VectorXd k = Eigen::VectorXd::Zero(n);
        double within = 0.0;
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < n; ++i) {
                if (adjacency(i, j) != sign) continue;
                k[i] += 1.0;
                if (psi[static_cast<std::size_t>(i)] == psi[static_cast<std::size_t>(j)]) within += 1.0;
            }
        }
        const double two_m = k.sum();
        if (two_m == 0.0) return std::optional<double>{};
        std::map<int, double> block_degree;
        for (Index i = 0; i < n; ++i) block_degree[psi[static_cast<std::size_t>(i)]] += k[i];
        double expected = 0.0;
        for (const auto& [c, d] : block_degree) expected += d * d;
        return std::optional<double>{(within - expected / two_m) / two_m};
    };

    const auto pos = term(1);
    const auto neg = term(-1);
    if (!pos && !neg) throw std::invalid_argument("signed_modularity: network has no edges");
    return pos.value_or(0.0) - neg.value_or(0.0);
}

inline double signed_modularity(const SignedAdjacency& adjacency, const Membership& m) {
    return signed_modularity(adjacency, m.labels());
}

/// Fully connected triples by number of positive edges: A = 3, B = 2, C = 1, D = 0.
struct TriadCensus {
    std::int64_t type_a = 0;
    std::int64_t type_b = 0;
    std::int64_t type_c = 0;
    std::int64_t type_d = 0;

    std::int64_t strong_balanced() const { return type_a + type_c; }
    std::int64_t weak_only() const { return type_d; }
    std::int64_t unbalanced() const { return type_b; }
    std::int64_t total() const { return type_a + type_b + type_c + type_d; }

    void add(int positives) {
        switch (positives) {
            case 3: ++type_a; break;
            case 2: ++type_b; break;
            case 1: ++type_c; break;
            default: ++type_d; break;
        }
    }

    friend bool operator==(const TriadCensus&, const TriadCensus&) = default;
};

/// Neighbor-intersection census over i < j < k, O(sum of squared degrees).
/// Self-pairs are ignored.
inline TriadCensus triad_census(const SignedAdjacency& adjacency) {
    const Index n = adjacency.n();
    std::vector<std::vector<Index>> higher(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < j; ++i)
            if (adjacency(i, j) != 0) higher[static_cast<std::size_t>(i)].push_back(j);

    TriadCensus census;
    for (Index i = 0; i < n; ++i) {
        const auto& ni = higher[static_cast<std::size_t>(i)];
        for (std::size_t a = 0; a < ni.size(); ++a) {
            const Index j = ni[a];
            const auto& nj = higher[static_cast<std::size_t>(j)];
            // both lists are sorted; intersect ni[a+1..] with nj
            auto p = ni.begin() + static_cast<std::ptrdiff_t>(a) + 1;
            auto q = nj.begin();
            while (p != ni.end() && q != nj.end()) {
                if (*p < *q) {
                    ++p;
                } else if (*q < *p) {
                    ++q;
                } else {
                    const Index k = *p;
                    census.add((adjacency(i, j) == 1) + (adjacency(j, k) == 1) + (adjacency(i, k) == 1));
                    ++p;
                    ++q;
                }
            }
        }
    }
    return census;
}

enum class Balance { strong, weak, unbalanced };

inline const char* to_string(Balance b) {
    switch (b) {
        case Balance::strong: return "strong";
        case Balance::weak: return "weak";
        case Balance::unbalanced: return "unbalanced";
    }
    return "?";
}

struct BalanceVerdict {
    Balance verdict = Balance::unbalanced;
    std::optional<Membership> partition;               // when balanced
    std::optional<std::array<Index, 3>> witness;       // violating triple
    std::optional<std::pair<Index, Index>> tied_pair;  // |p+ - p-| <= tol
};

namespace detail {

inline void check_population_inputs(const Eigen::MatrixXd& pp, const Eigen::MatrixXd& pm) {
    if (pp.rows() != pp.cols() || pm.rows() != pm.cols() || pp.rows() != pm.rows())
        throw std::invalid_argument("balance check: matrices must be square and of equal size");
    const double tol = 1e-12;
    if (!pp.isApprox(pp.transpose(), tol) && (pp - pp.transpose()).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("balance check: P+ not symmetric");
    if (!pm.isApprox(pm.transpose(), tol) && (pm - pm.transpose()).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("balance check: P- not symmetric");
}

inline int relation_sign(double d, double tol) { return d > tol ? 1 : (d < -tol ? -1 : 0); }

}  // namespace detail

/// Global test: i ~ j iff p+_ij - p-_ij > tol. The network is weakly balanced
/// iff the blocks of the transitive closure of ~ reproduce ~ exactly with no
/// ties, and strongly balanced if in addition there are at most two blocks.
inline BalanceVerdict check_balance_population(const Eigen::MatrixXd& p_plus, const Eigen::MatrixXd& p_minus,
                                               double tol = 1e-12) {
    detail::check_population_inputs(p_plus, p_minus);
    const Index n = p_plus.rows();
    const Eigen::MatrixXd d = p_plus - p_minus;
    BalanceVerdict out;

    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < j; ++i) {
            if (detail::relation_sign(d(i, j), tol) == 0) {
                out.tied_pair = {i, j};
                for (Index k = 0; k < n; ++k)
                    if (k != i && k != j) {
                        out.witness = std::array<Index, 3>{i, j, k};
                        break;
                    }
                return out;
            }
        }
    }

    // blocks by BFS over the positive relation
    std::vector<int> block(static_cast<std::size_t>(n), -1);
    int blocks = 0;
    for (Index s = 0; s < n; ++s) {
        if (block[static_cast<std::size_t>(s)] >= 0) continue;
        std::queue<Index> q;
        q.push(s);
        block[static_cast<std::size_t>(s)] = blocks;
        while (!q.empty()) {
            const Index u = q.front();
            q.pop();
            for (Index v = 0; v < n; ++v) {
                if (v != u && block[static_cast<std::size_t>(v)] < 0 && d(u, v) > tol) {
                    block[static_cast<std::size_t>(v)] = blocks;
                    q.push(v);
                }
            }
        }
        ++blocks;
    }

    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < j; ++i) {
            if (block[static_cast<std::size_t>(i)] != block[static_cast<std::size_t>(j)] || d(i, j) > tol) continue;
            // i, j share a block but are negatively related. On a shortest
            // positive path i = v0 ~ v1 ~ v2 ... the pair (v0, v2) is negative,
            // so (v0, v1, v2) has exactly two positive relations.
            std::vector<Index> parent(static_cast<std::size_t>(n), -1);
            std::queue<Index> q;
            q.push(i);
            parent[static_cast<std::size_t>(i)] = i;
            while (!q.empty() && parent[static_cast<std::size_t>(j)] < 0) {
                const Index u = q.front();
                q.pop();
                for (Index v = 0; v < n; ++v) {
                    if (v != u && parent[static_cast<std::size_t>(v)] < 0 && d(u, v) > tol) {
                        parent[static_cast<std::size_t>(v)] = u;
                        q.push(v);
                    }
                }
            }
            std::vector<Index> path{j};
            while (path.back() != i) path.push_back(parent[static_cast<std::size_t>(path.back())]);
            std::reverse(path.begin(), path.end());
            out.witness = std::array<Index, 3>{path[0], path[1], path[2]};
            return out;
        }
    }

    out.verdict = blocks <= 2 ? Balance::strong : Balance::weak;
    out.partition = Membership(std::move(block), std::max(blocks, 1));
    return out;
}

struct LocalBalance {
    bool strong = true;
    bool weak = true;
};

/// Exhaustive triple-wise test: strong iff every triple has a positive product
/// of (p+ - p-); weak iff every triple has a positive product or three
/// negative factors. Ties (|p+ - p-| <= tol) count as violations.
inline LocalBalance check_balance_local(const Eigen::MatrixXd& p_plus, const Eigen::MatrixXd& p_minus,
                                       double tol = 1e-12) {
    detail::check_population_inputs(p_plus, p_minus);
    const Index n = p_plus.rows();
    LocalBalance out;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            for (Index k = j + 1; k < n; ++k) {
                const int a = detail::relation_sign(p_plus(i, j) - p_minus(i, j), tol);
                const int b = detail::relation_sign(p_plus(j, k) - p_minus(j, k), tol);
                const int c = detail::relation_sign(p_plus(k, i) - p_minus(k, i), tol);
                const int prod = a * b * c;
                if (prod <= 0) out.strong = false;
                if (prod <= 0 && !(a < 0 && b < 0 && c < 0)) out.weak = false;
            }
    return out;
}

/// Signed-Laplacian spectral clustering baseline (same code path as the
/// fitter's initializer).
inline Membership slp_baseline(const SignedAdjacency& adjacency, int K, std::uint64_t seed = 0) {
    return spectral_init(adjacency, K, seed);
}

}  // namespace sbbm
