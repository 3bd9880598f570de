#pragma once

// Domain types of the signed block beta-model and the deterministic maps from
// node parameters + community membership to log-odds and edge probabilities.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbbm {

using Index = Eigen::Index;
using SignMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Whether self-pairs (i, i) enter likelihood sums and sampling.
enum class DiagonalPolicy { include, exclude };

inline const char* to_string(DiagonalPolicy p) {
    return p == DiagonalPolicy::include ? "include" : "exclude";
}

inline DiagonalPolicy diagonal_policy_from_string(const std::string& s) {
    if (s == "include") return DiagonalPolicy::include;
    if (s == "exclude") return DiagonalPolicy::exclude;
    throw std::invalid_argument("unknown diagonal policy '" + s + "'");
}

/// Symmetric n x n matrix with entries in {+1, -1, 0}.
class SignedAdjacency {
public:
    SignedAdjacency() = default;

    explicit SignedAdjacency(Index n, DiagonalPolicy policy = DiagonalPolicy::exclude)
        : entries_(SignMatrix::Zero(n, n)), policy_(policy) {
        if (n < 0) throw std::invalid_argument("SignedAdjacency: negative size");
    }

    /// Validates symmetry, the entry alphabet and the diagonal policy.
    template <typename Derived>
    static SignedAdjacency from_matrix(const Eigen::MatrixBase<Derived>& m,
                                       DiagonalPolicy policy = DiagonalPolicy::exclude) {
        if (m.rows() != m.cols()) throw std::invalid_argument("SignedAdjacency: matrix not square");
        SignedAdjacency a(m.rows(), policy);
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = 0; i < m.rows(); ++i) {
                const auto v = m(i, j);
                if (v != 0 && v != 1 && v != -1)
                    throw std::invalid_argument("SignedAdjacency: entries must be in {+1,-1,0}");
                if (m(j, i) != v) throw std::invalid_argument("SignedAdjacency: matrix not symmetric");
                if (i == j && v != 0 && policy == DiagonalPolicy::exclude)
                    throw std::invalid_argument("SignedAdjacency: self-pair under exclude policy");
                a.entries_(i, j) = static_cast<std::int8_t>(v);
            }
        }
        return a;
    }

    Index n() const { return entries_.rows(); }
    DiagonalPolicy diagonal_policy() const { return policy_; }
    bool includes_diagonal() const { return policy_ == DiagonalPolicy::include; }

    int operator()(Index i, Index j) const { return entries_(i, j); }
    const SignMatrix& entries() const { return entries_; }

    void set(Index i, Index j, int sign) {
        if (sign != 0 && sign != 1 && sign != -1)
            throw std::invalid_argument("SignedAdjacency: sign must be in {+1,-1,0}");
        if (i == j && sign != 0 && policy_ == DiagonalPolicy::exclude)
            throw std::invalid_argument("SignedAdjacency: self-pair under exclude policy");
        entries_(i, j) = static_cast<std::int8_t>(sign);
        entries_(j, i) = static_cast<std::int8_t>(sign);
    }

    /// Number of unordered pairs (i <= j) carrying the given sign.
    std::int64_t count_edges(int sign) const {
        std::int64_t c = 0;
        for (Index j = 0; j < n(); ++j)
            for (Index i = 0; i <= j; ++i)
                if (entries_(i, j) == sign) ++c;
        return c;
    }

    /// Number of pairs summed by the likelihood under the diagonal policy.
    std::int64_t pair_count() const {
        const std::int64_t nn = n();
        return includes_diagonal() ? nn * (nn + 1) / 2 : nn * (nn - 1) / 2;
    }

    friend bool operator==(const SignedAdjacency& a, const SignedAdjacency& b) {
        return a.policy_ == b.policy_ && a.entries_ == b.entries_;
    }

private:
    SignMatrix entries_;
    DiagonalPolicy policy_ = DiagonalPolicy::exclude;
};

/// Node-to-community assignment. Labels are stored 0-based (0..K-1); files and
/// the CLI use 1-based labels.
class Membership {
public:
    Membership() = default;

    Membership(std::vector<int> labels, int K) : labels_(std::move(labels)), K_(K) {
        if (K_ < 1) throw std::invalid_argument("Membership: K must be >= 1");
        for (int l : labels_)
            if (l < 0 || l >= K_) throw std::invalid_argument("Membership: label out of range");
    }

    static Membership single_block(Index n) { return Membership(std::vector<int>(n, 0), 1); }

    Index n() const { return static_cast<Index>(labels_.size()); }
    int K() const { return K_; }
    int operator[](Index i) const { return labels_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& labels() const { return labels_; }

    void assign(Index i, int label) {
        if (label < 0 || label >= K_) throw std::invalid_argument("Membership: label out of range");
        labels_[static_cast<std::size_t>(i)] = label;
    }

    std::vector<Index> community_sizes() const {
        std::vector<Index> sizes(static_cast<std::size_t>(K_), 0);
        for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
        return sizes;
    }

    Eigen::ArrayXi as_array() const {
        return Eigen::Map<const Eigen::ArrayXi>(labels_.data(), n());
    }

    friend bool operator==(const Membership& a, const Membership& b) {
        return a.K_ == b.K_ && a.labels_ == b.labels_;
    }

private:
    std::vector<int> labels_;
    int K_ = 1;
};

/// Per-node (gamma+, eta+, gamma-, eta-); beta = gamma + eta is the
/// within-community log-odds contribution, gamma the cross-community one.
struct NodeParams {
    Eigen::VectorXd gamma_plus;
    Eigen::VectorXd eta_plus;
    Eigen::VectorXd gamma_minus;
    Eigen::VectorXd eta_minus;

    static NodeParams zeros(Index n) {
        return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
                Eigen::VectorXd::Zero(n)};
    }

    /// Builds the reparameterized form from (beta+, beta-, gamma+, gamma-).
    static NodeParams from_beta_gamma(const Eigen::VectorXd& beta_plus,
                                      const Eigen::VectorXd& beta_minus,
                                      const Eigen::VectorXd& gamma_plus,
                                      const Eigen::VectorXd& gamma_minus) {
        return {gamma_plus, beta_plus - gamma_plus, gamma_minus, beta_minus - gamma_minus};
    }

    Index n() const { return gamma_plus.size(); }
    Eigen::VectorXd beta_plus() const { return gamma_plus + eta_plus; }
    Eigen::VectorXd beta_minus() const { return gamma_minus + eta_minus; }

    bool all_finite() const {
        return gamma_plus.allFinite() && eta_plus.allFinite() && gamma_minus.allFinite() &&
               eta_minus.allFinite();
    }

    bool consistent() const {
        const Index m = gamma_plus.size();
        return eta_plus.size() == m && gamma_minus.size() == m && eta_minus.size() == m;
    }

    /// gamma+ + eps <= gamma- and beta+ >= beta- + eps at every node, up to slack.
    bool feasible(double epsilon, double slack = 1e-12) const {
        for (Index i = 0; i < n(); ++i) {
            if (gamma_plus[i] + epsilon > gamma_minus[i] + slack) return false;
            const double bp = gamma_plus[i] + eta_plus[i];
            const double bm = gamma_minus[i] + eta_minus[i];
            if (bp + slack < bm + epsilon) return false;
        }
        return true;
    }

    /// Flat layout [gamma+; eta+; gamma-; eta-] used by the optimizer.
    Eigen::VectorXd flatten() const {
        const Index m = n();
        Eigen::VectorXd x(4 * m);
        x << gamma_plus, eta_plus, gamma_minus, eta_minus;
        return x;
    }

    static NodeParams unflatten(const Eigen::VectorXd& x) {
        if (x.size() % 4 != 0) throw std::invalid_argument("NodeParams: flat size not divisible by 4");
        const Index m = x.size() / 4;
        return {x.segment(0, m), x.segment(m, m), x.segment(2 * m, m), x.segment(3 * m, m)};
    }

    friend bool operator==(const NodeParams& a, const NodeParams& b) {
        return a.gamma_plus == b.gamma_plus && a.eta_plus == b.eta_plus &&
               a.gamma_minus == b.gamma_minus && a.eta_minus == b.eta_minus;
    }
};

/// Log-odds matrices of a positive and a negative edge against no edge.
struct ThetaPair {
    Eigen::MatrixXd plus;
    Eigen::MatrixXd minus;

    Index n() const { return plus.rows(); }
};

struct ProbTriple {
    double plus;
    double minus;
    double zero;
};

/// theta_ij = gamma_i + gamma_j + (eta_i + eta_j) * 1(psi_i == psi_j), per sign.
inline ThetaPair build_theta(const NodeParams& params, const Membership& membership) {
    if (!params.consistent()) throw std::invalid_argument("build_theta: parameter vectors differ in length");
    const Index n = params.n();
    if (membership.n() != n) throw std::invalid_argument("build_theta: membership size mismatch");

    ThetaPair theta{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n)};
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const bool same = membership[i] == membership[j];
            double tp = params.gamma_plus[i] + params.gamma_plus[j];
            double tm = params.gamma_minus[i] + params.gamma_minus[j];
            if (same) {
                tp += params.eta_plus[i] + params.eta_plus[j];
                tm += params.eta_minus[i] + params.eta_minus[j];
            }
            theta.plus(i, j) = tp;
            theta.minus(i, j) = tm;
        }
    }
    return theta;
}

/// Three-way softmax against the implicit zero log-odds of "no edge",
/// evaluated with max-subtraction so that |theta| up to ~700 is safe.
inline ProbTriple prob_triple(double theta_plus, double theta_minus) {
    if (!std::isfinite(theta_plus) || !std::isfinite(theta_minus))
        throw std::domain_error("prob_triple: non-finite log-odds");
    const double m = std::max({0.0, theta_plus, theta_minus});
    const double e0 = std::exp(-m);
    const double ep = std::exp(theta_plus - m);
    const double em = std::exp(theta_minus - m);
    const double denom = e0 + ep + em;
    return {ep / denom, em / denom, e0 / denom};
}

struct ProbMatrices {
    Eigen::MatrixXd plus;
    Eigen::MatrixXd minus;
};

inline ProbMatrices prob_matrices(const ThetaPair& theta) {
    const Index n = theta.n();
    if (theta.plus.cols() != n || theta.minus.rows() != n || theta.minus.cols() != n)
        throw std::invalid_argument("prob_matrices: shape mismatch");
    ProbMatrices p{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n)};
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const ProbTriple t = prob_triple(theta.plus(i, j), theta.minus(i, j));
            p.plus(i, j) = t.plus;
            p.minus(i, j) = t.minus;
        }
    }
    return p;
}

}  // namespace sbbm
