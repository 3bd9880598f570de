#pragma once

// Signed-Laplacian spectral clustering: embed nodes in the eigenvectors of the
// symmetrically normalized signed Laplacian I - D^{-1/2} A D^{-1/2}
// (D = diag of absolute degrees) with the K smallest eigenvalues, then run
// seeded k-means++ / Lloyd with restarts. Used both to initialize the fitter
// and as the SLP benchmark baseline.
//
// The unnormalized D - A is kept for reference; on sparse graphs with
// heterogeneous degrees its bottom eigenvectors localize on near-isolated
// nodes and the clustering degenerates to one giant block.

#include "sbbm/model.hpp"
#include "sbbm/rng.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sbbm {

struct KMeansResult {
    std::vector<int> labels;
    double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeds; the best of `restarts` runs wins,
/// ties going to the earlier restart.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, int K, std::uint64_t seed, int restarts = 10,
                           int max_iters = 300) {
    const Index n = points.rows();
    if (K < 1 || K > n) throw std::invalid_argument("kmeans: need 1 <= K <= n");

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();

    for (int r = 0; r < restarts; ++r) {
        RandomStream rng(seed, StreamPurpose::kmeans, static_cast<std::uint64_t>(r));
        Eigen::MatrixXd centers(K, points.cols());

        // k-means++ seeding
        centers.row(0) = points.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
        Eigen::VectorXd d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
        for (int k = 1; k < K; ++k) {
            const double total = d2.sum();
            Index pick = 0;
            if (total > 0.0) {
                double target = rng.uniform() * total;
                for (pick = 0; pick + 1 < n; ++pick) {
                    target -= d2[pick];
                    if (target < 0.0) break;
                }
            } else {
                pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
            }
            centers.row(k) = points.row(pick);
            d2 = d2.cwiseMin((points.rowwise() - centers.row(k)).rowwise().squaredNorm());
        }

        std::vector<int> labels(static_cast<std::size_t>(n), -1);
        double inertia = 0.0;
        for (int it = 0; it < max_iters; ++it) {
            bool changed = false;
            inertia = 0.0;
            for (Index i = 0; i < n; ++i) {
                int arg = 0;
                double bestd = std::numeric_limits<double>::infinity();
                for (int k = 0; k < K; ++k) {
                    const double d = (points.row(i) - centers.row(k)).squaredNorm();
                    if (d < bestd) {
                        bestd = d;
                        arg = k;
                    }
                }
                inertia += bestd;
                if (labels[static_cast<std::size_t>(i)] != arg) {
                    labels[static_cast<std::size_t>(i)] = arg;
                    changed = true;
                }
            }
            if (!changed) break;

            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, points.cols());
            std::vector<Index> counts(static_cast<std::size_t>(K), 0);
            for (Index i = 0; i < n; ++i) {
                sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
                ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
            }
            for (int k = 0; k < K; ++k) {
                if (counts[static_cast<std::size_t>(k)] > 0) {
                    centers.row(k) = sums.row(k) / static_cast<double>(counts[static_cast<std::size_t>(k)]);
                } else {
                    // empty cluster: move it onto the point farthest from its center
                    Index far = 0;
                    double fard = -1.0;
                    for (Index i = 0; i < n; ++i) {
                        const double d =
                            (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
                        if (d > fard) {
                            fard = d;
                            far = i;
                        }
                    }
                    centers.row(k) = points.row(far);
                }
            }
        }

        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
        }
    }
    return best;
}

/// Renames labels in order of first appearance (node 0 gets label 0).
inline Membership canonical_relabel(const Membership& m) {
    std::vector<int> map(static_cast<std::size_t>(m.K()), -1);
    std::vector<int> out(static_cast<std::size_t>(m.n()));
    int next = 0;
    for (Index i = 0; i < m.n(); ++i) {
        int& slot = map[static_cast<std::size_t>(m[i])];
        if (slot < 0) slot = next++;
        out[static_cast<std::size_t>(i)] = slot;
    }
    return Membership(std::move(out), m.K());
}

inline Eigen::MatrixXd signed_laplacian(const SignedAdjacency& adjacency) {
    const Eigen::MatrixXd a = adjacency.entries().cast<double>();
    Eigen::MatrixXd lap = -a;
    lap.diagonal() += a.cwiseAbs().rowwise().sum();
    return lap;
}

/// I - D^{-1/2} W D^{-1/2}; rows and columns of isolated nodes are those of I.
inline Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& w) {
    const Eigen::VectorXd inv_sqrt =
        w.cwiseAbs().rowwise().sum().unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
    Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
    lap.diagonal().array() += 1.0;
    return lap;
}

inline Eigen::MatrixXd normalized_signed_laplacian(const SignedAdjacency& adjacency) {
    return normalized_laplacian(adjacency.entries().cast<double>());
}

enum class SpectralVariant {
    signed_edges,    // W = A
    unsigned_edges,  // W = |A|, edge presence only
};

inline const char* to_string(SpectralVariant v) {
    return v == SpectralVariant::signed_edges ? "signed_spectral" : "unsigned_spectral";
}

inline Membership spectral_labels(const SignedAdjacency& adjacency, int K, std::uint64_t seed,
                                  SpectralVariant variant, int restarts = 10) {
    const Index n = adjacency.n();
    if (K < 1) throw std::invalid_argument("spectral_init: K must be >= 1");
    if (K > n) throw std::invalid_argument("spectral_init: K exceeds the number of nodes");
    if (K == 1 || adjacency.entries().cwiseAbs().cast<int>().sum() == 0)
        return Membership(std::vector<int>(static_cast<std::size_t>(n), 0), K);

    Eigen::MatrixXd w = adjacency.entries().cast<double>();
    if (variant == SpectralVariant::unsigned_edges) w = w.cwiseAbs();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalized_laplacian(w));
    if (eig.info() != Eigen::Success) throw std::runtime_error("spectral_init: eigendecomposition failed");
    const Eigen::MatrixXd embedding = eig.eigenvectors().leftCols(K);
    KMeansResult km = kmeans(embedding, K, seed, restarts);
    return canonical_relabel(Membership(std::move(km.labels), K));
}

/// Signed-Laplacian clustering; the fitter's default start and the SLP baseline.
inline Membership spectral_init(const SignedAdjacency& adjacency, int K, std::uint64_t seed = 0,
                                int restarts = 10) {
    return spectral_labels(adjacency, K, seed, SpectralVariant::signed_edges, restarts);
}

}  // namespace sbbm
