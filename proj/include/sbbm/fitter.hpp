#pragma once

// Alternating maximum-likelihood fit of the signed block beta-model:
// spectral initialization, spectral projected gradient (SPG) updates of the
// continuous parameters with labels fixed, discrete label updates with a
// sequential fallback, and BIC selection of the number of communities.

#include "sbbm/likelihood.hpp"
#include "sbbm/model.hpp"
#include "sbbm/projection.hpp"
#include "sbbm/spectral.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbbm {

struct SpgOptions {
    int max_inner_iters = 500;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    double lambda_min = 1e-10;
    double lambda_max = 1e10;
    double inner_tol = 1e-8;
    int nonmonotone_window = 10;
};

struct FitConfig {
    int K = 2;
    double alpha = 1e-6;  // relative objective change that stops the outer loop
    int t_max = 100;
    SpgOptions spg;
    double epsilon = 1e-6;
    std::uint64_t seed = 0;
    bool unsigned_start = true;  // also screen the edge-presence spectral start
    bool profile_moves = true;   // when labels stall, try node moves with a refit of the node's own parameters

    void validate() const {
        if (K < 1) throw std::invalid_argument("FitConfig: K must be >= 1");
        if (!(alpha > 0.0)) throw std::invalid_argument("FitConfig: alpha must be > 0");
        if (t_max < 1) throw std::invalid_argument("FitConfig: t_max must be >= 1");
        if (!(spg.armijo_c > 0.0 && spg.armijo_c < 1.0))
            throw std::invalid_argument("FitConfig: armijo_c must be in (0, 1)");
        if (!(spg.backtrack_factor > 0.0 && spg.backtrack_factor < 1.0))
            throw std::invalid_argument("FitConfig: backtrack_factor must be in (0, 1)");
        if (!(spg.lambda_min > 0.0 && spg.lambda_min <= spg.lambda_max))
            throw std::invalid_argument("FitConfig: need 0 < lambda_min <= lambda_max");
        if (spg.max_inner_iters < 1 || spg.nonmonotone_window < 1)
            throw std::invalid_argument("FitConfig: SPG iteration limits must be positive");
        if (!(epsilon >= 0.0)) throw std::invalid_argument("FitConfig: epsilon must be >= 0");
    }
};

struct SpgResult {
    NodeParams params;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

enum class CheckpointKind { init, spg, labels_batch, labels_sequential, labels_profile };

inline const char* to_string(CheckpointKind k) {
    switch (k) {
        case CheckpointKind::init: return "init";
        case CheckpointKind::spg: return "spg";
        case CheckpointKind::labels_batch: return "labels_batch";
        case CheckpointKind::labels_sequential: return "labels_sequential";
        case CheckpointKind::labels_profile: return "labels_profile";
    }
    return "?";
}

struct Checkpoint {
    CheckpointKind kind;
    double nll;
};

struct FitReport {
    int K = 1;
    NodeParams params;  // feasible representative
    /// K = 2 only: the Theta-identical representative with eta+[0] = eta-[0] = 0.
    std::optional<NodeParams> gauge_params;
    Membership membership;
    std::vector<Checkpoint> checkpoints;
    std::vector<double> nll_trace;  // objective at the end of each outer iteration, [0] = start
    int outer_iters = 0;
    int spg_iters = 0;
    bool converged = false;
    std::uint64_t seed = 0;
    std::string start;  // which starting labels the fit continued from
    double final_nll = 0.0;
    std::vector<std::string> diagnostics;
};

namespace detail {

inline SpgResult spg_flat(const Objective& obj, Eigen::VectorXd x, const Eigen::ArrayXi& labels,
                          const FitConfig& config) {
    const SpgOptions& opt = config.spg;
    project_flat(x, config.epsilon);

    Eigen::VectorXd g;
    double f = obj.evaluate(x, labels, &g);
    if (!std::isfinite(f)) throw std::domain_error("spg_solve: non-finite objective at the starting point");

    std::deque<double> history{f};
    double lambda = 1.0;
    Eigen::VectorXd best_x = x;
    double best_f = f;
    Eigen::VectorXd probe, d, xt, gt;
    SpgResult out;

    int k = 0;
    for (; k < opt.max_inner_iters; ++k) {
        probe = x - g;
        project_flat(probe, config.epsilon);
        if ((probe - x).lpNorm<Eigen::Infinity>() <= opt.inner_tol) {
            out.converged = true;
            break;
        }

        d = x - lambda * g;
        project_flat(d, config.epsilon);
        d -= x;
        const double gd = g.dot(d);
        const double fmax = *std::max_element(history.begin(), history.end());

        double step = 1.0;
        double ft = 0.0;
        bool accepted = false;
        while (step > 1e-30) {
            xt = x + step * d;
            project_flat(xt, config.epsilon);  // feasible in exact arithmetic; clears round-off
            ft = obj.evaluate(xt, labels, &gt);
            if (std::isfinite(ft) && ft <= fmax + opt.armijo_c * step * gd) {
                accepted = true;
                break;
            }
            step *= opt.backtrack_factor;
        }
        if (!accepted) break;  // no representable descent along d

        const Eigen::VectorXd s = xt - x;
        const double sy = s.dot(gt - g);
        lambda = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, opt.lambda_min, opt.lambda_max) : opt.lambda_max;

        x.swap(xt);
        g.swap(gt);
        f = ft;
        history.push_back(f);
        if (static_cast<int>(history.size()) > opt.nonmonotone_window) history.pop_front();
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }

    out.params = NodeParams::unflatten(best_x);
    out.objective = best_f;
    out.iterations = k;
    return out;
}

/// Index of the smallest cost; the current label wins ties, then the lowest index.
inline int argmin_label(const std::vector<double>& costs, int current) {
    int best = current;
    double best_cost = costs[static_cast<std::size_t>(current)];
    for (int k = 0; k < static_cast<int>(costs.size()); ++k) {
        if (costs[static_cast<std::size_t>(k)] < best_cost) {
            best_cost = costs[static_cast<std::size_t>(k)];
            best = k;
        }
    }
    return best;
}

inline Eigen::ArrayXi batch_labels(const Objective& obj, const Eigen::VectorXd& x, const Eigen::ArrayXi& labels,
                                   int K) {
    Eigen::ArrayXi next = labels;
    for (Index i = 0; i < labels.size(); ++i) next[i] = argmin_label(obj.label_costs(x, labels, K, i), labels[i]);
    return next;
}

/// Sweeps i = 0..n-1 repeatedly, moving a node only when that strictly lowers
/// the objective, until a full sweep makes no move.
inline Eigen::ArrayXi sequential_labels(const Objective& obj, const Eigen::VectorXd& x, Eigen::ArrayXi labels,
                                        int K, int max_sweeps = 1000) {
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool moved = false;
        for (Index i = 0; i < labels.size(); ++i) {
            const std::vector<double> costs = obj.label_costs(x, labels, K, i);
            const int cur = labels[i];
            const int cand = argmin_label(costs, cur);
            const double cur_cost = costs[static_cast<std::size_t>(cur)];
            if (cand != cur && costs[static_cast<std::size_t>(cand)] < cur_cost - 1e-13 * std::abs(cur_cost)) {
                labels[i] = cand;
                moved = true;
            }
        }
        if (!moved) break;
    }
    return labels;
}

/// One in-order sweep where node i may move to label k together with a refit
/// of its own four parameters; a move is taken only when it strictly lowers
/// the loss of node i's pairs, and hence the objective.
inline bool profile_sweep(const Objective& obj, Eigen::VectorXd& x, Eigen::ArrayXi& labels, int K, double epsilon) {
    const Index n = labels.size();
    bool moved = false;
    for (Index i = 0; i < n; ++i) {
        const auto prof = obj.profile_label_costs(x, labels, K, i, epsilon);
        const double current = obj.node_cost(x, labels, i);
        int best = labels[i];
        double best_cost = prof[static_cast<std::size_t>(best)].cost;
        for (int k = 0; k < K; ++k)
            if (prof[static_cast<std::size_t>(k)].cost < best_cost) {
                best_cost = prof[static_cast<std::size_t>(k)].cost;
                best = k;
            }
        if (best != labels[i] && best_cost < current - 1e-12 * (1.0 + std::abs(current))) {
            const Eigen::Vector4d& q = prof[static_cast<std::size_t>(best)].q;
            for (int c = 0; c < 4; ++c) x[c * n + i] = q[c];
            labels[i] = best;
            moved = true;
        }
    }
    return moved;
}

inline Membership to_membership(const Eigen::ArrayXi& labels, int K) {
    return Membership(std::vector<int>(labels.data(), labels.data() + labels.size()), K);
}

inline bool has_empty_community(const Eigen::ArrayXi& labels, int K) {
    std::vector<bool> seen(static_cast<std::size_t>(K), false);
    for (Index i = 0; i < labels.size(); ++i) seen[static_cast<std::size_t>(labels[i])] = true;
    return std::find(seen.begin(), seen.end(), false) != seen.end();
}

}  // namespace detail

/// Projected gradient with Barzilai-Borwein steps and non-monotone Armijo
/// backtracking, labels held fixed. Returns the best iterate visited, so the
/// objective never exceeds that of params0.
inline SpgResult spg_solve(const SignedAdjacency& adjacency, const NodeParams& params0,
                           const Membership& membership, const FitConfig& config) {
    config.validate();
    if (!params0.consistent() || params0.n() != adjacency.n() || membership.n() != adjacency.n())
        throw std::invalid_argument("spg_solve: dimension mismatch");
    const Objective obj(adjacency);
    return detail::spg_flat(obj, params0.flatten(), membership.as_array(), config);
}

/// Every node moves to its best label given the previous labels of all others.
inline Membership label_update_batch(const SignedAdjacency& adjacency, const NodeParams& params,
                                     const Membership& membership) {
    if (params.n() != adjacency.n() || membership.n() != adjacency.n())
        throw std::invalid_argument("label_update_batch: dimension mismatch");
    const Objective obj(adjacency);
    return detail::to_membership(
        detail::batch_labels(obj, params.flatten(), membership.as_array(), membership.K()), membership.K());
}

/// In-order sweeps against the current labels; never increases the objective
/// and ends 1-swap stable.
inline Membership label_update_sequential(const SignedAdjacency& adjacency, const NodeParams& params,
                                          const Membership& membership) {
    if (params.n() != adjacency.n() || membership.n() != adjacency.n())
        throw std::invalid_argument("label_update_sequential: dimension mismatch");
    const Objective obj(adjacency);
    return detail::to_membership(
        detail::sequential_labels(obj, params.flatten(), membership.as_array(), membership.K()), membership.K());
}

/// Alternating fit. Without `initial`, two spectral starts are screened (the
/// signed-Laplacian labels and, when config.unsigned_start is set, the labels
/// from edge presence alone): each gets one SPG solve and the fit continues
/// from the one with the lower objective.
inline FitReport fit(const SignedAdjacency& adjacency, const FitConfig& config,
                     const std::optional<Membership>& initial = std::nullopt) {
    config.validate();
    const Index n = adjacency.n();
    const int K = config.K;
    if (n < 1) throw std::invalid_argument("fit: empty network");
    if (K > n) throw std::invalid_argument("fit: K exceeds the number of nodes");
    if (initial && (initial->n() != n || initial->K() != K))
        throw std::invalid_argument("fit: initial membership does not match n or K");

    const Objective obj(adjacency);
    FitReport report;
    report.K = K;
    report.seed = config.seed;

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4 * n);
    project_flat(x0, config.epsilon);

    struct Start {
        std::string name;
        Eigen::ArrayXi labels;
    };
    std::vector<Start> starts;
    if (initial) {
        starts.push_back({"given", initial->as_array()});
    } else {
        starts.push_back({to_string(SpectralVariant::signed_edges), spectral_init(adjacency, K, config.seed).as_array()});
        if (config.unsigned_start && K > 1) {
            Eigen::ArrayXi alt =
                spectral_labels(adjacency, K, config.seed, SpectralVariant::unsigned_edges).as_array();
            if ((alt != starts.front().labels).any())
                starts.push_back({to_string(SpectralVariant::unsigned_edges), std::move(alt)});
        }
    }

    // First SPG solve for every start; keep the best (earlier start on ties).
    std::size_t chosen = 0;
    std::optional<SpgResult> first;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        SpgResult r = detail::spg_flat(obj, x0, starts[s].labels, config);
        report.spg_iters += r.iterations;
        if (!first || r.objective < first->objective) {
            first = std::move(r);
            chosen = s;
        }
    }
    Eigen::ArrayXi labels = starts[chosen].labels;
    Eigen::VectorXd x = x0;
    report.start = starts[chosen].name;

    double f_prev = obj.value(x, labels);
    report.checkpoints.push_back({CheckpointKind::init, f_prev});
    report.nll_trace.push_back(f_prev);
    bool empty_logged = false;

    if (K == 1) {
        report.checkpoints.push_back({CheckpointKind::spg, first->objective});
        report.nll_trace.push_back(first->objective);
        report.params = std::move(first->params);
        report.membership = detail::to_membership(labels, K);
        report.outer_iters = 1;
        report.converged = first->converged;
        report.final_nll = first->objective;
        return report;
    }

    for (int t = 1; t <= config.t_max; ++t) {
        SpgResult r;
        if (t == 1) {
            r = std::move(*first);
        } else {
            r = detail::spg_flat(obj, x, labels, config);
            report.spg_iters += r.iterations;
        }
        x = r.params.flatten();
        const double f_spg = r.objective;
        report.checkpoints.push_back({CheckpointKind::spg, f_spg});

        const Eigen::ArrayXi before = labels;
        const Eigen::ArrayXi batch = detail::batch_labels(obj, x, labels, K);
        const double f_batch = obj.value(x, batch);
        double f = f_spg;
        if (f_batch < f_spg) {
            labels = batch;
            f = f_batch;
            report.checkpoints.push_back({CheckpointKind::labels_batch, f});
        } else {
            const Eigen::ArrayXi seq = detail::sequential_labels(obj, x, labels, K);
            if ((seq != labels).any()) {
                labels = seq;
                f = obj.value(x, labels);
            }
            report.checkpoints.push_back({CheckpointKind::labels_sequential, f});
        }
        bool escaped = false;
        if (config.profile_moves && (labels == before).all() &&
            detail::profile_sweep(obj, x, labels, K, config.epsilon)) {
            f = obj.value(x, labels);
            report.checkpoints.push_back({CheckpointKind::labels_profile, f});
            escaped = true;
        }
        if (!empty_logged && detail::has_empty_community(labels, K)) {
            report.diagnostics.push_back("a community became empty at outer iteration " + std::to_string(t));
            empty_logged = true;
        }

        report.nll_trace.push_back(f);
        report.outer_iters = t;
        const double rel = std::abs(f - f_prev) / std::max(std::abs(f_prev), std::numeric_limits<double>::min());
        f_prev = f;
        if (rel < config.alpha && !escaped) {
            report.converged = true;
            break;
        }
    }

    // A batch step accepted on the last iteration need not be 1-swap stable.
    const Eigen::ArrayXi polished = detail::sequential_labels(obj, x, labels, K);
    if ((polished != labels).any()) {
        labels = polished;
        f_prev = obj.value(x, labels);
        report.checkpoints.push_back({CheckpointKind::labels_sequential, f_prev});
        report.nll_trace.back() = f_prev;
    }

    report.params = NodeParams::unflatten(x);
    report.membership = detail::to_membership(labels, K);
    report.final_nll = f_prev;
    if (K == 2) report.gauge_params = gauge_fix_k2(report.params, report.membership);
    if (!report.converged)
        report.diagnostics.push_back("outer loop hit t_max = " + std::to_string(config.t_max));
    return report;
}

/// Free continuous parameters: 4n, minus the two gauge directions when K = 2.
inline double bic_degrees_of_freedom(Index n, int K) { return 4.0 * static_cast<double>(n) - (K == 2 ? 2.0 : 0.0); }

/// BIC = 2 * #pairs * L + d_K * log(#pairs); L is the normalized objective.
inline double bic_value(double nll, std::int64_t pair_count, Index n, int K) {
    const double pc = static_cast<double>(pair_count);
    return 2.0 * pc * nll + bic_degrees_of_freedom(n, K) * std::log(pc);
}

struct BicEntry {
    int K;
    std::optional<FitReport> report;
    double bic = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct BicSelection {
    int best_K = 0;
    std::vector<BicEntry> entries;

    const BicEntry& best() const {
        for (const auto& e : entries)
            if (e.K == best_K) return e;
        throw std::logic_error("BicSelection: no entry for best_K");
    }
};

inline BicSelection select_k_bic(const SignedAdjacency& adjacency, const std::vector<int>& k_candidates,
                                 const FitConfig& config) {
    if (k_candidates.empty()) throw std::invalid_argument("select_k_bic: empty candidate list");
    BicSelection sel;
    double best = std::numeric_limits<double>::infinity();
    for (int K : k_candidates) {
        BicEntry e{K, std::nullopt, std::numeric_limits<double>::quiet_NaN(), {}};
        try {
            FitConfig c = config;
            c.K = K;
            FitReport r = fit(adjacency, c);
            e.bic = bic_value(r.final_nll, adjacency.pair_count(), adjacency.n(), K);
            e.report = std::move(r);
            if (e.bic < best) {
                best = e.bic;
                sel.best_K = K;
            }
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        sel.entries.push_back(std::move(e));
    }
    if (sel.best_K == 0) throw std::runtime_error("select_k_bic: every candidate fit failed");
    return sel;
}

}  // namespace sbbm
