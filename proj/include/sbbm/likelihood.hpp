#pragma once

// Normalized negative log-likelihood of the signed block beta-model and its
// gradient with respect to (gamma+, eta+, gamma-, eta-).

#include "sbbm/model.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sbbm {

struct NllValue {
    double value;
    std::int64_t pair_count;
};

/// Same layout as NodeParams.
struct Gradient {
    Eigen::VectorXd gamma_plus;
    Eigen::VectorXd eta_plus;
    Eigen::VectorXd gamma_minus;
    Eigen::VectorXd eta_minus;

    static Gradient unflatten(const Eigen::VectorXd& g) {
        const Index m = g.size() / 4;
        return {g.segment(0, m), g.segment(m, m), g.segment(2 * m, m), g.segment(3 * m, m)};
    }
};

namespace detail {

/// -a+ t+ - a- t- + log(1 + e^t+ + e^t-), with the log-sum-exp shifted by max(0, t+, t-).
inline double pair_loss(int a, double tp, double tm) {
    const double m = std::max({0.0, tp, tm});
    const double lse = m + std::log(std::exp(-m) + std::exp(tp - m) + std::exp(tm - m));
    return lse - (a == 1 ? tp : 0.0) - (a == -1 ? tm : 0.0);
}

inline double normalizer(std::int64_t pair_count) {
    if (pair_count <= 0) throw std::domain_error("likelihood: network has no pairs to sum over");
    return 1.0 / static_cast<double>(pair_count);
}

}  // namespace detail

/// L(Theta; A) = (1/#pairs) * sum over pairs of the per-pair loss; the pair
/// set is i < j, plus i == j when the diagonal is included.
inline NllValue nll(const SignedAdjacency& adjacency, const ThetaPair& theta) {
    const Index n = adjacency.n();
    if (theta.plus.rows() != n || theta.plus.cols() != n || theta.minus.rows() != n ||
        theta.minus.cols() != n)
        throw std::invalid_argument("nll: theta shape does not match adjacency");
    if (!theta.plus.allFinite() || !theta.minus.allFinite())
        throw std::domain_error("nll: non-finite theta");

    const std::int64_t pairs = adjacency.pair_count();
    const double c = detail::normalizer(pairs);
    const Index diag_offset = adjacency.includes_diagonal() ? 0 : 1;
    double total = 0.0;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i + diag_offset <= j; ++i)
            total += detail::pair_loss(adjacency(i, j), theta.plus(i, j), theta.minus(i, j));
    return {c * total, pairs};
}

inline NllValue nll_of_params(const SignedAdjacency& adjacency, const NodeParams& params,
                              const Membership& membership) {
    return nll(adjacency, build_theta(params, membership));
}

/// Objective evaluator bound to one network. Works on the flat parameter
/// layout [gamma+; eta+; gamma-; eta-] and keeps the indicator matrices a+
/// and a- in dense double form so that each column is a contiguous segment.
/// Column sums are accumulated in a fixed order, so results are bit-identical
/// run to run.
class Objective {
public:
    explicit Objective(const SignedAdjacency& adjacency)
        : n_(adjacency.n()),
          include_diagonal_(adjacency.includes_diagonal()),
          pair_count_(adjacency.pair_count()),
          a_plus_((adjacency.entries().array() == 1).cast<double>()),
          a_minus_((adjacency.entries().array() == -1).cast<double>()),
          signs_(adjacency.entries()) {
        for (Index j = 0; j < n_; ++j)
            for (Index i = 0; i < j; ++i)
                if (signs_(i, j) != 0) edges_.push_back({i, j, signs_(i, j)});
    }

    Index n() const { return n_; }
    std::int64_t pair_count() const { return pair_count_; }
    double normalizer() const { return detail::normalizer(pair_count_); }

    double value(const Eigen::VectorXd& x, const Eigen::ArrayXi& labels) const {
        return evaluate(x, labels, nullptr);
    }

    /// Objective value; when grad is non-null it receives dL/dx.
    double evaluate(const Eigen::VectorXd& x, const Eigen::ArrayXi& labels, Eigen::VectorXd* grad) const {
        check_shapes(x, labels);
        const Index n = n_;
        const auto gp = x.segment(0, n).array();
        const auto ep = x.segment(n, n).array();
        const auto gm = x.segment(2 * n, n).array();
        const auto em = x.segment(3 * n, n).array();
        if (grad) grad->setZero(4 * n);

        // With moderate parameters e^theta factors into per-node exponentials,
        // so the pair loop needs one log (and one division for the gradient)
        // per pair and no exp.
        const bool factored = std::max((gp.abs() + ep.abs()).maxCoeff(), (gm.abs() + em.abs()).maxCoeff()) <=
                              kFactoredBound;
        double total = factored ? log_partition_factored(x, labels, grad) : log_partition_stable(x, labels, grad);

        // Linear part -sum a+ theta+ - a- theta- over the off-diagonal edges.
        for (const auto& e : edges_) {
            const bool within = labels[e.i] == labels[e.j];
            const Index off = e.sign == 1 ? 0 : 2 * n;
            total -= x[off + e.i] + x[off + e.j] + (within ? x[off + n + e.i] + x[off + n + e.j] : 0.0);
            if (grad) {
                (*grad)[off + e.i] -= 1.0;
                (*grad)[off + e.j] -= 1.0;
                if (within) {
                    (*grad)[off + n + e.i] -= 1.0;
                    (*grad)[off + n + e.j] -= 1.0;
                }
            }
        }

        if (include_diagonal_) {
            for (Index i = 0; i < n; ++i) {
                const double dtp = 2.0 * (gp[i] + ep[i]);
                const double dtm = 2.0 * (gm[i] + em[i]);
                const int a = signs_(i, i);
                total += detail::pair_loss(a, dtp, dtm);
                if (grad) {
                    const ProbTriple p = prob_triple(dtp, dtm);
                    const double rpl = 2.0 * (p.plus - (a == 1 ? 1.0 : 0.0));
                    const double rmi = 2.0 * (p.minus - (a == -1 ? 1.0 : 0.0));
                    (*grad)[i] += rpl;
                    (*grad)[n + i] += rpl;
                    (*grad)[2 * n + i] += rmi;
                    (*grad)[3 * n + i] += rmi;
                }
            }
        }

        const double c = normalizer();
        if (grad) *grad *= c;
        return c * total;
    }

    /// Unnormalized sum of the off-diagonal pair losses of node i for each
    /// candidate label, with every other node keeping its label. The diagonal
    /// term does not depend on the label and is left out; differences between
    /// entries times normalizer() are exact objective differences.
    std::vector<double> label_costs(const Eigen::VectorXd& x, const Eigen::ArrayXi& labels, int K,
                                    Index i) const {
        check_shapes(x, labels);
        const Index n = n_;
        const auto gp = x.segment(0, n).array();
        const auto ep = x.segment(n, n).array();
        const auto gm = x.segment(2 * n, n).array();
        const auto em = x.segment(3 * n, n).array();
        const auto apc = a_plus_.col(i).array();
        const auto amc = a_minus_.col(i).array();

        const Eigen::ArrayXd cross_p = gp[i] + gp;
        const Eigen::ArrayXd cross_m = gm[i] + gm;
        const Eigen::ArrayXd within_p = cross_p + ep[i] + ep;
        const Eigen::ArrayXd within_m = cross_m + em[i] + em;
        Eigen::ArrayXd cross = losses(cross_p, cross_m, apc, amc);
        Eigen::ArrayXd gain = losses(within_p, within_m, apc, amc) - cross;
        cross[i] = 0.0;
        gain[i] = 0.0;

        std::vector<double> per_label(static_cast<std::size_t>(K), 0.0);
        for (Index j = 0; j < n; ++j) per_label[static_cast<std::size_t>(labels[j])] += gain[j];
        const double base = cross.sum();
        for (double& v : per_label) v += base;
        return per_label;
    }

    /// Unnormalized loss of every pair that involves node i, diagonal included.
    double node_cost(const Eigen::VectorXd& x, const Eigen::ArrayXi& labels, Index i) const {
        const int K = labels.maxCoeff() + 1;
        double cost = label_costs(x, labels, K, i)[static_cast<std::size_t>(labels[i])];
        if (include_diagonal_) {
            const Index n = n_;
            cost += detail::pair_loss(signs_(i, i), 2.0 * (x[i] + x[n + i]), 2.0 * (x[2 * n + i] + x[3 * n + i]));
        }
        return cost;
    }

    struct NodeProfile {
        double cost;         // unnormalized loss of the pairs touching node i
        Eigen::Vector4d q;   // node i's (gamma+, eta+, gamma-, eta-) at that loss
    };

    /// For each candidate label, the loss of node i's pairs after re-fitting
    /// node i's own four parameters under the balance constraints (every other
    /// node fixed). Within-community pairs only see beta_i = gamma_i + eta_i and
    /// cross pairs only gamma_i, so the refit splits into two independent
    /// two-variable problems with one half-plane constraint each.
    std::vector<NodeProfile> profile_label_costs(const Eigen::VectorXd& x, const Eigen::ArrayXi& labels, int K,
                                                 Index i, double epsilon) const {
        check_shapes(x, labels);
        const Index n = n_;
        const auto gp = x.segment(0, n).array();
        const auto ep = x.segment(n, n).array();
        const auto gm = x.segment(2 * n, n).array();
        const auto em = x.segment(3 * n, n).array();

        std::vector<NodeProfile> out;
        out.reserve(static_cast<std::size_t>(K));
        PartnerSet within, cross;
        for (int k = 0; k < K; ++k) {
            within.clear();
            cross.clear();
            for (Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double ap = a_plus_(j, i), am = a_minus_(j, i);
                if (labels[j] == k)
                    within.push(gp[j] + ep[j], gm[j] + em[j], ap, am);
                else
                    cross.push(gp[j], gm[j], ap, am);
            }
            std::optional<int> diag;
            if (include_diagonal_) diag = signs_(i, i);
            // start from node i's current values
            const auto w = solve_intercepts(within, +1, epsilon, gp[i] + ep[i], gm[i] + em[i], diag);
            const auto c = solve_intercepts(cross, -1, epsilon, gp[i], gm[i], std::nullopt);
            NodeProfile prof;
            prof.cost = w.cost + c.cost;
            prof.q = Eigen::Vector4d(c.plus, w.plus - c.plus, c.minus, w.minus - c.minus);
            out.push_back(prof);
        }
        return out;
    }

private:
    struct PartnerSet {
        std::vector<double> off_p, off_m, a_p, a_m;
        void clear() {
            off_p.clear();
            off_m.clear();
            a_p.clear();
            a_m.clear();
        }
        void push(double op, double om, double ap, double am) {
            off_p.push_back(op);
            off_m.push_back(om);
            a_p.push_back(ap);
            a_m.push_back(am);
        }
    };

    struct InterceptFit {
        double plus, minus, cost;
    };

    /// min over (p, m) of sum_j loss(a_j, p + off+_j, m + off-_j) subject to
    /// sign * (p - m) >= eps, plus the diagonal pair loss(a_ii, 2p, 2m) when
    /// given. Projected Newton in u = sign * (p - m) - eps >= 0, v = m, with
    /// intercepts kept in a box so empty sign classes cannot run off to -inf.
    static InterceptFit solve_intercepts(const PartnerSet& set, int sign, double eps, double p0, double m0,
                                         std::optional<int> diag) {
        constexpr double kBox = 40.0;
        const auto cnt = static_cast<Index>(set.off_p.size());
        if (cnt == 0 && !diag) return {p0, m0, 0.0};
        const Eigen::Map<const Eigen::ArrayXd> op(set.off_p.data(), cnt), om(set.off_m.data(), cnt);
        const Eigen::Map<const Eigen::ArrayXd> ap(set.a_p.data(), cnt), am(set.a_m.data(), cnt);
        const double sg = static_cast<double>(sign);

        struct Eval {
            double f, gu, gv, huu, huv, hvv;
        };
        auto eval = [&](double u, double v, bool second) {
            const double p = v + sg * (u + eps);
            const double m = v;
            const Eigen::ArrayXd tp = p + op, tm = m + om;
            const Eigen::ArrayXd mx = tp.max(tm).max(0.0);
            const Eigen::ArrayXd e0 = (-mx).exp(), e1 = (tp - mx).exp(), e2 = (tm - mx).exp();
            const Eigen::ArrayXd den = e0 + e1 + e2;
            Eval r{};
            r.f = (mx + den.log() - ap * tp - am * tm).sum();
            const Eigen::ArrayXd pp = e1 / den, pm = e2 / den;
            double gpl = (pp - ap).sum(), gmi = (pm - am).sum();
            double hpp = 0, hmm = 0, hpm = 0;
            if (second) {
                hpp = (pp * (1.0 - pp)).sum();
                hmm = (pm * (1.0 - pm)).sum();
                hpm = -(pp * pm).sum();
            }
            if (diag) {
                const ProbTriple t = prob_triple(2.0 * p, 2.0 * m);
                r.f += detail::pair_loss(*diag, 2.0 * p, 2.0 * m);
                gpl += 2.0 * (t.plus - (*diag == 1 ? 1.0 : 0.0));
                gmi += 2.0 * (t.minus - (*diag == -1 ? 1.0 : 0.0));
                hpp += 4.0 * t.plus * (1.0 - t.plus);
                hmm += 4.0 * t.minus * (1.0 - t.minus);
                hpm -= 4.0 * t.plus * t.minus;
            }
            r.gu = sg * gpl;
            r.gv = gpl + gmi;
            r.huu = hpp;
            r.huv = sg * (hpp + hpm);
            r.hvv = hpp + 2.0 * hpm + hmm;
            return r;
        };
        auto clampv = [&](double v) { return std::clamp(v, -kBox, kBox); };
        auto clampu = [&](double u) { return std::clamp(u, 0.0, 2.0 * kBox); };

        double u = clampu(sg * (p0 - m0) - eps);
        double v = clampv(m0);
        Eval cur = eval(u, v, true);
        for (int it = 0; it < 60; ++it) {
            double du, dv;
            const bool pinned = u <= 0.0 && cur.gu > 0.0;
            const double ridge = 1e-12 * (1.0 + cur.huu + cur.hvv);
            if (pinned) {
                du = 0.0;
                dv = -cur.gv / (cur.hvv + ridge);
            } else {
                const double a = cur.huu + ridge, b = cur.huv, c = cur.hvv + ridge;
                const double det = a * c - b * b;
                if (det > 0.0) {
                    du = -(c * cur.gu - b * cur.gv) / det;
                    dv = -(a * cur.gv - b * cur.gu) / det;
                } else {
                    du = -cur.gu / a;
                    dv = -cur.gv / c;
                }
            }
            double t = 1.0;
            bool moved = false;
            for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
                const double un = clampu(u + t * du), vn = clampv(v + t * dv);
                const Eval nxt = eval(un, vn, false);
                const double decrease = cur.gu * (un - u) + cur.gv * (vn - v);
                if (nxt.f <= cur.f + 1e-4 * std::min(decrease, 0.0) && nxt.f <= cur.f) {
                    const double step = std::max(std::abs(un - u), std::abs(vn - v));
                    u = un;
                    v = vn;
                    cur = eval(u, v, true);
                    moved = step > 1e-10;
                    break;
                }
            }
            if (!moved) break;
        }
        return {v + sg * (u + eps), v, cur.f};
    }

    static constexpr double kFactoredBound = 300.0;

    struct Edge {
        Index i, j;
        int sign;
    };

    /// sum over i < j of log(1 + e^theta+ + e^theta-), adding the partial
    /// derivatives into grad. Nodes are visited grouped by label so that each
    /// row splits into one contiguous within-community run and one cross run.
    double log_partition_factored(const Eigen::VectorXd& x, const Eigen::ArrayXi& labels,
                                  Eigen::VectorXd* grad) const {
        const Index n = n_;
        const int K = labels.maxCoeff() + 1;
        std::vector<Index> block_end(static_cast<std::size_t>(K) + 1, 0);
        for (Index i = 0; i < n; ++i) ++block_end[static_cast<std::size_t>(labels[i]) + 1];
        for (int k = 0; k < K; ++k) block_end[static_cast<std::size_t>(k) + 1] += block_end[static_cast<std::size_t>(k)];
        std::vector<Index> next(block_end.begin(), block_end.end() - 1);
        std::vector<Index> order(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(next[static_cast<std::size_t>(labels[i])]++)] = i;

        Eigen::ArrayXd bp(n), bm(n), cp(n), cm(n);  // e^beta+, e^beta-, e^gamma+, e^gamma- in visiting order
        for (Index a = 0; a < n; ++a) {
            const Index i = order[static_cast<std::size_t>(a)];
            cp[a] = x[i];
            bp[a] = x[i] + x[n + i];
            cm[a] = x[2 * n + i];
            bm[a] = x[2 * n + i] + x[3 * n + i];
        }
        bp = bp.exp();
        bm = bm.exp();
        cp = cp.exp();
        cm = cm.exp();

        Eigen::ArrayXd tot_p, tot_m, win_p, win_m;
        if (grad) {
            tot_p.setZero(n);
            tot_m.setZero(n);
            win_p.setZero(n);
            win_m.setZero(n);
        }
        Eigen::ArrayXd den(n), rp(n), rm(n);
        double total = 0.0;

        auto run = [&](Index a, Index lo, Index len, const Eigen::ArrayXd& ep, const Eigen::ArrayXd& em,
                       bool within) {
            if (len <= 0) return;
            auto D = den.head(len);
            D = 1.0 + ep[a] * ep.segment(lo, len) + em[a] * em.segment(lo, len);
            total += sum_log(D);
            if (!grad) return;
            auto RP = rp.head(len);
            auto RM = rm.head(len);
            D = D.inverse();
            RP = ep[a] * ep.segment(lo, len) * D;
            RM = em[a] * em.segment(lo, len) * D;
            const double sp = RP.sum(), sm = RM.sum();
            tot_p[a] += sp;
            tot_m[a] += sm;
            tot_p.segment(lo, len) += RP;
            tot_m.segment(lo, len) += RM;
            if (within) {
                win_p[a] += sp;
                win_m[a] += sm;
                win_p.segment(lo, len) += RP;
                win_m.segment(lo, len) += RM;
            }
        };

        for (int k = 0; k < K; ++k) {
            const Index hi = block_end[static_cast<std::size_t>(k) + 1];
            for (Index a = block_end[static_cast<std::size_t>(k)]; a < hi; ++a) {
                run(a, a + 1, hi - a - 1, bp, bm, true);
                run(a, hi, n - hi, cp, cm, false);
            }
        }

        if (grad) {
            auto g = grad->array();
            for (Index a = 0; a < n; ++a) {
                const Index i = order[static_cast<std::size_t>(a)];
                g[i] += tot_p[a];
                g[n + i] += win_p[a];
                g[2 * n + i] += tot_m[a];
                g[3 * n + i] += win_m[a];
            }
        }
        return total;
    }

    /// sum(log(d)) for d >= 1, multiplying up to four entries before each log
    /// when that cannot overflow; logs dominate the pair loop.
    static double sum_log(const Eigen::Ref<const Eigen::ArrayXd>& d) {
        const Index len = d.size();
        const double dmax = d.maxCoeff();
        if (len >= 8 && dmax < 1e75) {
            const Index q = len / 4;
            const double head =
                (d.segment(0, q) * d.segment(q, q) * d.segment(2 * q, q) * d.segment(3 * q, q)).log().sum();
            return head + d.tail(len - 4 * q).log().sum();
        }
        if (len >= 4 && dmax < 1e150) {
            const Index h = len / 2;
            return (d.segment(0, h) * d.segment(h, h)).log().sum() + d.tail(len - 2 * h).log().sum();
        }
        return d.log().sum();
    }

    /// Same sum with a per-pair max shift; used when parameters are large.
    double log_partition_stable(const Eigen::VectorXd& x, const Eigen::ArrayXi& labels,
                                Eigen::VectorXd* grad) const {
        const Index n = n_;
        const auto gp = x.segment(0, n).array();
        const auto ep = x.segment(n, n).array();
        const auto gm = x.segment(2 * n, n).array();
        const auto em = x.segment(3 * n, n).array();
        Eigen::ArrayXd s(n), tp(n), tm(n), mx(n), epl(n), emi(n), den(n), rp(n), rm(n);
        double total = 0.0;
        for (Index i = 0; i + 1 < n; ++i) {
            const Index b = i + 1;
            const Index len = n - b;
            auto S = s.head(len);
            auto TP = tp.head(len);
            auto TM = tm.head(len);
            auto MX = mx.head(len);
            auto EP = epl.head(len);
            auto EM = emi.head(len);
            auto DEN = den.head(len);
            S = (labels.segment(b, len) == labels[i]).cast<double>();
            TP = gp[i] + gp.segment(b, len) + S * (ep[i] + ep.segment(b, len));
            TM = gm[i] + gm.segment(b, len) + S * (em[i] + em.segment(b, len));
            MX = TP.max(TM).max(0.0);
            EP = (TP - MX).exp();
            EM = (TM - MX).exp();
            DEN = (-MX).exp() + EP + EM;
            total += (MX + DEN.log()).sum();
            if (grad) {
                auto RP = rp.head(len);
                auto RM = rm.head(len);
                RP = EP / DEN;
                RM = EM / DEN;
                auto g = grad->array();
                g[i] += RP.sum();
                g.segment(b, len) += RP;
                g[n + i] += (S * RP).sum();
                g.segment(n + b, len) += S * RP;
                g[2 * n + i] += RM.sum();
                g.segment(2 * n + b, len) += RM;
                g[3 * n + i] += (S * RM).sum();
                g.segment(3 * n + b, len) += S * RM;
            }
        }
        return total;
    }

    static Eigen::ArrayXd losses(const Eigen::ArrayXd& tp, const Eigen::ArrayXd& tm,
                                 const Eigen::ArrayXd& ap, const Eigen::ArrayXd& am) {
        if (std::max(tp.abs().maxCoeff(), tm.abs().maxCoeff()) <= 2.0 * kFactoredBound)
            return (tp.exp() + tm.exp()).log1p() - ap * tp - am * tm;
        const Eigen::ArrayXd mx = tp.max(tm).max(0.0);
        return mx + ((-mx).exp() + (tp - mx).exp() + (tm - mx).exp()).log() - ap * tp - am * tm;
    }

    void check_shapes(const Eigen::VectorXd& x, const Eigen::ArrayXi& labels) const {
        if (x.size() != 4 * n_ || labels.size() != n_)
            throw std::invalid_argument("Objective: parameter or label size does not match network");
        if (n_ > 0 && labels.minCoeff() < 0) throw std::invalid_argument("Objective: negative label");
    }

    Index n_;
    bool include_diagonal_;
    std::int64_t pair_count_;
    Eigen::MatrixXd a_plus_;
    Eigen::MatrixXd a_minus_;
    SignMatrix signs_;
    std::vector<Edge> edges_;
};

/// Analytic gradient of nll_of_params; defined on all of R^{4n}.
inline Gradient gradient(const SignedAdjacency& adjacency, const NodeParams& params,
                         const Membership& membership) {
    if (!params.consistent() || params.n() != adjacency.n() || membership.n() != adjacency.n())
        throw std::invalid_argument("gradient: dimension mismatch");
    Eigen::VectorXd g;
    Objective(adjacency).evaluate(params.flatten(), membership.as_array(), &g);
    return Gradient::unflatten(g);
}

}  // namespace sbbm
