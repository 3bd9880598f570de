#pragma once

// Euclidean projection onto the balance-feasible parameter set and the K = 2
// gauge transform.
//
// Per node the feasible set is the intersection of two half-spaces in
// q = (gamma+, eta+, gamma-, eta-):
//   h1(q) = q . u1 + eps <= 0,  u1 = ( 1, 0, -1,  0)   (gamma+ <= gamma- - eps)
//   h2(q) = q . u2 + eps <= 0,  u2 = (-1,-1,  1,  1)   (beta+  >= beta-  + eps)
// The projection is the unique KKT point; the candidate active sets are tried
// in order {}, {1}, {2}, {1,2}.

#include "sbbm/model.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>

namespace sbbm {

struct FeasibleSpec {
    double epsilon = 1e-6;
    bool gauge_k2 = true;
};

using NodeVector = Eigen::Vector4d;

namespace detail {

inline const NodeVector& normal1() {
    static const NodeVector u(1.0, 0.0, -1.0, 0.0);
    return u;
}

inline const NodeVector& normal2() {
    static const NodeVector u(-1.0, -1.0, 1.0, 1.0);
    return u;
}

}  // namespace detail

inline NodeVector project_node(const NodeVector& q, double epsilon) {
    if (!q.allFinite()) throw std::domain_error("project_node: non-finite input");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("project_node: epsilon must be >= 0");

    const NodeVector& u1 = detail::normal1();
    const NodeVector& u2 = detail::normal2();
    const double h1 = q.dot(u1) + epsilon;
    const double h2 = q.dot(u2) + epsilon;
    // Primal feasibility slack for the candidate checks.
    const double tol = 1e-12 * (1.0 + q.cwiseAbs().maxCoeff());

    if (h1 <= 0.0 && h2 <= 0.0) return q;

    if (h1 > 0.0) {
        const NodeVector x = q - (h1 / u1.squaredNorm()) * u1;
        if (x.dot(u2) + epsilon <= tol) return x;
    }
    if (h2 > 0.0) {
        const NodeVector x = q - (h2 / u2.squaredNorm()) * u2;
        if (x.dot(u1) + epsilon <= tol) return x;
    }

    // Both constraints active: solve G mu = h with G the Gram matrix of (u1, u2).
    const double g11 = u1.squaredNorm();
    const double g12 = u1.dot(u2);
    const double g22 = u2.squaredNorm();
    const double det = g11 * g22 - g12 * g12;
    const double mu1 = (g22 * h1 - g12 * h2) / det;
    const double mu2 = (g11 * h2 - g12 * h1) / det;
    return q - mu1 * u1 - mu2 * u2;
}

inline NodeParams project_all(const NodeParams& params, const FeasibleSpec& spec) {
    if (!params.consistent()) throw std::invalid_argument("project_all: parameter vectors differ in length");
    if (!(spec.epsilon >= 0.0)) throw std::invalid_argument("project_all: epsilon must be >= 0");
    NodeParams out = params;
    for (Index i = 0; i < params.n(); ++i) {
        const NodeVector q(params.gamma_plus[i], params.eta_plus[i], params.gamma_minus[i],
                           params.eta_minus[i]);
        const NodeVector p = project_node(q, spec.epsilon);
        out.gamma_plus[i] = p[0];
        out.eta_plus[i] = p[1];
        out.gamma_minus[i] = p[2];
        out.eta_minus[i] = p[3];
    }
    return out;
}

/// Projection of the flat layout [gamma+; eta+; gamma-; eta-], in place.
inline void project_flat(Eigen::VectorXd& x, double epsilon) {
    const Index n = x.size() / 4;
    for (Index i = 0; i < n; ++i) {
        const NodeVector q(x[i], x[n + i], x[2 * n + i], x[3 * n + i]);
        const NodeVector p = project_node(q, epsilon);
        x[i] = p[0];
        x[n + i] = p[1];
        x[2 * n + i] = p[2];
        x[3 * n + i] = p[3];
    }
}

/// For K = 2 the model is invariant under shifting eta by -c and gamma by +c in
/// the community of node 0, and the opposite in the other community (per sign
/// block). Picks c so that eta+[0] = eta-[0] = 0; Theta is unchanged.
///
/// The representative is never node-wise feasible at node 0 (eta = 0 there
/// forces gamma+ = beta+ > beta- = gamma- against gamma+ < gamma-), so callers
/// that need feasibility keep the untransformed parameters alongside.
inline NodeParams gauge_fix_k2(const NodeParams& params, const Membership& membership) {
    if (membership.K() != 2) throw std::invalid_argument("gauge_fix_k2: requires K == 2");
    if (!params.consistent() || params.n() != membership.n())
        throw std::invalid_argument("gauge_fix_k2: dimension mismatch");
    if (params.n() == 0) return params;

    NodeParams out = params;
    const double cp = params.eta_plus[0];
    const double cm = params.eta_minus[0];
    const int anchor = membership[0];
    for (Index i = 0; i < params.n(); ++i) {
        const double sign = membership[i] == anchor ? 1.0 : -1.0;
        out.eta_plus[i] -= sign * cp;
        out.gamma_plus[i] += sign * cp;
        out.eta_minus[i] -= sign * cm;
        out.gamma_minus[i] += sign * cm;
    }
    out.eta_plus[0] = 0.0;
    out.eta_minus[0] = 0.0;
    return out;
}

}  // namespace sbbm
