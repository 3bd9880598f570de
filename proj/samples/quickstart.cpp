// Simulate a weak-balance network with four communities, fit it, and compare
// against the truth and the spectral baseline.

#include "sbbm/sbbm.hpp"

#include <cstdio>

int main() {
    using namespace sbbm;

    const SampleOutput data = gen_example2(/*n=*/200, /*K=*/4, /*seed=*/7);

    FitConfig config;
    config.K = 4;
    config.seed = 7;
    const FitReport fitted = fit(data.adjacency, config);

    const ProbMatrices p = prob_matrices(build_theta(fitted.params, fitted.membership));
    const Membership slp = slp_baseline(data.adjacency, 4, 7);
    const TriadCensus census = triad_census(data.adjacency);

    std::printf("edges: %lld positive, %lld negative\n", static_cast<long long>(data.adjacency.count_edges(1)),
                static_cast<long long>(data.adjacency.count_edges(-1)));
    std::printf("triads A/B/C/D: %lld/%lld/%lld/%lld\n", static_cast<long long>(census.type_a),
                static_cast<long long>(census.type_b), static_cast<long long>(census.type_c),
                static_cast<long long>(census.type_d));
    std::printf("fit: nll %.6f after %d outer iterations (%s start, converged=%d)\n", fitted.final_nll,
                fitted.outer_iters, fitted.start.c_str(), fitted.converged);
    std::printf("clustering error: sbbm %.4f, slp %.4f\n", clustering_error(fitted.membership, data.truth.membership),
                clustering_error(slp, data.truth.membership));
    std::printf("probability error: P+ %.4f, P- %.4f\n", prob_error(p.plus, data.truth.p_plus, false),
                prob_error(p.minus, data.truth.p_minus, false));
    std::printf("Q_signed: sbbm %.4f, slp %.4f\n", signed_modularity(data.adjacency, fitted.membership),
                signed_modularity(data.adjacency, slp));
    return 0;
}
