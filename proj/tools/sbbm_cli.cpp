// sbbm: simulate, fit, evaluate and benchmark signed block beta-models.

#include "sbbm/io.hpp"
#include "sbbm/sbbm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace sbbm;
using nlohmann::json;

namespace {

/// Rows of named values printed as CSV (header + rows) or JSON.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;

    void add(std::vector<json> row) { rows.push_back(std::move(row)); }

    void print(std::ostream& out, const std::string& format, bool single) const {
        if (format == "json") {
            json arr = json::array();
            for (const auto& r : rows) {
                json obj = json::object();
                for (std::size_t c = 0; c < columns.size(); ++c) obj[columns[c]] = r[c];
                arr.push_back(std::move(obj));
            }
            out << (single && arr.size() == 1 ? arr[0] : arr).dump(2) << '\n';
            return;
        }
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
        out << '\n';
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < r.size(); ++c) {
                if (c) out << ',';
                if (r[c].is_string())
                    out << r[c].get<std::string>();
                else if (!r[c].is_null())
                    out << r[c].dump();
            }
            out << '\n';
        }
    }
};

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::pair<int, int> parse_range(const std::string& s, const std::string& sep, const std::string& what) {
    const auto pos = s.find(sep);
    if (pos == std::string::npos) throw std::invalid_argument(what + " must look like A" + sep + "B");
    const int a = std::stoi(s.substr(0, pos)), b = std::stoi(s.substr(pos + sep.size()));
    if (a > b) throw std::invalid_argument(what + " is empty");
    return {a, b};
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    body(out);
}

std::ifstream open_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

// --------------------------------------------------------------------- simulate

struct SimulateArgs {
    int example = 2;
    Index n = 500;
    int K = 4;
    std::optional<double> param;
    std::uint64_t seed = 0;
    std::string diagonal = "exclude";
    std::string out;
};

SampleOutput simulate(const SimulateArgs& a) {
    const DiagonalPolicy policy = diagonal_policy_from_string(a.diagonal);
    if (a.example == 1) {
        Example1Config c;
        c.n = a.n;
        c.mu = a.param.value_or(-2.5);
        c.seed = a.seed;
        c.diagonal_policy = policy;
        return gen_example1(c);
    }
    Example23Config c;
    c.n = a.n;
    c.seed = a.seed;
    c.diagonal_policy = policy;
    if (a.example == 2) {
        c.K = a.K;
    } else {
        c.K = 4;
        c.mean_beta = -3.0;
        c.var_beta = a.param.value_or(1.0);
    }
    return gen_example23(c);
}

void run_simulate(const SimulateArgs& a, const std::string& format) {
    const SampleOutput s = simulate(a);
    const auto ids = default_node_ids(a.n);
    const std::vector<std::string> files{a.out + ".edges.tsv", a.out + ".labels.tsv", a.out + ".pplus.tsv",
                                         a.out + ".pminus.tsv"};
    write_file(files[0], [&](std::ostream& o) { write_edge_list(o, s.adjacency, ids); });
    write_file(files[1], [&](std::ostream& o) { write_labels(o, ids, s.truth.membership); });
    write_file(files[2], [&](std::ostream& o) { write_matrix_table(o, ids, s.truth.p_plus); });
    write_file(files[3], [&](std::ostream& o) { write_matrix_table(o, ids, s.truth.p_minus); });
    Table t{{"example", "n", "K", "seed", "m_plus", "m_minus", "edges"}, {}};
    t.add({a.example, a.n, s.truth.membership.K(), a.seed, s.adjacency.count_edges(1), s.adjacency.count_edges(-1),
           files[0]});
    t.print(std::cout, format, true);
}

// -------------------------------------------------------------------------- fit

struct FitArgs {
    std::string edges;
    int K = 2;
    std::string k_range;
    FitConfig config;
    std::string diagonal = "exclude";
    bool strict = false;
    bool no_unsigned_start = false;
    bool no_profile_moves = false;
    std::string out;
};

int run_fit(const FitArgs& a, const std::string& format) {
    const DiagonalPolicy policy = diagonal_policy_from_string(a.diagonal);
    const LoadedGraph g = load_edge_list(a.edges, policy);
    FitConfig cfg = a.config;
    cfg.K = a.K;
    cfg.unsigned_start = !a.no_unsigned_start;
    cfg.profile_moves = !a.no_profile_moves;

    ModelFile m;
    m.node_ids = g.node_ids;
    m.diagonal_policy = policy;
    m.edges_source = a.edges;
    Table t{{"K", "n", "final_nll", "bic", "outer_iters", "converged", "start", "selected", "error"}, {}};
    const Index n = g.adjacency.n();

    if (!a.k_range.empty()) {
        const auto [lo, hi] = parse_range(a.k_range, "..", "--k-range");
        std::vector<int> ks;
        for (int k = lo; k <= hi; ++k) ks.push_back(k);
        BicSelection sel = select_k_bic(g.adjacency, ks, cfg);
        for (const auto& e : sel.entries) {
            if (e.report)
                t.add({e.K, n, e.report->final_nll, e.bic, e.report->outer_iters, e.report->converged, e.report->start,
                       e.K == sel.best_K, nullptr});
            else
                t.add({e.K, n, nullptr, nullptr, nullptr, nullptr, nullptr, false, e.error});
        }
        const BicEntry& best = sel.best();
        cfg.K = best.K;
        m.report = *best.report;
        m.bic = best.bic;
    } else {
        m.report = fit(g.adjacency, cfg);
        const double bic = bic_value(m.report.final_nll, g.adjacency.pair_count(), n, cfg.K);
        m.bic = bic;
        t.add({cfg.K, n, m.report.final_nll, bic, m.report.outer_iters, m.report.converged, m.report.start, true,
               nullptr});
    }
    m.config = cfg;
    save_model(a.out, m);
    t.print(std::cout, format, true);
    if (a.strict && !m.report.converged) {
        std::cerr << json{{"error", {{"command", "fit"}, {"message", "fit did not converge within t_max"}}}}.dump()
                  << '\n';
        return 3;
    }
    return 0;
}

// --------------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string model;
    std::string truth_labels;
    std::string truth_pplus;
    std::string truth_pminus;
    std::string edges;
};

Eigen::MatrixXd aligned(const MatrixTable& t, const std::vector<std::string>& ids, const std::string& source) {
    std::map<std::string, Index> where;
    for (std::size_t i = 0; i < t.ids.size(); ++i) where[t.ids[i]] = static_cast<Index>(i);
    const auto n = static_cast<Index>(ids.size());
    std::vector<Index> idx(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = where.find(ids[i]);
        if (it == where.end()) throw std::runtime_error(source + ": no row for node '" + ids[i] + "'");
        idx[i] = it->second;
    }
    Eigen::MatrixXd out(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) out(i, j) = t.values(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    return out;
}

void run_evaluate(const EvaluateArgs& a, const std::string& format) {
    const ModelFile m = load_model(a.model);
    const FitReport& r = m.report;
    const auto& ids = m.node_ids;
    const Index n = static_cast<Index>(ids.size());

    auto lin = open_file(a.truth_labels);
    const auto truth_map = read_labels(lin, a.truth_labels);
    std::vector<int> truth(ids.size());
    int truth_k = 1;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = truth_map.find(ids[i]);
        if (it == truth_map.end()) throw std::runtime_error(a.truth_labels + ": no label for node '" + ids[i] + "'");
        truth[i] = it->second - 1;
        truth_k = std::max(truth_k, it->second);
    }
    // Unequal K: compare membership matrices padded with empty columns.
    const int K = std::max(truth_k, r.K);
    const Membership star(truth, K), hat(r.membership.labels(), K);

    std::optional<double> err_plus, err_minus, q;
    if (!a.truth_pplus.empty() || !a.truth_pminus.empty()) {
        if (a.truth_pplus.empty() || a.truth_pminus.empty())
            throw std::invalid_argument("--truth-pplus and --truth-pminus go together");
        auto pin = open_file(a.truth_pplus);
        auto min = open_file(a.truth_pminus);
        const Eigen::MatrixXd pp = aligned(read_matrix_table(pin, a.truth_pplus), ids, a.truth_pplus);
        const Eigen::MatrixXd pm = aligned(read_matrix_table(min, a.truth_pminus), ids, a.truth_pminus);
        const ProbMatrices p = prob_matrices(build_theta(r.params, r.membership));
        const bool diag = m.diagonal_policy == DiagonalPolicy::include;
        err_plus = prob_error(p.plus, pp, diag);
        err_minus = prob_error(p.minus, pm, diag);
    }
    const std::string edges = a.edges.empty() ? m.edges_source : a.edges;
    if (!edges.empty()) {
        const LoadedGraph g = load_edge_list(edges, m.diagonal_policy);
        std::map<std::string, Index> where;
        for (Index i = 0; i < n; ++i) where[ids[static_cast<std::size_t>(i)]] = i;
        std::vector<int> psi(g.node_ids.size());
        for (std::size_t i = 0; i < g.node_ids.size(); ++i) {
            auto it = where.find(g.node_ids[i]);
            if (it == where.end()) throw std::runtime_error(edges + ": node '" + g.node_ids[i] + "' not in the model");
            psi[i] = r.membership[it->second];
        }
        q = signed_modularity(g.adjacency, psi);
    }

    Table t{{"n", "K", "clustering_error", "membership_error", "err_p_plus", "err_p_minus", "q_signed"}, {}};
    t.add({n, r.K, clustering_error(hat, star), membership_error(hat, star), opt(err_plus), opt(err_minus), opt(q)});
    t.print(std::cout, format, true);
}

// ----------------------------------------------------------------------- census

void run_census(const std::string& edges, const std::string& diagonal, const std::string& format) {
    const LoadedGraph g = load_edge_list(edges, diagonal_policy_from_string(diagonal));
    const TriadCensus c = triad_census(g.adjacency);
    Table t{{"n", "m_plus", "m_minus", "type_A", "type_B", "type_C", "type_D", "strong_balanced", "weak_only",
             "unbalanced", "total"},
            {}};
    t.add({g.adjacency.n(), g.m_plus, g.m_minus, c.type_a, c.type_b, c.type_c, c.type_d, c.strong_balanced(),
           c.weak_only(), c.unbalanced(), c.total()});
    t.print(std::cout, format, true);
}

// ----------------------------------------------------------------------- ingest

void run_ingest(IngestSpec spec, const std::string& window, const std::string& out, const std::string& format) {
    const auto [lo, hi] = parse_range(window, ":", "--window");
    spec.year_lo = lo;
    spec.year_hi = hi;
    const IngestResult r = build_real_network(spec);
    write_file(out, [&](std::ostream& o) { write_edge_list(o, r.graph.adjacency, r.graph.node_ids); });
    Table t{{"n", "m_plus", "m_minus", "trading_pairs", "trade_threshold", "out"}, {}};
    t.add({r.graph.adjacency.n(), r.graph.m_plus, r.graph.m_minus, r.trading_pairs, r.trade_threshold, out});
    t.print(std::cout, format, true);
}

// ------------------------------------------------------------------------ bench

struct PublishedCell {
    int table;
    int n;
    double setting;
    const char* method;
    const char* metric;
    const char* value;
};

// Published means(standard errors) over 50 replications.
const std::vector<PublishedCell>& published_cells() {
    static const std::vector<PublishedCell> cells = {
        {1, 500, -3.5, "SBBM", "clustering_error", "0.0910(0.0122)"},
        {1, 500, -3.5, "SLP", "clustering_error", "0.4172(0.0069)"},
        {1, 500, -3.0, "SBBM", "clustering_error", "0.0271(0.0014)"},
        {1, 500, -3.0, "SLP", "clustering_error", "0.2822(0.0059)"},
        {1, 500, -2.5, "SBBM", "clustering_error", "0.0078(0.0007)"},
        {1, 500, -2.5, "SLP", "clustering_error", "0.1715(0.0050)"},
        {1, 1000, -3.5, "SBBM", "clustering_error", "0.0133(0.0007)"},
        {1, 1000, -3.5, "SLP", "clustering_error", "0.2016(0.0029)"},
        {1, 1000, -3.0, "SBBM", "clustering_error", "0.0025(0.0003)"},
        {1, 1000, -3.0, "SLP", "clustering_error", "0.1070(0.0023)"},
        {1, 1000, -2.5, "SBBM", "clustering_error", "0.0004(0.0001)"},
        {1, 1000, -2.5, "SLP", "clustering_error", "0.0440(0.0012)"},
        {2, 500, -3.5, "SBBM", "err_p_plus", "0.6085(0.1521)"},
        {2, 500, -3.5, "SBBM", "err_p_minus", "0.8727(0.2557)"},
        {2, 500, -3.0, "SBBM", "err_p_plus", "0.3136(0.0014)"},
        {2, 500, -3.0, "SBBM", "err_p_minus", "0.3964(0.0017)"},
        {2, 500, -2.5, "SBBM", "err_p_plus", "0.2582(0.0012)"},
        {2, 500, -2.5, "SBBM", "err_p_minus", "0.3199(0.0011)"},
        {2, 1000, -3.5, "SBBM", "err_p_plus", "0.2789(0.0008)"},
        {2, 1000, -3.5, "SBBM", "err_p_minus", "0.3527(0.0010)"},
        {2, 1000, -3.0, "SBBM", "err_p_plus", "0.2277(0.0007)"},
        {2, 1000, -3.0, "SBBM", "err_p_minus", "0.2850(0.0007)"},
        {2, 1000, -2.5, "SBBM", "err_p_plus", "0.1888(0.0005)"},
        {2, 1000, -2.5, "SBBM", "err_p_minus", "0.2350(0.0005)"},
        {3, 500, 4, "SBBM", "clustering_error", "0.0310(0.0041)"},
        {3, 500, 4, "SLP", "clustering_error", "0.3201(0.0063)"},
        {3, 500, 6, "SBBM", "clustering_error", "0.0425(0.0036)"},
        {3, 500, 6, "SLP", "clustering_error", "0.3621(0.0049)"},
        {3, 500, 8, "SBBM", "clustering_error", "0.0508(0.0039)"},
        {3, 500, 8, "SLP", "clustering_error", "0.3800(0.0056)"},
        {3, 1000, 4, "SBBM", "clustering_error", "0.0091(0.0006)"},
        {3, 1000, 4, "SLP", "clustering_error", "0.3128(0.0050)"},
        {3, 1000, 6, "SBBM", "clustering_error", "0.0123(0.0011)"},
        {3, 1000, 6, "SLP", "clustering_error", "0.3497(0.0037)"},
        {3, 1000, 8, "SBBM", "clustering_error", "0.0152(0.0012)"},
        {3, 1000, 8, "SLP", "clustering_error", "0.3632(0.0031)"},
        {4, 500, 4, "SBBM", "err_p_plus", "0.2265(0.0083)"},
        {4, 500, 4, "SBBM", "err_p_minus", "0.1945(0.0049)"},
        {4, 500, 6, "SBBM", "err_p_plus", "0.2841(0.0119)"},
        {4, 500, 6, "SBBM", "err_p_minus", "0.1826(0.0038)"},
        {4, 500, 8, "SBBM", "err_p_plus", "0.3409(0.0128)"},
        {4, 500, 8, "SBBM", "err_p_minus", "0.1819(0.0044)"},
        {4, 1000, 4, "SBBM", "err_p_plus", "0.1546(0.0035)"},
        {4, 1000, 4, "SBBM", "err_p_minus", "0.1344(0.0024)"},
        {4, 1000, 6, "SBBM", "err_p_plus", "0.1788(0.0049)"},
        {4, 1000, 6, "SBBM", "err_p_minus", "0.1225(0.0020)"},
        {4, 1000, 8, "SBBM", "err_p_plus", "0.1993(0.0053)"},
        {4, 1000, 8, "SBBM", "err_p_minus", "0.1168(0.0016)"},
        {5, 500, 1, "SBBM", "clustering_error", "0.1858(0.0063)"},
        {5, 500, 1, "SLP", "clustering_error", "0.2355(0.0071)"},
        {5, 500, 2, "SBBM", "clustering_error", "0.1418(0.0082)"},
        {5, 500, 2, "SLP", "clustering_error", "0.2802(0.0073)"},
        {5, 500, 3, "SBBM", "clustering_error", "0.0784(0.0073)"},
        {5, 500, 3, "SLP", "clustering_error", "0.2951(0.0051)"},
        {5, 1000, 1, "SBBM", "clustering_error", "0.0845(0.0032)"},
        {5, 1000, 1, "SLP", "clustering_error", "0.1855(0.0074)"},
        {5, 1000, 2, "SBBM", "clustering_error", "0.0465(0.0015)"},
        {5, 1000, 2, "SLP", "clustering_error", "0.2640(0.0044)"},
        {5, 1000, 3, "SBBM", "clustering_error", "0.0226(0.0010)"},
        {5, 1000, 3, "SLP", "clustering_error", "0.2749(0.0044)"},
        {6, 500, 1, "SBBM", "err_p_plus", "0.4052(0.0063)"},
        {6, 500, 1, "SBBM", "err_p_minus", "0.8484(0.0184)"},
        {6, 500, 2, "SBBM", "err_p_plus", "0.3283(0.0089)"},
        {6, 500, 2, "SBBM", "err_p_minus", "0.4778(0.0203)"},
        {6, 500, 3, "SBBM", "err_p_plus", "0.2717(0.0092)"},
        {6, 500, 3, "SBBM", "err_p_minus", "0.3165(0.0103)"},
        {6, 1000, 1, "SBBM", "err_p_plus", "0.2725(0.0026)"},
        {6, 1000, 1, "SBBM", "err_p_minus", "0.5233(0.0055)"},
        {6, 1000, 2, "SBBM", "err_p_plus", "0.2084(0.0021)"},
        {6, 1000, 2, "SBBM", "err_p_minus", "0.2893(0.0035)"},
        {6, 1000, 3, "SBBM", "err_p_plus", "0.1751(0.0021)"},
        {6, 1000, 3, "SBBM", "err_p_minus", "0.2085(0.0024)"},
    };
    return cells;
}

std::string published_value(int table, int n, double setting, const std::string& method, const std::string& metric) {
    for (const auto& c : published_cells())
        if (c.table == table && c.n == n && c.setting == setting && method == c.method && metric == c.metric)
            return c.value;
    return "";
}

struct RepResult {
    double sbbm_cluster = 0, slp_cluster = 0, err_plus = 0, err_minus = 0;
};

RepResult run_replication(int example, Index n, double setting, std::uint64_t seed) {
    SimulateArgs sa;
    sa.example = example;
    sa.n = n;
    sa.seed = seed;
    if (example == 2)
        sa.K = static_cast<int>(setting);
    else
        sa.param = setting;
    const SampleOutput s = simulate(sa);
    const int K = s.truth.membership.K();
    FitConfig cfg;
    cfg.K = K;
    cfg.seed = seed;
    const FitReport r = fit(s.adjacency, cfg);
    const ProbMatrices p = prob_matrices(build_theta(r.params, r.membership));
    RepResult out;
    out.sbbm_cluster = clustering_error(r.membership, s.truth.membership);
    out.slp_cluster = clustering_error(slp_baseline(s.adjacency, K, seed), s.truth.membership);
    out.err_plus = prob_error(p.plus, s.truth.p_plus, false);
    out.err_minus = prob_error(p.minus, s.truth.p_minus, false);
    return out;
}

int thread_count() {
    if (const char* env = std::getenv("SBBM_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

void run_bench(int table, int reps, std::vector<int> ns, std::vector<double> settings, std::uint64_t seed,
               const std::string& format) {
    if (table < 1 || table > 6) throw std::invalid_argument("--table must be in 1..6");
    if (reps < 1) throw std::invalid_argument("--reps must be >= 1");
    const int example = (table + 1) / 2;
    const bool clustering = table % 2 == 1;
    if (ns.empty()) ns = {500, 1000};
    if (settings.empty()) {
        if (example == 1) settings = {-3.5, -3.0, -2.5};
        if (example == 2) settings = {4, 6, 8};
        if (example == 3) settings = {1, 2, 3};
    }
    const char* setting_name = example == 1 ? "mu" : example == 2 ? "K" : "sigma2";

    Table t{{"table", "n", "setting", "value", "method", "metric", "reps", "mean", "stderr", "cell", "published"}, {}};
    const int threads = thread_count();
    for (int n : ns) {
        for (double setting : settings) {
            // Replication r always uses the same derived seed, whatever the thread count.
            std::vector<RepResult> results(static_cast<std::size_t>(reps));
            std::atomic<int> next{0};
            auto worker = [&] {
                for (int r; (r = next.fetch_add(1)) < reps;) {
                    RandomStream rs(seed, StreamPurpose::replication, static_cast<std::uint64_t>(r));
                    results[static_cast<std::size_t>(r)] = run_replication(example, n, setting, rs());
                }
            };
            std::vector<std::thread> pool;
            for (int k = 0; k < std::min(threads, reps); ++k) pool.emplace_back(worker);
            for (auto& th : pool) th.join();

            auto emit = [&](const char* method, const char* metric, double RepResult::*field) {
                double mean = 0, ss = 0;
                for (const auto& r : results) mean += r.*field;
                mean /= reps;
                for (const auto& r : results) ss += (r.*field - mean) * (r.*field - mean);
                const double se = reps > 1 ? std::sqrt(ss / (reps - 1) / reps) : 0.0;
                char cell[64];
                std::snprintf(cell, sizeof cell, "%.4f(%.4f)", mean, se);
                t.add({table, n, setting_name, setting, method, metric, reps, mean, se, std::string(cell),
                       published_value(table, n, setting, method, metric)});
            };
            if (clustering) {
                emit("SBBM", "clustering_error", &RepResult::sbbm_cluster);
                emit("SLP", "clustering_error", &RepResult::slp_cluster);
            } else {
                emit("SBBM", "err_p_plus", &RepResult::err_plus);
                emit("SBBM", "err_p_minus", &RepResult::err_minus);
            }
        }
    }
    t.print(std::cout, format, false);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Signed block beta-model: simulate, fit, evaluate, census, ingest, bench"};
    app.require_subcommand(1);
    std::string format = "csv";
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Draw a synthetic signed network with truth files");
    c_sim->add_option("--example", sim.example, "Design 1, 2 or 3")->required()->check(CLI::Range(1, 3));
    c_sim->add_option("--n", sim.n, "Number of nodes")->check(CLI::PositiveNumber);
    c_sim->add_option("--k", sim.K, "Communities (example 2)")->check(CLI::PositiveNumber);
    c_sim->add_option("--param", sim.param, "mu for example 1, sigma^2 for example 3");
    c_sim->add_option("--seed", sim.seed, "RNG seed");
    c_sim->add_option("--diagonal", sim.diagonal, "Self-pairs")->check(CLI::IsMember({"include", "exclude"}));
    c_sim->add_option("--out", sim.out, "Output prefix")->required();

    FitArgs fa;
    auto* c_fit = app.add_subcommand("fit", "Fit the model to an edge list");
    c_fit->add_option("--edges", fa.edges, "Edge list")->required();
    c_fit->add_option("--k", fa.K, "Number of communities")->check(CLI::PositiveNumber);
    c_fit->add_option("--k-range", fa.k_range, "Select K in A..B by BIC");
    c_fit->add_option("--alpha", fa.config.alpha, "Relative objective change that stops the loop");
    c_fit->add_option("--t-max", fa.config.t_max, "Maximum outer iterations");
    c_fit->add_option("--epsilon", fa.config.epsilon, "Feasibility margin");
    c_fit->add_option("--seed", fa.config.seed, "RNG seed");
    c_fit->add_option("--max-inner-iters", fa.config.spg.max_inner_iters, "SPG iteration cap");
    c_fit->add_option("--inner-tol", fa.config.spg.inner_tol, "SPG projected-gradient tolerance");
    c_fit->add_option("--diagonal", fa.diagonal, "Self-pairs")->check(CLI::IsMember({"include", "exclude"}));
    c_fit->add_flag("--strict", fa.strict, "Exit 3 when the loop hits t_max");
    c_fit->add_flag("--no-profile-moves", fa.no_profile_moves, "Plain label moves only, no refit of the moved node");
    c_fit->add_flag("--no-unsigned-start", fa.no_unsigned_start, "Only the signed spectral start");
    c_fit->add_option("--out", fa.out, "Model file (JSON)")->required();

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "Score a fitted model against truth files");
    c_eval->add_option("--model", ev.model, "Model file")->required();
    c_eval->add_option("--truth-labels", ev.truth_labels, "id<TAB>label, 1-based")->required();
    c_eval->add_option("--truth-pplus", ev.truth_pplus, "True P+ table");
    c_eval->add_option("--truth-pminus", ev.truth_pminus, "True P- table");
    c_eval->add_option("--edges", ev.edges, "Edge list for Q_signed (default: the one recorded in the model)");

    std::string census_edges, census_diag = "exclude";
    auto* c_census = app.add_subcommand("census", "Triad census of an edge list");
    c_census->add_option("--edges", census_edges, "Edge list")->required();
    c_census->add_option("--diagonal", census_diag, "Self-pairs")->check(CLI::IsMember({"include", "exclude"}));

    IngestSpec spec;
    std::string window = "2015:2023", ingest_out;
    auto* c_ing = app.add_subcommand("ingest", "Build a signed network from trade and sanctions tables");
    c_ing->add_option("--trade", spec.trade_path, "Trade CSV")->required();
    c_ing->add_option("--sanctions", spec.sanctions_path, "Sanctions CSV")->required();
    c_ing->add_option("--window", window, "Years lo:hi");
    c_ing->add_option("--top-fraction", spec.top_fraction, "Fraction of trading pairs made positive");
    c_ing->add_option("--out", ingest_out, "Edge list to write")->required();

    int table = 3, reps = 10;
    std::vector<int> bench_n;
    std::vector<double> bench_settings;
    std::uint64_t bench_seed = 0;
    auto* c_bench = app.add_subcommand("bench", "Rerun a simulation table");
    c_bench->add_option("--table", table, "Table 1..6")->required()->check(CLI::Range(1, 6));
    c_bench->add_option("--reps", reps, "Replications per cell")->check(CLI::PositiveNumber);
    c_bench->add_option("--n", bench_n, "Network sizes (default 500 1000)")->delimiter(',');
    c_bench->add_option("--setting", bench_settings, "Restrict the mu / K / sigma^2 grid")->delimiter(',');
    c_bench->add_option("--seed", bench_seed, "Base seed");

    std::string command = "sbbm";
    try {
        app.parse(argc, argv);
        command = app.get_subcommands().front()->get_name();
        if (*c_sim) run_simulate(sim, format);
        if (*c_fit) return run_fit(fa, format);
        if (*c_eval) run_evaluate(ev, format);
        if (*c_census) run_census(census_edges, census_diag, format);
        if (*c_ing) run_ingest(spec, window, ingest_out, format);
        if (*c_bench) run_bench(table, reps, bench_n, bench_settings, bench_seed, format);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", {{"command", command}, {"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"command", command}, {"kind", "runtime"}, {"message", e.what()}}}}.dump() << '\n';
        return 1;
    }
    return 0;
}
