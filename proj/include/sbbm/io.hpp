#pragma once

// File formats: tab-separated signed edge lists, dense truth tables, versioned
// JSON model files, and construction of a signed network from bilateral trade
// and sanctions tables.

#include "sbbm/fitter.hpp"
#include "sbbm/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sbbm {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct LoadedGraph {
    SignedAdjacency adjacency;
    std::vector<std::string> node_ids;
    std::int64_t m_plus = 0;
    std::int64_t m_minus = 0;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

/// Dense indices in order of first appearance.
class IdMap {
public:
    Index intern(const std::string& id) {
        auto [it, inserted] = index_.try_emplace(id, static_cast<Index>(ids_.size()));
        if (inserted) ids_.push_back(id);
        return it->second;
    }
    std::optional<Index> find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    const std::vector<std::string>& ids() const { return ids_; }
    std::vector<std::string> take_ids() { return std::move(ids_); }

private:
    std::unordered_map<std::string, Index> index_;
    std::vector<std::string> ids_;
};

}  // namespace detail

/// One record per line: `a <ws> b <ws> sign` with sign in {1, +1, -1}; a line
/// holding a single id declares an (possibly isolated) node. '#' starts a
/// comment line. Node ids map to indices by first appearance.
inline LoadedGraph parse_edge_list(std::istream& in, DiagonalPolicy policy = DiagonalPolicy::exclude,
                                   const std::string& source = "<edges>") {
    detail::IdMap ids;
    std::map<std::pair<Index, Index>, int> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0][0] == '#') continue;
        if (tok.size() == 1) {
            ids.intern(tok[0]);
            continue;
        }
        if (tok.size() != 3) throw ParseError(source, lineno, "expected 'node_a node_b sign'");
        int sign;
        if (tok[2] == "1" || tok[2] == "+1")
            sign = 1;
        else if (tok[2] == "-1")
            sign = -1;
        else
            throw ParseError(source, lineno, "sign must be +1 or -1, got '" + tok[2] + "'");
        const Index a = ids.intern(tok[0]);
        const Index b = ids.intern(tok[1]);
        if (a == b && policy == DiagonalPolicy::exclude)
            throw ParseError(source, lineno, "self-loop on '" + tok[0] + "' with diagonal excluded");
        const auto key = std::minmax(a, b);
        auto [it, inserted] = edges.try_emplace({key.first, key.second}, sign);
        if (!inserted && it->second != sign)
            throw ParseError(source, lineno, "conflicting signs for pair (" + tok[0] + ", " + tok[1] + ")");
    }
    if (ids.ids().empty()) throw std::runtime_error(source + ": graph must have at least one node");

    LoadedGraph g;
    g.adjacency = SignedAdjacency(static_cast<Index>(ids.ids().size()), policy);
    for (const auto& [pair, sign] : edges) {
        g.adjacency.set(pair.first, pair.second, sign);
        (sign == 1 ? g.m_plus : g.m_minus) += 1;
    }
    g.node_ids = ids.take_ids();
    return g;
}

inline LoadedGraph load_edge_list(const std::string& path, DiagonalPolicy policy = DiagonalPolicy::exclude) {
    auto in = detail::open_input(path);
    return parse_edge_list(in, policy, path);
}

/// Node declarations first, then every nonzero pair i <= j in index order.
inline void write_edge_list(std::ostream& out, const SignedAdjacency& adjacency,
                            const std::vector<std::string>& node_ids) {
    const Index n = adjacency.n();
    if (static_cast<Index>(node_ids.size()) != n) throw std::invalid_argument("write_edge_list: id count mismatch");
    for (const auto& id : node_ids) out << id << '\n';
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j)
            if (adjacency(i, j) != 0)
                out << node_ids[static_cast<std::size_t>(i)] << '\t' << node_ids[static_cast<std::size_t>(j)] << '\t'
                    << (adjacency(i, j) == 1 ? "+1" : "-1") << '\n';
}

inline std::vector<std::string> default_node_ids(Index n) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i + 1));
    return ids;
}

// ---------------------------------------------------------------- truth tables

/// `id <tab> label` with 1-based labels.
inline void write_labels(std::ostream& out, const std::vector<std::string>& ids, const Membership& m) {
    for (Index i = 0; i < m.n(); ++i) out << ids[static_cast<std::size_t>(i)] << '\t' << m[i] + 1 << '\n';
}

inline std::map<std::string, int> read_labels(std::istream& in, const std::string& source = "<labels>") {
    std::map<std::string, int> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0][0] == '#') continue;
        if (tok.size() != 2) throw ParseError(source, lineno, "expected 'node_id label'");
        int label;
        try {
            label = std::stoi(tok[1]);
        } catch (const std::exception&) {
            throw ParseError(source, lineno, "label is not an integer");
        }
        if (label < 1) throw ParseError(source, lineno, "labels are 1-based");
        out[tok[0]] = label;
    }
    return out;
}

struct MatrixTable {
    std::vector<std::string> ids;
    Eigen::MatrixXd values;
};

/// Header row `id <tab> id_1 ... id_n`, then one row per node.
inline void write_matrix_table(std::ostream& out, const std::vector<std::string>& ids, const Eigen::MatrixXd& m) {
    out << "id";
    for (const auto& id : ids) out << '\t' << id;
    out << '\n' << std::setprecision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        out << ids[static_cast<std::size_t>(i)];
        for (Index j = 0; j < m.cols(); ++j) out << '\t' << m(i, j);
        out << '\n';
    }
}

inline MatrixTable read_matrix_table(std::istream& in, const std::string& source = "<matrix>") {
    std::string line;
    std::size_t lineno = 0;
    MatrixTable t;
    if (!std::getline(in, line)) throw ParseError(source, 1, "missing header row");
    ++lineno;
    auto head = detail::split_ws(line);
    if (head.empty() || head[0] != "id") throw ParseError(source, 1, "header must start with 'id'");
    t.ids.assign(head.begin() + 1, head.end());
    const auto n = static_cast<Index>(t.ids.size());
    t.values.resize(n, n);
    Index row = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = detail::split_ws(line);
        if (tok.empty()) continue;
        if (row >= n || static_cast<Index>(tok.size()) != n + 1 || tok[0] != t.ids[static_cast<std::size_t>(row)])
            throw ParseError(source, lineno, "malformed matrix row");
        for (Index j = 0; j < n; ++j) t.values(row, j) = std::stod(tok[static_cast<std::size_t>(j + 1)]);
        ++row;
    }
    if (row != n) throw ParseError(source, lineno, "expected " + std::to_string(n) + " rows");
    return t;
}

// ------------------------------------------------------------------ model file

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
    std::vector<std::string> node_ids;
    DiagonalPolicy diagonal_policy = DiagonalPolicy::exclude;
    FitConfig config;
    FitReport report;
    std::optional<double> bic;
    std::string edges_source;  // edge list the model was fitted to, if known
};

namespace detail {

inline nlohmann::json params_to_json(const NodeParams& p) {
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"gamma_plus", vec(p.gamma_plus)},
            {"eta_plus", vec(p.eta_plus)},
            {"gamma_minus", vec(p.gamma_minus)},
            {"eta_minus", vec(p.eta_minus)}};
}

inline NodeParams params_from_json(const nlohmann::json& j, Index n) {
    auto vec = [&](const char* key) {
        const auto v = j.at(key).get<std::vector<double>>();
        if (static_cast<Index>(v.size()) != n) throw std::runtime_error(std::string("model file: bad length of ") + key);
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
    };
    return {vec("gamma_plus"), vec("eta_plus"), vec("gamma_minus"), vec("eta_minus")};
}

inline CheckpointKind checkpoint_kind_from_string(const std::string& s) {
    for (auto k : {CheckpointKind::init, CheckpointKind::spg, CheckpointKind::labels_batch,
                   CheckpointKind::labels_sequential, CheckpointKind::labels_profile})
        if (s == to_string(k)) return k;
    throw std::runtime_error("model file: unknown checkpoint kind '" + s + "'");
}

}  // namespace detail

inline nlohmann::json model_to_json(const ModelFile& m) {
    const FitReport& r = m.report;
    std::vector<int> labels1;
    for (int l : r.membership.labels()) labels1.push_back(l + 1);
    nlohmann::json checkpoints = nlohmann::json::array();
    for (const auto& c : r.checkpoints) checkpoints.push_back({{"kind", to_string(c.kind)}, {"nll", c.nll}});

    nlohmann::json j;
    j["format"] = "sbbm-model";
    j["format_version"] = kModelFormatVersion;
    j["n"] = r.params.n();
    j["K"] = r.K;
    j["diagonal_policy"] = to_string(m.diagonal_policy);
    if (!m.edges_source.empty()) j["edges_source"] = m.edges_source;
    j["node_ids"] = m.node_ids;
    j["labels"] = labels1;
    j["params"] = detail::params_to_json(r.params);
    if (r.gauge_params) j["gauge_params"] = detail::params_to_json(*r.gauge_params);
    j["fit"] = {{"final_nll", r.final_nll},     {"outer_iters", r.outer_iters}, {"spg_iters", r.spg_iters},
                {"converged", r.converged},     {"seed", r.seed},               {"start", r.start},
                {"nll_trace", r.nll_trace},
                {"checkpoints", checkpoints},   {"diagnostics", r.diagnostics}};
    if (m.bic) j["fit"]["bic"] = *m.bic;
    const FitConfig& c = m.config;
    j["config"] = {{"K", c.K},
                   {"alpha", c.alpha},
                   {"t_max", c.t_max},
                   {"epsilon", c.epsilon},
                   {"seed", c.seed},
                   {"unsigned_start", c.unsigned_start},
                   {"profile_moves", c.profile_moves},
                   {"spg",
                    {{"max_inner_iters", c.spg.max_inner_iters},
                     {"armijo_c", c.spg.armijo_c},
                     {"backtrack_factor", c.spg.backtrack_factor},
                     {"lambda_min", c.spg.lambda_min},
                     {"lambda_max", c.spg.lambda_max},
                     {"inner_tol", c.spg.inner_tol},
                     {"nonmonotone_window", c.spg.nonmonotone_window}}}};
    return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "sbbm-model") throw std::runtime_error("model file: not an sbbm model");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw std::runtime_error("model file: unsupported format_version " + std::to_string(version));

    ModelFile m;
    const Index n = j.at("n").get<Index>();
    const int K = j.at("K").get<int>();
    m.node_ids = j.at("node_ids").get<std::vector<std::string>>();
    if (static_cast<Index>(m.node_ids.size()) != n) throw std::runtime_error("model file: node_ids length != n");
    m.diagonal_policy = diagonal_policy_from_string(j.at("diagonal_policy").get<std::string>());
    m.edges_source = j.value("edges_source", "");

    FitReport& r = m.report;
    r.K = K;
    std::vector<int> labels = j.at("labels").get<std::vector<int>>();
    if (static_cast<Index>(labels.size()) != n) throw std::runtime_error("model file: labels length != n");
    for (int& l : labels) --l;
    r.membership = Membership(std::move(labels), K);
    r.params = detail::params_from_json(j.at("params"), n);
    if (j.contains("gauge_params")) r.gauge_params = detail::params_from_json(j.at("gauge_params"), n);

    const auto& f = j.at("fit");
    r.final_nll = f.at("final_nll").get<double>();
    r.outer_iters = f.at("outer_iters").get<int>();
    r.spg_iters = f.at("spg_iters").get<int>();
    r.converged = f.at("converged").get<bool>();
    r.seed = f.at("seed").get<std::uint64_t>();
    r.start = f.value("start", "");
    r.nll_trace = f.at("nll_trace").get<std::vector<double>>();
    for (const auto& c : f.at("checkpoints"))
        r.checkpoints.push_back({detail::checkpoint_kind_from_string(c.at("kind").get<std::string>()),
                                 c.at("nll").get<double>()});
    r.diagnostics = f.at("diagnostics").get<std::vector<std::string>>();
    if (f.contains("bic")) m.bic = f.at("bic").get<double>();

    const auto& c = j.at("config");
    m.config.K = c.at("K").get<int>();
    m.config.alpha = c.at("alpha").get<double>();
    m.config.t_max = c.at("t_max").get<int>();
    m.config.epsilon = c.at("epsilon").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.unsigned_start = c.value("unsigned_start", true);
    m.config.profile_moves = c.value("profile_moves", true);
    const auto& s = c.at("spg");
    m.config.spg.max_inner_iters = s.at("max_inner_iters").get<int>();
    m.config.spg.armijo_c = s.at("armijo_c").get<double>();
    m.config.spg.backtrack_factor = s.at("backtrack_factor").get<double>();
    m.config.spg.lambda_min = s.at("lambda_min").get<double>();
    m.config.spg.lambda_max = s.at("lambda_max").get<double>();
    m.config.spg.inner_tol = s.at("inner_tol").get<double>();
    m.config.spg.nonmonotone_window = s.at("nonmonotone_window").get<int>();
    return m;
}

inline void save_model(const std::string& path, const ModelFile& m) {
    auto out = detail::open_output(path);
    out << model_to_json(m).dump(2) << '\n';
}

inline ModelFile load_model(const std::string& path) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return model_from_json(j);
}

// ------------------------------------------------------------------- ingestion

struct IngestSpec {
    std::string trade_path;
    std::string sanctions_path;
    int year_lo = 2015;
    int year_hi = 2023;
    double top_fraction = 1.0 / 30.0;

    void validate() const {
        if (year_lo > year_hi) throw std::invalid_argument("IngestSpec: empty year window");
        if (!(top_fraction > 0.0 && top_fraction <= 1.0))
            throw std::invalid_argument("IngestSpec: top_fraction must be in (0, 1]");
    }
};

struct IngestResult {
    LoadedGraph graph;
    std::int64_t trading_pairs = 0;  // pairs with positive trade in the window
    double trade_threshold = 0.0;    // smallest total that still ranks in the top fraction
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

struct CsvTable {
    std::vector<std::size_t> columns;  // positions of the requested columns
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

inline CsvTable read_csv(std::istream& in, const std::vector<std::string>& wanted, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source, 1, "missing header row");
    const auto header = split_csv(line);
    CsvTable t;
    for (const auto& w : wanted) {
        auto it = std::find(header.begin(), header.end(), w);
        if (it == header.end()) throw ParseError(source, 1, "missing column '" + w + "'");
        t.columns.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv(line);
        std::vector<std::string> row;
        for (std::size_t c : t.columns) {
            if (c >= cells.size()) throw ParseError(source, lineno, "row has too few columns");
            row.push_back(cells[c]);
        }
        t.rows.push_back(std::move(row));
        t.line_numbers.push_back(lineno);
    }
    return t;
}

template <typename T>
T parse_number(const std::string& s, const std::string& source, std::size_t line) {
    try {
        std::size_t used = 0;
        T v;
        if constexpr (std::is_same_v<T, int>)
            v = std::stoi(s, &used);
        else
            v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(source, line, "not a number: '" + s + "'");
    }
}

}  // namespace detail

/// Negative edge for every pair with a sanction overlapping the window;
/// otherwise a positive edge when the pair's total trade over the window
/// ranks in the top `top_fraction` of all pairs with positive trade (ties at
/// the cutoff included). Nodes without edges are dropped and the remaining
/// ids are sorted, so the output does not depend on input row order.
inline IngestResult build_real_network(std::istream& trade, std::istream& sanctions, const IngestSpec& spec,
                                       const std::string& trade_source = "<trade>",
                                       const std::string& sanctions_source = "<sanctions>") {
    spec.validate();
    using Pair = std::pair<std::string, std::string>;
    auto key = [](const std::string& a, const std::string& b) { return a < b ? Pair{a, b} : Pair{b, a}; };

    const auto tt = detail::read_csv(trade, {"economy_a", "economy_b", "year", "trade_value"}, trade_source);
    std::map<Pair, std::vector<double>> flows;
    for (std::size_t r = 0; r < tt.rows.size(); ++r) {
        const auto& row = tt.rows[r];
        const int year = detail::parse_number<int>(row[2], trade_source, tt.line_numbers[r]);
        const double value = detail::parse_number<double>(row[3], trade_source, tt.line_numbers[r]);
        if (!(value >= 0.0)) throw ParseError(trade_source, tt.line_numbers[r], "trade_value must be >= 0");
        if (year < spec.year_lo || year > spec.year_hi || row[0] == row[1]) continue;
        flows[key(row[0], row[1])].push_back(value);
    }

    const auto st = detail::read_csv(sanctions, {"economy_a", "economy_b", "year_start", "year_end"}, sanctions_source);
    std::map<Pair, bool> sanctioned;
    for (std::size_t r = 0; r < st.rows.size(); ++r) {
        const auto& row = st.rows[r];
        const int start = detail::parse_number<int>(row[2], sanctions_source, st.line_numbers[r]);
        const int end = detail::parse_number<int>(row[3], sanctions_source, st.line_numbers[r]);
        if (row[0] == row[1]) continue;
        if (start <= spec.year_hi && end >= spec.year_lo) sanctioned[key(row[0], row[1])] = true;
    }

    std::vector<std::pair<double, Pair>> totals;
    for (auto& [pair, values] : flows) {
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        if (sum > 0.0) totals.emplace_back(sum, pair);
    }

    IngestResult result;
    result.trading_pairs = static_cast<std::int64_t>(totals.size());
    std::map<Pair, int> signs;
    if (!totals.empty()) {
        std::vector<double> sorted;
        for (const auto& t : totals) sorted.push_back(t.first);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const auto rank = static_cast<std::size_t>(
            std::max(1.0, std::ceil(spec.top_fraction * static_cast<double>(sorted.size()) - 1e-9)));
        result.trade_threshold = sorted[std::min(rank, sorted.size()) - 1];
        for (const auto& [sum, pair] : totals)
            if (sum >= result.trade_threshold) signs[pair] = 1;
    }
    for (const auto& [pair, yes] : sanctioned) signs[pair] = -1;
    if (signs.empty()) throw std::runtime_error("build_real_network: no pair qualifies for an edge");

    std::vector<std::string> ids;
    for (const auto& [pair, s] : signs) {
        ids.push_back(pair.first);
        ids.push_back(pair.second);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::map<std::string, Index> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<Index>(i);

    LoadedGraph& g = result.graph;
    g.adjacency = SignedAdjacency(static_cast<Index>(ids.size()), DiagonalPolicy::exclude);
    for (const auto& [pair, s] : signs) {
        g.adjacency.set(index[pair.first], index[pair.second], s);
        (s == 1 ? g.m_plus : g.m_minus) += 1;
    }
    g.node_ids = std::move(ids);
    return result;
}

inline IngestResult build_real_network(const IngestSpec& spec) {
    auto trade = detail::open_input(spec.trade_path);
    auto sanctions = detail::open_input(spec.sanctions_path);
    return build_real_network(trade, sanctions, spec, spec.trade_path, spec.sanctions_path);
}

}  // namespace sbbm
