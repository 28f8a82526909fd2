#include "scengen/bnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "scengen/error.hpp"
#include "scengen/rng.hpp"

namespace scengen {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPivotTolerance = 1e-10;

using Family = std::vector<std::size_t>;

Family with(const Family& p, std::size_t x) {
    Family out = p;
    out.insert(std::upper_bound(out.begin(), out.end(), x), x);
    return out;
}

Family without(const Family& p, std::size_t x) {
    Family out;
    out.reserve(p.size());
    for (auto v : p)
        if (v != x) out.push_back(v);
    return out;
}

// sigma^2 from centred cross-products; -inf marker (NaN return) when singular.
double residual_variance_from_gram(const Eigen::MatrixXd& g_pp, const Eigen::VectorXd& g_py, double yy,
                                   double n) {
    if (g_pp.rows() == 0) return yy / n;
    const Eigen::VectorXd d = g_pp.diagonal().cwiseMax(0.0).cwiseSqrt();
    if ((d.array() <= 0.0).any()) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::VectorXd inv_d = d.cwiseInverse();
    const Eigen::MatrixXd r = inv_d.asDiagonal() * g_pp * inv_d.asDiagonal();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(r);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < kPivotTolerance)
        return std::numeric_limits<double>::quiet_NaN();
    const Eigen::VectorXd scaled = inv_d.asDiagonal() * g_py;
    const double explained = scaled.dot(ldlt.solve(scaled));
    return (yy - explained) / n;
}

}  // namespace

// ---------------------------------------------------------------- Dag

Dag Dag::empty(const std::vector<StationMeta>& stations, std::size_t max_parents) {
    Dag d;
    for (const auto& s : stations) {
        d.nodes.push_back(s.id);
        d.evidence.push_back(s.is_evidence);
    }
    d.parents.assign(stations.size(), {});
    d.max_parents = max_parents;
    return d;
}

std::size_t Dag::edge_count() const {
    std::size_t n = 0;
    for (const auto& p : parents) n += p.size();
    return n;
}

bool Dag::has_edge(std::size_t from, std::size_t to) const {
    const auto& p = parents[to];
    return std::binary_search(p.begin(), p.end(), from);
}

std::vector<std::pair<std::size_t, std::size_t>> Dag::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t t = 0; t < parents.size(); ++t)
        for (auto s : parents[t]) out.emplace_back(s, t);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t Dag::index_of(const std::string& node) const {
    auto it = std::find(nodes.begin(), nodes.end(), node);
    if (it == nodes.end()) throw ArgumentError("unknown DAG node '" + node + "'");
    return static_cast<std::size_t>(it - nodes.begin());
}

std::vector<std::size_t> Dag::topological_order() const {
    const auto n = size();
    std::vector<std::size_t> indegree(n);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t t = 0; t < n; ++t) {
        indegree[t] = parents[t].size();
        for (auto s : parents[t]) children[s].push_back(t);
    }
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.insert(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        const auto v = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(v);
        for (auto c : children[v])
            if (--indegree[c] == 0) ready.insert(c);
    }
    if (order.size() != n) throw ArgumentError("graph contains a directed cycle");
    return order;
}

bool Dag::is_acyclic() const {
    try {
        topological_order();
        return true;
    } catch (const ArgumentError&) {
        return false;
    }
}

void Dag::validate() const {
    const auto n = size();
    if (evidence.size() != n || parents.size() != n) throw ArgumentError("DAG field sizes disagree");
    for (std::size_t t = 0; t < n; ++t) {
        const auto& p = parents[t];
        if (p.size() > max_parents)
            throw ArgumentError(fmt::format("node '{}' has {} parents, limit {}", nodes[t], p.size(), max_parents));
        if (!std::is_sorted(p.begin(), p.end()) || std::adjacent_find(p.begin(), p.end()) != p.end())
            throw ArgumentError("parent list of '" + nodes[t] + "' must be sorted and unique");
        for (auto s : p) {
            if (s >= n || s == t) throw ArgumentError("invalid parent index for '" + nodes[t] + "'");
            if (!edge_allowed(*this, s, t))
                throw ArgumentError("evidence node '" + nodes[t] + "' has non-evidence parent '" + nodes[s] + "'");
        }
    }
    topological_order();
}

bool edge_allowed(const Dag& dag, std::size_t from, std::size_t to) {
    return !(dag.evidence[to] && !dag.evidence[from]);
}

// ---------------------------------------------------------------- BicScorer

BicScorer::BicScorer(const NormalPanel& z) : data_(z.z) {
    complete_ = !data_.array().isNaN().any();
    constant_.assign(static_cast<std::size_t>(data_.cols()), 0);
    for (Eigen::Index c = 0; c < data_.cols(); ++c) {
        double sum = 0.0, sq = 0.0, n = 0.0;
        for (Eigen::Index r = 0; r < data_.rows(); ++r)
            if (!std::isnan(data_(r, c))) {
                sum += data_(r, c);
                n += 1.0;
            }
        const double mean = n > 0.0 ? sum / n : 0.0;
        for (Eigen::Index r = 0; r < data_.rows(); ++r)
            if (!std::isnan(data_(r, c))) sq += (data_(r, c) - mean) * (data_(r, c) - mean);
        constant_[static_cast<std::size_t>(c)] = n < 2.0 || sq / n < 1e-12;
        if (complete_) data_.col(c).array() -= mean;
    }
    if (complete_) gram_ = data_.transpose() * data_;
}

double BicScorer::local(std::size_t node, std::span<const std::size_t> parents) const {
    if (is_constant(node)) return 0.0;
    const auto k = static_cast<Eigen::Index>(parents.size());
    Eigen::MatrixXd g_pp(k, k);
    Eigen::VectorXd g_py(k);
    double yy = 0.0, n = 0.0;

    if (complete_) {
        const auto i = static_cast<Eigen::Index>(node);
        n = static_cast<double>(data_.rows());
        yy = gram_(i, i);
        for (Eigen::Index a = 0; a < k; ++a) {
            const auto pa = static_cast<Eigen::Index>(parents[static_cast<std::size_t>(a)]);
            g_py(a) = gram_(pa, i);
            for (Eigen::Index b = 0; b < k; ++b)
                g_pp(a, b) = gram_(pa, static_cast<Eigen::Index>(parents[static_cast<std::size_t>(b)]));
        }
    } else {
        std::vector<Eigen::Index> cols{static_cast<Eigen::Index>(node)};
        for (auto p : parents) cols.push_back(static_cast<Eigen::Index>(p));
        std::vector<Eigen::Index> rows;
        for (Eigen::Index r = 0; r < data_.rows(); ++r) {
            bool ok = true;
            for (auto c : cols) ok = ok && !std::isnan(data_(r, c));
            if (ok) rows.push_back(r);
        }
        if (rows.size() < std::max<std::size_t>(10, parents.size() + 2)) return kNegInf;
        Eigen::MatrixXd block(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < cols.size(); ++c)
                block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data_(rows[r], cols[c]);
        block.rowwise() -= block.colwise().mean();
        const Eigen::MatrixXd g = block.transpose() * block;
        n = static_cast<double>(rows.size());
        yy = g(0, 0);
        g_py = g.block(1, 0, k, 1);
        g_pp = g.block(1, 1, k, k);
    }

    double s2 = residual_variance_from_gram(g_pp, g_py, yy, n);
    if (std::isnan(s2)) return kNegInf;
    s2 = std::max({s2, 1e-12 * yy / n, std::numeric_limits<double>::min()});
    return -0.5 * n * std::log(s2) - 0.5 * static_cast<double>(k + 1) * std::log(n);
}

double BicScorer::total(const Dag& dag) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < dag.size(); ++i) sum += local(i, dag.parents[i]);
    return sum;
}

double total_bic(const NormalPanel& z, const Dag& dag) { return BicScorer(z).total(dag); }

// ---------------------------------------------------------------- search

namespace {

class ScoreCache {
public:
    ScoreCache(const BicScorer& scorer, bool parallel) : scorer_(scorer), parallel_(parallel), memo_(scorer.size()) {}

    void request(std::size_t node, const Family& family) {
        if (!memo_[node].contains(family)) pending_.emplace(node, family);
    }

    void flush() {
        std::vector<std::pair<std::size_t, Family>> work(pending_.begin(), pending_.end());
        pending_.clear();
        std::vector<double> scores(work.size());
        const auto n = static_cast<std::ptrdiff_t>(work.size());
#pragma omp parallel for schedule(dynamic, 8) if (parallel_)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto& [node, fam] = work[static_cast<std::size_t>(i)];
            scores[static_cast<std::size_t>(i)] = scorer_.local(node, fam);
        }
        for (std::size_t i = 0; i < work.size(); ++i) memo_[work[i].first].emplace(work[i].second, scores[i]);
    }

    double get(std::size_t node, const Family& family) {
        auto it = memo_[node].find(family);
        if (it != memo_[node].end()) return it->second;
        const double s = scorer_.local(node, family);
        memo_[node].emplace(family, s);
        return s;
    }

private:
    const BicScorer& scorer_;
    bool parallel_;
    std::vector<std::map<Family, double>> memo_;
    std::set<std::pair<std::size_t, Family>> pending_;
};

enum class MoveType { Add = 0, Delete = 1, Reverse = 2 };

struct Move {
    std::size_t from, to;
    MoveType type;
    Family to_family;    // new parents of `to` (or of the reversed edge's head)
    Family from_family;  // new parents of `from` for reversals
};

// reach[a][b]: a directed path of length >= 1 leads from a to b.
std::vector<std::vector<char>> reachability(const Dag& dag) {
    const auto n = dag.size();
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t t = 0; t < n; ++t)
        for (auto s : dag.parents[t]) children[s].push_back(t);
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    std::vector<std::size_t> stack;
    for (std::size_t a = 0; a < n; ++a) {
        stack.assign(children[a].begin(), children[a].end());
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            if (reach[a][v]) continue;
            reach[a][v] = 1;
            for (auto c : children[v]) stack.push_back(c);
        }
    }
    return reach;
}

// Climbs from `dag` until no move improves the score; returns the final total.
double hill_climb(Dag& dag, const BicScorer& scorer, ScoreCache& cache) {
    const auto n = dag.size();
    std::vector<double> local(n);
    for (std::size_t i = 0; i < n; ++i) local[i] = cache.get(i, dag.parents[i]);
    double total = 0.0;
    for (double v : local) total += v;

    std::vector<Move> moves;
    while (true) {
        const auto reach = reachability(dag);
        moves.clear();
        for (std::size_t s = 0; s < n; ++s) {
            if (scorer.is_constant(s)) continue;
            for (std::size_t t = 0; t < n; ++t) {
                if (s == t || scorer.is_constant(t)) continue;
                if (dag.has_edge(s, t)) {
                    moves.push_back({s, t, MoveType::Delete, without(dag.parents[t], s), {}});
                    bool other_path = false;
                    for (std::size_t c = 0; c < n && !other_path; ++c)
                        if (c != t && dag.has_edge(s, c) && reach[c][t]) other_path = true;
                    if (!other_path && dag.parents[s].size() < dag.max_parents && edge_allowed(dag, t, s))
                        moves.push_back({s, t, MoveType::Reverse, without(dag.parents[t], s), with(dag.parents[s], t)});
                } else if (!dag.has_edge(t, s)) {
                    if (dag.parents[t].size() < dag.max_parents && edge_allowed(dag, s, t) && !reach[t][s])
                        moves.push_back({s, t, MoveType::Add, with(dag.parents[t], s), {}});
                }
            }
        }

        for (const auto& m : moves) {
            cache.request(m.to, m.to_family);
            if (m.type == MoveType::Reverse) cache.request(m.from, m.from_family);
        }
        cache.flush();

        // Moves are enumerated in (from, to, type) order, so a strict comparison
        // keeps the lexicographically smallest among equal deltas.
        const Move* best = nullptr;
        double best_delta = 0.0;
        for (const auto& m : moves) {
            double delta = cache.get(m.to, m.to_family) - local[m.to];
            if (m.type == MoveType::Reverse) delta += cache.get(m.from, m.from_family) - local[m.from];
            if (!std::isfinite(delta)) continue;
            if (best == nullptr || delta > best_delta) {
                best = &m;
                best_delta = delta;
            }
        }
        if (best == nullptr || !(best_delta > 1e-9 * (1.0 + std::fabs(total)))) break;

        dag.parents[best->to] = best->to_family;
        local[best->to] = cache.get(best->to, best->to_family);
        if (best->type == MoveType::Reverse) {
            dag.parents[best->from] = best->from_family;
            local[best->from] = cache.get(best->from, best->from_family);
        }
        total = 0.0;
        for (double v : local) total += v;
    }
    return total;
}

Dag random_start(const Dag& base, const BicScorer& scorer, ScoreCache& cache, rng::Stream& stream) {
    Dag dag = base;
    const auto n = dag.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[stream.below(i)]);
    std::stable_partition(order.begin(), order.end(), [&](std::size_t v) { return dag.evidence[v]; });

    const double p_edge = std::min(0.5, 2.0 / static_cast<double>(std::max<std::size_t>(n, 1)));
    for (std::size_t k = 0; k < n; ++k) {
        const auto t = order[k];
        if (scorer.is_constant(t)) continue;
        Family fam;
        for (std::size_t j = 0; j < k && fam.size() < dag.max_parents; ++j) {
            const auto s = order[j];
            if (scorer.is_constant(s) || !edge_allowed(dag, s, t)) continue;
            if (stream.uniform() < p_edge) fam = with(fam, s);
        }
        dag.parents[t] = std::isfinite(cache.get(t, fam)) ? fam : Family{};
    }
    return dag;
}

}  // namespace

Dag learn_structure(const NormalPanel& z, const StructureOptions& options) {
    std::size_t complete_rows = 0;
    for (Eigen::Index r = 0; r < z.z.rows(); ++r)
        if (!z.z.row(r).array().isNaN().any()) ++complete_rows;
    if (complete_rows < 50)
        throw InsufficientDataError(fmt::format("structure learning needs >= 50 complete rows, got {}", complete_rows));

    Dag base = Dag::empty(z.stations, options.max_parents);
    if (options.max_parents == 0 || z.cols() < 2) return base;

    const BicScorer scorer(z);
    ScoreCache cache(scorer, options.parallel);
    Dag best;
    double best_score = kNegInf;
    const int runs = std::max(1, options.restarts);
    for (int run = 0; run < runs; ++run) {
        Dag dag = base;
        if (run > 0) {
            rng::Stream stream(rng::at(options.seed, {static_cast<std::uint64_t>(run)}));
            dag = random_start(base, scorer, cache, stream);
        }
        const double score = hill_climb(dag, scorer, cache);
        if (score > best_score) {
            best_score = score;
            best = std::move(dag);
        }
    }
    return best;
}

// ---------------------------------------------------------------- regression

double NodeRegression::coefficient(const std::string& parent) const {
    for (std::size_t i = 0; i < parents.size(); ++i)
        if (parents[i] == parent) return coefficients[i];
    return 0.0;
}

BayesNet fit_regression(const Dag& dag, const NormalPanel& z) {
    dag.validate();
    std::vector<Eigen::Index> col(dag.size());
    BayesNet net;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        auto it = std::find_if(z.stations.begin(), z.stations.end(),
                               [&](const StationMeta& s) { return s.id == dag.nodes[i]; });
        if (it == z.stations.end()) throw ArgumentError("DAG node '" + dag.nodes[i] + "' not in panel");
        col[i] = it - z.stations.begin();
        net.stations.push_back(*it);
    }
    net.dag = dag;

    for (std::size_t i = 0; i < dag.size(); ++i) {
        const auto& pa = dag.parents[i];
        const auto k = static_cast<Eigen::Index>(pa.size());
        std::vector<Eigen::Index> rows;
        for (Eigen::Index r = 0; r < z.z.rows(); ++r) {
            bool ok = !std::isnan(z.z(r, col[i]));
            for (auto p : pa) ok = ok && !std::isnan(z.z(r, col[p]));
            if (ok) rows.push_back(r);
        }
        const auto n = static_cast<Eigen::Index>(rows.size());
        if (n < k + 2)
            throw InsufficientDataError(fmt::format("node '{}': {} complete rows for {} parents", dag.nodes[i], n, k));

        Eigen::VectorXd y(n);
        Eigen::MatrixXd x(n, k);
        for (Eigen::Index r = 0; r < n; ++r) {
            y(r) = z.z(rows[static_cast<std::size_t>(r)], col[i]);
            for (Eigen::Index c = 0; c < k; ++c) x(r, c) = z.z(rows[static_cast<std::size_t>(r)], col[pa[static_cast<std::size_t>(c)]]);
        }

        NodeRegression reg;
        reg.node = dag.nodes[i];
        Eigen::VectorXd resid = y;
        if (k > 0) {
            const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
            const Eigen::VectorXd yc = y.array() - y.mean();
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
            qr.setThreshold(kPivotTolerance);
            if (qr.rank() < k) throw CollinearityError(reg.node, "parent columns are collinear");
            const Eigen::VectorXd a = qr.solve(yc);
            resid = y - x * a;
            for (Eigen::Index c = 0; c < k; ++c) {
                reg.parents.push_back(dag.nodes[pa[static_cast<std::size_t>(c)]]);
                reg.coefficients.push_back(a(c));
            }
        }
        reg.residuals.assign(resid.data(), resid.data() + resid.size());
        reg.residual_variance = (resid.array() - resid.mean()).square().mean();
        net.regressions.push_back(std::move(reg));
    }
    NormalPanel ordered{net.stations, z.index, Eigen::MatrixXd(z.z.rows(), static_cast<Eigen::Index>(dag.size()))};
    for (std::size_t i = 0; i < dag.size(); ++i) ordered.z.col(static_cast<Eigen::Index>(i)) = z.z.col(col[i]);
    net.score = total_bic(ordered, dag);
    return net;
}

std::size_t parameter_count(const Dag& dag) { return dag.edge_count() + dag.size(); }
std::size_t parameter_count(const BayesNet& net) { return parameter_count(net.dag); }
std::size_t full_count(std::size_t n) { return n * (n + 1) / 2; }

}  // namespace scengen
