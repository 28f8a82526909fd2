#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "scengen/transform.hpp"

namespace scengen {

/// Directed acyclic graph over stations. Parent lists hold node indices in
/// ascending order.
///
/// Evidence nodes may only have evidence parents, so externally supplied
/// evidence can be clamped before the remaining nodes are sampled.
struct Dag {
    std::vector<std::string> nodes;
    std::vector<bool> evidence;
    std::vector<std::vector<std::size_t>> parents;
    std::size_t max_parents = 0;

    static Dag empty(const std::vector<StationMeta>& stations, std::size_t max_parents);

    std::size_t size() const { return nodes.size(); }
    std::size_t edge_count() const;
    bool has_edge(std::size_t from, std::size_t to) const;
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
    std::size_t index_of(const std::string& node) const;

    /// Kahn's algorithm, smallest ready index first. Throws ArgumentError on a cycle.
    std::vector<std::size_t> topological_order() const;
    bool is_acyclic() const;
    /// Throws ArgumentError if any Dag invariant fails.
    void validate() const;

    bool operator==(const Dag&) const = default;
};

/// Whether the edge from -> to respects the evidence-ordering rule.
bool edge_allowed(const Dag& dag, std::size_t from, std::size_t to);

/// Gaussian BIC over the z panel. Columns are centred; each family is scored on
/// its complete-case rows.
///
///   local(i, P) = -(N/2) ln(sigma^2) - ((|P| + 1)/2) ln N
///
/// where sigma^2 is the maximum-likelihood residual variance of the intercept-free
/// least-squares regression of column i on the columns in P.
class BicScorer {
public:
    explicit BicScorer(const NormalPanel& z);

    /// -inf when the family is rank deficient or has too few complete rows.
    double local(std::size_t node, std::span<const std::size_t> parents) const;
    double total(const Dag& dag) const;

    /// Columns with no variance take no part in the search and score 0.
    bool is_constant(std::size_t node) const { return constant_[node] != 0; }
    std::size_t size() const { return static_cast<std::size_t>(data_.cols()); }

private:
    Eigen::MatrixXd data_;  // centred columns (complete panels) or raw (ragged)
    Eigen::MatrixXd gram_;  // data_^T data_ when complete_
    bool complete_ = true;
    std::vector<char> constant_;
};

struct StructureOptions {
    std::size_t max_parents = 6;
    int restarts = 5;
    std::uint64_t seed = 0;
    bool parallel = true;  // evaluate candidate families concurrently
};

/// Greedy hill-climbing over add/delete/reverse moves maximizing total BIC,
/// best of `restarts` runs (the first from the empty graph, the rest from random
/// graphs). Deterministic for a given seed.
Dag learn_structure(const NormalPanel& z, const StructureOptions& options);

double total_bic(const NormalPanel& z, const Dag& dag);

struct NodeRegression {
    std::string node;
    std::vector<std::string> parents;  // aligned with coefficients
    std::vector<double> coefficients;
    std::vector<double> residuals;
    double residual_variance = 0.0;

    double coefficient(const std::string& parent) const;  // 0 when not a parent
    bool operator==(const NodeRegression&) const = default;
};

struct BayesNet {
    std::vector<StationMeta> stations;  // aligned with dag.nodes
    Dag dag;
    std::vector<NodeRegression> regressions;  // aligned with dag.nodes
    MarginalMap marginals;
    double score = 0.0;
};

/// Least-squares regression of every node on its parents over complete-case rows.
/// Root nodes keep their column as the residual vector.
BayesNet fit_regression(const Dag& dag, const NormalPanel& z);

std::size_t parameter_count(const BayesNet& net);
std::size_t parameter_count(const Dag& dag);
std::size_t full_count(std::size_t n);

}  // namespace scengen
