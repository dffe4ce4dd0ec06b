#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

/// Undirected weighted graph in compressed sparse row layout. Both
/// directions of each edge are stored; the diagonal is structurally empty.
/// Connectivity is not a type invariant here -- it is enforced where a
/// Laplacian is formed, so that `is_connected` stays testable.
class SparseGraph {
public:
    using WeightedEdge = std::tuple<Index, Index, Real>;

    SparseGraph() = default;

    /// Builds from undirected edges (each pair listed once). Rejects loops,
    /// non-positive weights, out-of-range indices and duplicate pairs.
    static SparseGraph from_edges(Index n, const std::vector<WeightedEdge>& edges) {
        require(n >= 1, "graph: need at least one node");
        std::set<std::pair<Index, Index>> seen;
        std::vector<Index> count(static_cast<std::size_t>(n), 0);
        for (const auto& [i, j, w] : edges) {
            require(i >= 0 && i < n && j >= 0 && j < n, "graph: edge index out of range");
            require(i != j, "graph: loops are not allowed");
            require(w > 0, "graph: edge weights must be strictly positive");
            auto key = std::minmax(i, j);
            require(seen.insert({key.first, key.second}).second, "graph: duplicate edge");
            ++count[static_cast<std::size_t>(i)];
            ++count[static_cast<std::size_t>(j)];
        }

        SparseGraph g;
        g.n_ = n;
        g.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (Index i = 0; i < n; ++i)
            g.row_ptr_[static_cast<std::size_t>(i) + 1] =
                g.row_ptr_[static_cast<std::size_t>(i)] + count[static_cast<std::size_t>(i)];
        g.col_idx_.resize(static_cast<std::size_t>(g.row_ptr_.back()));
        g.weights_.resize(g.col_idx_.size());

        std::vector<Index> cursor(g.row_ptr_.begin(), g.row_ptr_.end() - 1);
        auto put = [&](Index i, Index j, Real w) {
            auto& c = cursor[static_cast<std::size_t>(i)];
            g.col_idx_[static_cast<std::size_t>(c)] = j;
            g.weights_[static_cast<std::size_t>(c)] = w;
            ++c;
        };
        for (const auto& [i, j, w] : edges) {
            put(i, j, w);
            put(j, i, w);
        }
        // sort each row by column for deterministic layout
        for (Index i = 0; i < n; ++i) {
            const Index lo = g.row_ptr_[static_cast<std::size_t>(i)];
            const Index hi = g.row_ptr_[static_cast<std::size_t>(i) + 1];
            std::vector<std::pair<Index, Real>> row;
            row.reserve(static_cast<std::size_t>(hi - lo));
            for (Index k = lo; k < hi; ++k)
                row.emplace_back(g.col_idx_[static_cast<std::size_t>(k)],
                                 g.weights_[static_cast<std::size_t>(k)]);
            std::sort(row.begin(), row.end());
            for (Index k = lo; k < hi; ++k) {
                g.col_idx_[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - lo)].first;
                g.weights_[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - lo)].second;
            }
        }
        return g;
    }

    Index nodes() const { return n_; }
    Index stored_entries() const { return static_cast<Index>(col_idx_.size()); }

    /// Visits the neighbors of node i as (j, weight) pairs.
    template <class F>
    void for_each_neighbor(Index i, F&& f) const {
        for (Index k = row_ptr_[static_cast<std::size_t>(i)];
             k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
            f(col_idx_[static_cast<std::size_t>(k)], weights_[static_cast<std::size_t>(k)]);
    }

    /// Y = A X (unnormalized adjacency).
    void apply_adjacency(ConstMatRef X, MatRef Y) const {
        require_dims(X.rows() == n_ && Y.rows() == n_ && Y.cols() == X.cols(),
                     "graph: apply_adjacency shape mismatch");
        Y.setZero();
        for (Index i = 0; i < n_; ++i)
            for_each_neighbor(i, [&](Index j, Real w) { Y.row(i) += w * X.row(j); });
    }

    Mat dense_adjacency() const {
        Mat A = Mat::Zero(n_, n_);
        for (Index i = 0; i < n_; ++i)
            for_each_neighbor(i, [&](Index j, Real w) { A(i, j) = w; });
        return A;
    }

private:
    Index n_ = 0;
    std::vector<Index> row_ptr_{0};
    std::vector<Index> col_idx_;
    std::vector<Real> weights_;
};

/// d_i = sum_j A_ij. Throws IsolatedNodeError if any degree is zero.
inline Vec degrees(const SparseGraph& g) {
    Vec d = Vec::Zero(g.nodes());
    for (Index i = 0; i < g.nodes(); ++i)
        g.for_each_neighbor(i, [&](Index, Real w) { d(i) += w; });
    for (Index i = 0; i < g.nodes(); ++i)
        if (d(i) <= 0)
            throw IsolatedNodeError("graph: node " + std::to_string(i) + " has degree zero");
    return d;
}

/// Breadth-first check for a single connected component.
inline bool is_connected(const SparseGraph& g) {
    const Index n = g.nodes();
    if (n == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Index> queue{0};
    seen[0] = 1;
    std::size_t head = 0;
    while (head < queue.size()) {
        const Index i = queue[head++];
        g.for_each_neighbor(i, [&](Index j, Real) {
            if (!seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = 1;
                queue.push_back(j);
            }
        });
    }
    return queue.size() == static_cast<std::size_t>(n);
}

/// Reads a `i j w` edge list with 0-based indices, `#` comments allowed.
/// The node count is one past the largest index seen.
inline SparseGraph read_edge_list(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<SparseGraph::WeightedEdge> edges;
    Index max_idx = -1;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        long long i, j;
        Real w;
        if (!(ls >> i >> j >> w))
            throw ParseError(origin + ":" + std::to_string(line_no) + ": expected `i j w`");
        edges.emplace_back(static_cast<Index>(i), static_cast<Index>(j), w);
        max_idx = std::max({max_idx, static_cast<Index>(i), static_cast<Index>(j)});
    }
    require(!edges.empty(), origin + ": empty edge list");
    return SparseGraph::from_edges(max_idx + 1, edges);
}

inline SparseGraph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open edge list: " + path);
    return read_edge_list(in, path);
}

} // namespace pinvgcn
