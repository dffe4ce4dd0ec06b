#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/laplacian.hpp"
#include "pinvgcn/spectral_basis.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

/// Node-hyperedge incidence with positive hyperedge weights. Every hyperedge
/// has at least two members and every node belongs to at least one hyperedge.
class Hypergraph {
public:
    static Hypergraph from_incidence_lists(Index n, std::vector<std::vector<Index>> members,
                                           Vec weights) {
        require(n >= 1, "hypergraph: need at least one node");
        require(static_cast<Index>(members.size()) == weights.size(),
                "hypergraph: member list / weight count mismatch");
        if (members.empty()) throw EmptyHypergraphError("hypergraph: no hyperedges");

        std::vector<char> covered(static_cast<std::size_t>(n), 0);
        for (std::size_t e = 0; e < members.size(); ++e) {
            auto& m = members[e];
            std::sort(m.begin(), m.end());
            require(std::adjacent_find(m.begin(), m.end()) == m.end(),
                    "hypergraph: duplicate member in hyperedge");
            require(m.size() >= 2, "hypergraph: hyperedge with fewer than two members");
            require(weights(static_cast<Index>(e)) > 0, "hypergraph: weights must be positive");
            for (Index i : m) {
                require(i >= 0 && i < n, "hypergraph: member index out of range");
                covered[static_cast<std::size_t>(i)] = 1;
            }
        }
        for (Index i = 0; i < n; ++i)
            if (!covered[static_cast<std::size_t>(i)])
                throw IsolatedNodeError("hypergraph: node " + std::to_string(i) +
                                        " belongs to no hyperedge");

        Hypergraph hg;
        hg.n_ = n;
        hg.members_ = std::move(members);
        hg.weights_ = std::move(weights);
        return hg;
    }

    Index nodes() const { return n_; }
    Index edge_count() const { return static_cast<Index>(members_.size()); }
    const std::vector<Index>& members(Index e) const {
        return members_[static_cast<std::size_t>(e)];
    }
    Real weight(Index e) const { return weights_(e); }
    const Vec& weights() const { return weights_; }

private:
    Index n_ = 0;
    std::vector<std::vector<Index>> members_;
    Vec weights_;
};

/// D_ii = sum_e H_ie w_e.
inline Vec node_degrees(const Hypergraph& hg) {
    Vec d = Vec::Zero(hg.nodes());
    for (Index e = 0; e < hg.edge_count(); ++e)
        for (Index i : hg.members(e)) d(i) += hg.weight(e);
    return d;
}

/// B_ee = member count.
inline Vec edge_degrees(const Hypergraph& hg) {
    Vec b(hg.edge_count());
    for (Index e = 0; e < hg.edge_count(); ++e)
        b(e) = static_cast<Real>(hg.members(e).size());
    return b;
}

/// Connectivity of the clique expansion (union-find over hyperedges).
inline bool is_connected(const Hypergraph& hg) {
    std::vector<Index> parent(static_cast<std::size_t>(hg.nodes()));
    std::iota(parent.begin(), parent.end(), Index(0));
    auto find = [&](Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (Index e = 0; e < hg.edge_count(); ++e) {
        const auto& m = hg.members(e);
        for (std::size_t k = 1; k < m.size(); ++k) {
            const Index a = find(m[0]), b = find(m[k]);
            if (a != b) parent[static_cast<std::size_t>(b)] = a;
        }
    }
    const Index root = find(0);
    for (Index i = 1; i < hg.nodes(); ++i)
        if (find(i) != root) return false;
    return true;
}

/// Dense 0/1 incidence matrix H (used as input features downstream).
inline Mat incidence_dense(const Hypergraph& hg) {
    Mat H = Mat::Zero(hg.nodes(), hg.edge_count());
    for (Index e = 0; e < hg.edge_count(); ++e)
        for (Index i : hg.members(e)) H(i, e) = 1.0;
    return H;
}

/// H_tilde = D^{-1/2} H W_E^{1/2} B^{-1/2}; the hypergraph Laplacian is
/// I - H_tilde H_tilde^T.
inline Mat normalized_incidence(const Hypergraph& hg) {
    const Vec d = node_degrees(hg);
    const Vec b = edge_degrees(hg);
    Mat Ht = Mat::Zero(hg.nodes(), hg.edge_count());
    for (Index e = 0; e < hg.edge_count(); ++e) {
        const Real scale = std::sqrt(hg.weight(e)) / std::sqrt(b(e));
        for (Index i : hg.members(e)) Ht(i, e) = scale / std::sqrt(d(i));
    }
    return Ht;
}

/// Explicit clique expansion adjacency H W_E B^{-1} H^T, loops included.
/// Oracle/test scale only.
inline Mat clique_expansion_dense(const Hypergraph& hg) {
    require(hg.nodes() <= 2000, "clique_expansion_dense: limited to n <= 2000");
    Mat A = Mat::Zero(hg.nodes(), hg.nodes());
    for (Index e = 0; e < hg.edge_count(); ++e) {
        const auto& m = hg.members(e);
        const Real v = hg.weight(e) / static_cast<Real>(m.size());
        for (Index i : m)
            for (Index j : m) A(i, j) += v;
    }
    return A;
}

/// Exact spectral basis through the |E| x |E| Gram matrix G = H_tilde^T
/// H_tilde: Laplacian eigenvalues are 1 - sigma^2 plus an (n - |E|)-fold
/// eigenvalue 1, and node-space eigenvectors are H_tilde v / sigma.
///
/// When H_tilde does not have full rank (complete categorical attributes
/// always produce one exact dependency per extra attribute), fewer than r
/// informative pairs exist. With `complete_unit_eigenspace` the basis is
/// padded with orthonormal eigenvalue-1 eigenvectors, which are exactly the
/// next-smallest nonzero eigenpairs in that case; otherwise a RankDeficient
/// error is raised.
inline SpectralBasis hypergraph_spectral_basis(const Hypergraph& hg, Index r,
                                               bool complete_unit_eigenspace = false) {
    const Index ne = hg.edge_count();
    const Index n = hg.nodes();
    require(r >= 1, "hypergraph_spectral_basis: need r >= 1");
    if (r > ne - 1)
        throw RankTooLargeError("hypergraph_spectral_basis: r = " + std::to_string(r) +
                                " exceeds |E| - 1 = " + std::to_string(ne - 1));

    const Mat Ht = normalized_incidence(hg);
    Mat G(ne, ne);
    G.noalias() = Ht.transpose() * Ht;
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    require(es.info() == Eigen::Success, "hypergraph_spectral_basis: dense solve failed");
    const Vec& sq = es.eigenvalues(); // sigma^2, ascending

    const Real rank_tol = 1e-12;
    if (!complete_unit_eigenspace && sq(ne - 1 - r) <= rank_tol)
        throw RankDeficientError(
            "hypergraph_spectral_basis: normalized incidence has numerical rank below r + 1");
    require(sq(ne - 1) > 1.0 - 1e-8,
            "hypergraph_spectral_basis: trivial singular value missing");

    Index informative = 0; // nontrivial pairs with sigma^2 above tolerance
    while (informative < r && sq(ne - 2 - informative) > rank_tol) ++informative;

    SpectralBasis b;
    b.n = n;
    b.r = r;
    b.tol = rank_tol;
    b.u0 = unit_degree_vector(node_degrees(hg));
    b.lambda.resize(r);
    b.U.resize(n, r);
    for (Index i = 1; i <= informative; ++i) {
        const Index idx = ne - 1 - i;
        const Real sigma = std::sqrt(sq(idx));
        b.lambda(i - 1) = 1.0 - sq(idx);
        b.U.col(i - 1).noalias() = Ht * es.eigenvectors().col(idx) / sigma;
        b.U.col(i - 1).normalize();
    }

    // pad with eigenvalue-1 eigenvectors: orthonormal directions outside
    // range(H_tilde) = span(u0, informative columns). Seeded, so reruns are
    // bit-identical.
    if (informative < r) {
        require(r - informative <= n - informative - 1,
                "hypergraph_spectral_basis: not enough eigenvalue-1 directions");
        Rng rng(0x706776636eULL);
        for (Index col = informative; col < r; ++col) {
            Vec v;
            Real norm = 0;
            for (int attempt = 0; attempt < 8 && norm < 1e-6; ++attempt) {
                v = rng.uniform_vector(n, -1.0, 1.0);
                for (int pass = 0; pass < 2; ++pass) {
                    v -= b.u0 * b.u0.dot(v);
                    v -= b.U.leftCols(col) * (b.U.leftCols(col).transpose() * v);
                }
                norm = v.norm();
            }
            require(norm >= 1e-6, "hypergraph_spectral_basis: eigenspace completion failed");
            b.lambda(col) = 1.0;
            b.U.col(col) = v / norm;
        }
    }

    if (b.lambda(0) <= 1e-10)
        throw NumericallyDisconnectedError(
            "hypergraph_spectral_basis: eigengap is numerically zero (disconnected "
            "clique expansion)");
    return b;
}

// ---------------------------------------------------------------------------
// categorical-table construction
// ---------------------------------------------------------------------------

enum class ColumnRole { Categorical, Continuous, Binary, Label, Ignore };

struct CategoricalSchema {
    struct Column {
        std::string name;
        ColumnRole role = ColumnRole::Ignore;
        int bins = 10; // continuous columns only
    };
    std::vector<Column> columns;
    /// Skip any attribute column containing a missing marker ("?" or empty).
    bool skip_attributes_with_missing = true;

    Index label_column() const {
        Index found = -1;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c].role == ColumnRole::Label) {
                require(found < 0, "schema: more than one label column");
                found = static_cast<Index>(c);
            }
        }
        require(found >= 0, "schema: no label column");
        return found;
    }
};

using TableRows = std::vector<std::vector<std::string>>;

struct CategoricalHypergraph {
    Hypergraph hypergraph;
    std::vector<int> labels;              // contiguous 0..m-1
    std::vector<std::string> class_names; // sorted original labels
    std::vector<std::string> skipped_columns;
};

namespace detail {

inline bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

inline bool label_less(const std::string& a, const std::string& b) {
    // numeric-aware so "10" sorts after "2" when all labels are integers
    char* enda = nullptr;
    char* endb = nullptr;
    const long va = std::strtol(a.c_str(), &enda, 10);
    const long vb = std::strtol(b.c_str(), &endb, 10);
    if (enda && *enda == '\0' && endb && *endb == '\0' && !a.empty() && !b.empty())
        return va < vb;
    return a < b;
}

} // namespace detail

/// One hyperedge per observed categorical value (first-appearance order),
/// per non-empty equal-width bin of a continuous column, or for the samples
/// with a true value of a binary column. Unit weights; hyperedges with fewer
/// than two members are dropped.
inline CategoricalHypergraph from_categorical_table(const TableRows& rows,
                                                    const CategoricalSchema& schema) {
    const Index n = static_cast<Index>(rows.size());
    require(n >= 1, "categorical: empty table");
    const std::size_t width = schema.columns.size();
    for (std::size_t i = 0; i < rows.size(); ++i)
        require(rows[i].size() == width,
                "categorical: row " + std::to_string(i) + " has " +
                    std::to_string(rows[i].size()) + " cells, schema expects " +
                    std::to_string(width));

    const Index label_col = schema.label_column();
    std::vector<std::string> raw_labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        raw_labels[i] = rows[i][static_cast<std::size_t>(label_col)];
        require(!detail::is_missing(raw_labels[i]),
                "categorical: row " + std::to_string(i) + " has a missing label");
    }

    CategoricalHypergraph out;
    std::vector<std::vector<Index>> edges;

    for (std::size_t c = 0; c < width; ++c) {
        const auto& col = schema.columns[c];
        if (col.role == ColumnRole::Label || col.role == ColumnRole::Ignore) continue;

        if (schema.skip_attributes_with_missing) {
            bool missing = false;
            for (const auto& row : rows)
                if (detail::is_missing(row[c])) {
                    missing = true;
                    break;
                }
            if (missing) {
                out.skipped_columns.push_back(col.name);
                continue;
            }
        }

        std::vector<std::vector<Index>> col_edges;
        if (col.role == ColumnRole::Categorical) {
            std::map<std::string, std::size_t> slot;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                auto [it, inserted] = slot.try_emplace(rows[i][c], col_edges.size());
                if (inserted) col_edges.emplace_back();
                col_edges[it->second].push_back(static_cast<Index>(i));
            }
        } else if (col.role == ColumnRole::Continuous) {
            require(col.bins >= 1, "schema: continuous column needs bins >= 1");
            std::vector<Real> vals(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                try {
                    std::size_t pos = 0;
                    vals[i] = std::stod(rows[i][c], &pos);
                    require(pos == rows[i][c].size(), "trailing characters");
                } catch (const std::exception&) {
                    throw ParseError("categorical: column `" + col.name + "` row " +
                                     std::to_string(i) + ": not a number: `" + rows[i][c] + "`");
                }
            }
            const Real lo = *std::min_element(vals.begin(), vals.end());
            const Real hi = *std::max_element(vals.begin(), vals.end());
            const Real span = hi - lo;
            col_edges.assign(static_cast<std::size_t>(col.bins), {});
            for (std::size_t i = 0; i < vals.size(); ++i) {
                Index bin = 0;
                if (span > 0) {
                    bin = static_cast<Index>((vals[i] - lo) / span *
                                             static_cast<Real>(col.bins));
                    bin = std::min<Index>(bin, col.bins - 1); // max value -> last bin
                }
                col_edges[static_cast<std::size_t>(bin)].push_back(static_cast<Index>(i));
            }
        } else { // Binary
            col_edges.emplace_back();
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (rows[i][c] == "1" || rows[i][c] == "true")
                    col_edges[0].push_back(static_cast<Index>(i));
        }

        for (auto& e : col_edges)
            if (e.size() >= 2) edges.push_back(std::move(e));
    }

    if (edges.empty())
        throw EmptyHypergraphError("categorical: every hyperedge was dropped");
    out.hypergraph =
        Hypergraph::from_incidence_lists(n, std::move(edges),
                                         Vec::Ones(static_cast<Index>(edges.size())));

    std::vector<std::string> classes(raw_labels);
    std::sort(classes.begin(), classes.end(), detail::label_less);
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    out.class_names = classes;
    out.labels.resize(raw_labels.size());
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
        const auto it = std::lower_bound(classes.begin(), classes.end(), raw_labels[i],
                                         detail::label_less);
        out.labels[i] = static_cast<int>(it - classes.begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// text serialization: first line `n |E|`, then one line per hyperedge
// `w_e k i1 ... ik`
// ---------------------------------------------------------------------------

inline void save_hypergraph(std::ostream& out, const Hypergraph& hg) {
    out << hg.nodes() << ' ' << hg.edge_count() << '\n';
    out << std::setprecision(std::numeric_limits<Real>::max_digits10);
    for (Index e = 0; e < hg.edge_count(); ++e) {
        out << hg.weight(e) << ' ' << hg.members(e).size();
        for (Index i : hg.members(e)) out << ' ' << i;
        out << '\n';
    }
}

inline void save_hypergraph(const std::string& path, const Hypergraph& hg) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot open hypergraph file for writing: " + path);
    save_hypergraph(out, hg);
}

inline Hypergraph load_hypergraph(std::istream& in, const std::string& origin = "<stream>") {
    Index n = 0, ne = 0;
    require(static_cast<bool>(in >> n >> ne), origin + ": bad hypergraph header");
    std::vector<std::vector<Index>> members(static_cast<std::size_t>(ne));
    Vec weights(ne);
    for (Index e = 0; e < ne; ++e) {
        Real w = 0;
        std::size_t k = 0;
        require(static_cast<bool>(in >> w >> k),
                origin + ": bad hyperedge line " + std::to_string(e));
        weights(e) = w;
        auto& m = members[static_cast<std::size_t>(e)];
        m.resize(k);
        for (std::size_t j = 0; j < k; ++j)
            require(static_cast<bool>(in >> m[j]),
                    origin + ": truncated hyperedge line " + std::to_string(e));
    }
    return Hypergraph::from_incidence_lists(n, std::move(members), std::move(weights));
}

inline Hypergraph load_hypergraph(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open hypergraph file: " + path);
    return load_hypergraph(in, path);
}

} // namespace pinvgcn
