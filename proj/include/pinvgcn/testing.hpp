#pragma once

// Randomized instance generators, dense oracle constructions and the
// oracle-equivalence suites behind the `oracle-check` command. The dense
// routes here stay independent of the factored/iterative implementation
// paths they are compared against.

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <string>
#include <vector>

#include "pinvgcn/dataset.hpp"
#include "pinvgcn/filters.hpp"
#include "pinvgcn/hypergraph.hpp"
#include "pinvgcn/jacobi_eig.hpp"
#include "pinvgcn/model.hpp"
#include "pinvgcn/random.hpp"
#include "pinvgcn/spectral_basis.hpp"

namespace pinvgcn::testing {

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

/// Random spanning tree plus extra edges and a triangle on {0,1,2}; connected
/// and non-bipartite by construction. Weights uniform in [0.5, 1.5].
inline SparseGraph random_connected_graph(Index n, Rng& rng, Real extra_per_node = 1.5) {
    require(n >= 3, "random_connected_graph: need n >= 3");
    std::set<std::pair<Index, Index>> keys;
    std::vector<SparseGraph::WeightedEdge> edges;
    auto add = [&](Index i, Index j) {
        auto key = std::minmax(i, j);
        if (i != j && keys.insert({key.first, key.second}).second)
            edges.emplace_back(i, j, rng.uniform(0.5, 1.5));
    };
    for (Index i = 1; i < n; ++i) add(i, rng.below(i));
    add(0, 1);
    add(1, 2);
    add(0, 2);
    const Index extra = static_cast<Index>(extra_per_node * static_cast<Real>(n));
    for (Index e = 0; e < extra; ++e) add(rng.below(n), rng.below(n));
    return SparseGraph::from_edges(n, edges);
}

/// Random hypergraph with full-rank normalized incidence and a connected
/// clique expansion (rejection sampling). Every node joins one or two random
/// hyperedges, which keeps the incidence well-conditioned at any n/|E| ratio.
inline Hypergraph random_hypergraph(Index n, Index ne, Rng& rng) {
    require(n >= 4 && ne >= 2 && n >= 2 * ne, "random_hypergraph: instance too small");
    for (int attempt = 0; attempt < 200; ++attempt) {
        std::vector<std::set<Index>> members(static_cast<std::size_t>(ne));
        for (Index i = 0; i < n; ++i) {
            const Index memberships = 1 + rng.below(2);
            std::set<Index> chosen;
            while (static_cast<Index>(chosen.size()) < memberships)
                chosen.insert(rng.below(ne));
            for (Index e : chosen) members[static_cast<std::size_t>(e)].insert(i);
        }
        // pad thin edges to the two-member minimum
        for (auto& m : members)
            while (m.size() < 2) m.insert(rng.below(n));

        std::vector<std::vector<Index>> lists;
        lists.reserve(members.size());
        for (auto& m : members) lists.emplace_back(m.begin(), m.end());

        Hypergraph hg = Hypergraph::from_incidence_lists(n, std::move(lists), Vec::Ones(ne));
        if (!is_connected(hg)) continue;
        const Mat Ht = normalized_incidence(hg);
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(Ht.transpose() * Ht));
        if (es.eigenvalues()(0) <= 1e-8) continue; // rank deficient, resample
        if (1.0 - es.eigenvalues()(ne - 2) <= 1e-6) continue; // numerically disconnected
        return hg;
    }
    throw Error("random_hypergraph: rejection sampling failed");
}

/// Two Gaussian blobs in 3D, centers `dist` apart along x.
inline Mat two_blob_cloud(Index n, Real dist, Real spread, Rng& rng, std::vector<int>& labels) {
    Mat P(n, 3);
    labels.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const int c = i < n / 2 ? 0 : 1;
        labels[static_cast<std::size_t>(i)] = c;
        P(i, 0) = (c == 0 ? 0.0 : dist) + spread * rng.normal();
        P(i, 1) = spread * rng.normal();
        P(i, 2) = spread * rng.normal();
    }
    return P;
}

// ---------------------------------------------------------------------------
// dense oracle constructions
// ---------------------------------------------------------------------------

/// Dense Gaussian kernel matrix straight from the definition (independent of
/// the blocked implementation).
inline Mat dense_gaussian_kernel(ConstMatRef points, Real sigma) {
    const Index n = points.rows();
    Mat A = Mat::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j)
                A(i, j) = std::exp(-(points.row(i) - points.row(j)).squaredNorm() /
                                   (sigma * sigma));
    return A;
}

/// D^{-1/2} A D^{-1/2} from a dense adjacency.
inline Mat dense_normalized_adjacency(const Mat& A) {
    const Vec d = A.rowwise().sum();
    const Vec s = d.array().rsqrt();
    return s.asDiagonal() * A * s.asDiagonal();
}

inline Mat dense_laplacian(const Mat& A) {
    return Mat::Identity(A.rows(), A.cols()) - dense_normalized_adjacency(A);
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix through the Jacobi
/// oracle; eigenvalues below `tol` are treated as zero.
inline Mat dense_pseudoinverse(const Mat& M, Real tol = 1e-10) {
    const auto je = jacobi_eigendecomposition<Real>(M);
    Mat P = Mat::Zero(M.rows(), M.cols());
    for (Index i = 0; i < je.eigenvalues.size(); ++i)
        if (std::abs(je.eigenvalues(i)) > tol)
            P.noalias() += (1.0 / je.eigenvalues(i)) * je.eigenvectors.col(i) *
                           je.eigenvectors.col(i).transpose();
    return P;
}

/// Spectral norm via the Jacobi oracle.
inline Real dense_spectral_norm(const Mat& M) {
    const auto je = jacobi_eigendecomposition<Real>(Mat(0.5 * (M + M.transpose())));
    return je.eigenvalues.cwiseAbs().maxCoeff();
}

/// Largest principal-angle error of span(sub) against span(space):
/// || (I - Q Q^T) sub ||_2 with Q an orthonormal basis of `space`.
inline Real subspace_containment_error(const Mat& sub, const Mat& space) {
    Eigen::HouseholderQR<Mat> qr(space);
    Mat Q = qr.householderQ() * Mat::Identity(space.rows(), space.cols());
    Mat E = sub - Q * (Q.transpose() * sub);
    Eigen::JacobiSVD<Mat> svd(E);
    return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

// ---------------------------------------------------------------------------
// oracle-equivalence suites; callers apply tolerances to the returned stats
// ---------------------------------------------------------------------------

struct EigSuiteStats {
    int instances = 0;
    Real max_eigenvalue_err = 0;
    Real max_subspace_err = 0;
    Real max_u0_overlap = 0;
};

/// Krylov route vs dense Jacobi oracle on random connected graphs.
inline EigSuiteStats eigensolver_oracle_stats(Index max_n, int count, std::uint64_t seed,
                                              Real perturb = 0) {
    EigSuiteStats st;
    Rng rng(seed);
    for (int inst = 0; inst < count; ++inst) {
        const Index n = 30 + rng.below(std::max<Index>(1, max_n - 29));
        const Index r = 4 + rng.below(7);
        SparseGraph g = random_connected_graph(n, rng);
        LaplacianOperator op(g);

        EigSolveConfig cfg;
        cfg.tol = 1e-11;
        cfg.seed = rng.next_u64();
        SpectralBasis basis = spectral_basis(op, r, cfg);

        const Mat L = dense_laplacian(g.dense_adjacency());
        const auto je = jacobi_eigendecomposition<Real>(L);

        for (Index i = 0; i < r; ++i)
            st.max_eigenvalue_err = std::max(
                st.max_eigenvalue_err, std::abs(basis.lambda(i) - je.eigenvalues(i + 1)));
        if (inst == 0) st.max_eigenvalue_err += perturb;

        // treat near-degenerate clusters at the cut jointly: widen the oracle
        // subspace until the next gap is comfortably larger than the residual
        Index r_ext = r;
        while (r_ext + 1 < n &&
               je.eigenvalues(r_ext + 1) - je.eigenvalues(r) < 1e-4)
            ++r_ext;
        st.max_subspace_err =
            std::max(st.max_subspace_err,
                     subspace_containment_error(
                         basis.U, je.eigenvectors.middleCols(1, r_ext)));
        st.max_u0_overlap = std::max(
            st.max_u0_overlap, (basis.u0.transpose() * basis.U).cwiseAbs().maxCoeff());
        ++st.instances;
    }
    return st;
}

struct HypergraphSuiteStats {
    int instances = 0;
    int wrong_unit_counts = 0; // instances where #(eigenvalues == 1) != n - |E|
    Real max_eigenvalue_err = 0;
    Real max_u0_err = 0;
};

/// Gram-matrix route vs the dense clique-expansion Laplacian.
inline HypergraphSuiteStats hypergraph_oracle_stats(Index max_n, Index max_edges, int count,
                                                    std::uint64_t seed, Real perturb = 0) {
    HypergraphSuiteStats st;
    Rng rng(seed);
    for (int inst = 0; inst < count; ++inst) {
        const Index n = 40 + rng.below(std::max<Index>(1, max_n - 39));
        const Index ne = 4 + rng.below(std::max<Index>(1, max_edges - 3));
        Hypergraph hg = random_hypergraph(n, ne, rng);

        const Mat A = clique_expansion_dense(hg);
        const Mat L = dense_laplacian(A);
        const auto je = jacobi_eigendecomposition<Real>(L);

        Index units = 0;
        for (Index i = 0; i < n; ++i)
            if (std::abs(je.eigenvalues(i) - 1.0) <= 1e-10) ++units;
        if (units != n - ne) ++st.wrong_unit_counts;

        const Index r = ne - 1;
        SpectralBasis basis = hypergraph_spectral_basis(hg, r);
        for (Index i = 0; i < r; ++i)
            st.max_eigenvalue_err = std::max(
                st.max_eigenvalue_err, std::abs(basis.lambda(i) - je.eigenvalues(i + 1)));
        st.max_eigenvalue_err =
            std::max(st.max_eigenvalue_err, std::abs(je.eigenvalues(0)));
        if (inst == 0) st.max_eigenvalue_err += perturb;

        const Vec u0 = unit_degree_vector(node_degrees(hg));
        Vec v0 = je.eigenvectors.col(0);
        if (v0.dot(u0) < 0) v0 = -v0;
        st.max_u0_err = std::max(st.max_u0_err, (v0 - u0).norm());
        ++st.instances;
    }
    return st;
}

struct FilterSuiteStats {
    int instances = 0;
    Real max_conv_err = 0;        // relative, factored vs dense oracle K^(k)
    Real max_feature_map_err = 0; // relative, factored vs dense three-term sum
    Real max_pinv_norm_err = 0;   // | ||Ldag - K2/l1||_2 - 1/lambda_{r+1} |
};

/// Factored filter application vs dense convolutional matrices assembled
/// from the Jacobi oracle's eigenpairs.
inline FilterSuiteStats filter_oracle_stats(Index max_n, int count, std::uint64_t seed,
                                            Real perturb = 0) {
    FilterSuiteStats st;
    Rng rng(seed);
    for (int attempt = 0; attempt < 20 * count && st.instances < count; ++attempt) {
        const Index n = 30 + rng.below(std::max<Index>(1, std::min<Index>(max_n, 90) - 29));
        SparseGraph g = random_connected_graph(n, rng);
        const Mat L = dense_laplacian(g.dense_adjacency());
        const auto je = jacobi_eigendecomposition<Real>(L);

        // pick the cut with the widest spectral gap so basis rotations across
        // it stay far below the comparison tolerances
        Index r = 0;
        Real best_gap = 0;
        for (Index cand = 3; cand <= std::min<Index>(12, n - 3); ++cand) {
            const Real cut_gap = je.eigenvalues(cand + 1) - je.eigenvalues(cand);
            if (cut_gap > best_gap) {
                best_gap = cut_gap;
                r = cand;
            }
        }
        if (best_gap < 1e-2) continue; // resample

        LaplacianOperator op(g);
        EigSolveConfig cfg;
        cfg.tol = 1e-12;
        cfg.seed = rng.next_u64();
        FilterBank bank(spectral_basis(op, r, cfg));
        const Real gap = bank.eigengap();

        // oracle convolutional matrices from the dense eigenpairs
        std::array<Mat, 3> K;
        K[0] = je.eigenvectors.col(0) * je.eigenvectors.col(0).transpose();
        K[1] = Mat::Zero(n, n);
        for (Index i = 1; i <= r; ++i)
            K[1].noalias() += (gap / je.eigenvalues(i)) * je.eigenvectors.col(i) *
                              je.eigenvectors.col(i).transpose();
        K[2] = gap * (Mat::Identity(n, n) - K[0] -
                      je.eigenvectors.middleCols(1, r) *
                          je.eigenvectors.middleCols(1, r).transpose());
        if (st.instances == 0 && perturb != 0) K[1](0, 0) += perturb;

        const Index c = 3, cp = 4;
        const Mat X = rng.uniform_vector(n * c, -1.0, 1.0).reshaped(n, c);
        for (int k = 0; k < 3; ++k) {
            const Mat got = bank.conv_apply(k + 1, X);
            const Mat want = K[static_cast<std::size_t>(k)] * X;
            st.max_conv_err = std::max(
                st.max_conv_err, (got - want).norm() / std::max(1e-30, want.norm()));
        }

        std::array<Mat, 3> W;
        for (auto& Wk : W) Wk = rng.uniform_vector(c * cp, -1.0, 1.0).reshaped(c, cp);
        const Mat got = bank.feature_map(X, W[0], W[1], W[2]);
        Mat want = Mat::Zero(n, cp);
        for (int k = 0; k < 3; ++k)
            want.noalias() += K[static_cast<std::size_t>(k)] * X * W[static_cast<std::size_t>(k)];
        st.max_feature_map_err = std::max(
            st.max_feature_map_err, (got - want).norm() / std::max(1e-30, want.norm()));

        // best rank-r approximation: ||Ldag - K2/lambda_1||_2 = 1/lambda_{r+1}
        const Mat Ldag = dense_pseudoinverse(L);
        const Real norm = dense_spectral_norm(Mat(Ldag - bank.dense_conv_matrix(2) / gap));
        st.max_pinv_norm_err = std::max(
            st.max_pinv_norm_err, std::abs(norm - 1.0 / je.eigenvalues(r + 1)));
        ++st.instances;
    }
    return st;
}

struct GradientSuiteStats {
    int instances = 0;
    Real max_rel_err = 0; // against max(|fd|, |analytic|, 1e-5)
};

/// Hand-derived backward pass vs central finite differences, dropout off.
inline GradientSuiteStats gradient_fd_stats(Index max_n, int count, std::uint64_t seed,
                                            Real perturb = 0) {
    GradientSuiteStats st;
    Rng rng(seed);
    const Real h = 1e-5;
    for (int inst = 0; inst < count; ++inst) {
        const Index n = 20 + rng.below(std::max<Index>(1, std::min<Index>(max_n, 50) - 19));
        SparseGraph g = random_connected_graph(n, rng);
        LaplacianOperator op(g);
        EigSolveConfig cfg;
        cfg.tol = 1e-10;
        cfg.seed = rng.next_u64();
        const Index r = 3 + rng.below(3);
        FilterBank bank(spectral_basis(op, r, cfg));

        const Index d = 3 + rng.below(3), hid = 4 + rng.below(3);
        const int m = 2 + static_cast<int>(rng.below(2));
        const Mat X0 = rng.uniform_vector(n * d, -1.0, 1.0).reshaped(n, d);

        std::vector<int> labels(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < labels.size(); ++i)
            labels[i] = static_cast<int>(i) % m; // every class well-populated
        Split split = sample_split(labels, m, 2, rng);

        ModelParams p = init_params(d, hid, m, rng);
        FirstLayerCache cache(bank, X0);
        ForwardTrace t = forward(bank, cache, p);
        Gradients grad = backward(bank, cache, p, split, t);
        if (inst == 0) grad.b2(0) += perturb;

        auto loss_now = [&]() { return loss(forward(bank, cache, p).Z2, split); };
        auto check_tensor = [&](auto& param, const auto& analytic) {
            for (Index j = 0; j < param.cols(); ++j)
                for (Index i = 0; i < param.rows(); ++i) {
                    const Real keep = param(i, j);
                    param(i, j) = keep + h;
                    const Real up = loss_now();
                    param(i, j) = keep - h;
                    const Real down = loss_now();
                    param(i, j) = keep;
                    const Real fd = (up - down) / (2 * h);
                    const Real a = analytic(i, j);
                    st.max_rel_err =
                        std::max(st.max_rel_err,
                                 std::abs(a - fd) /
                                     std::max({std::abs(fd), std::abs(a), 1e-5}));
                }
        };
        for (int k = 0; k < 3; ++k) {
            check_tensor(p.W1[static_cast<std::size_t>(k)], grad.W1[static_cast<std::size_t>(k)]);
            check_tensor(p.W2[static_cast<std::size_t>(k)], grad.W2[static_cast<std::size_t>(k)]);
        }
        check_tensor(p.b1, grad.b1);
        check_tensor(p.b2, grad.b2);
        ++st.instances;
    }
    return st;
}

} // namespace pinvgcn::testing
