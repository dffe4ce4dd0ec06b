#pragma once

#include <variant>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/gaussian_cloud.hpp"
#include "pinvgcn/sparse_graph.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

/// u0_i = sqrt(d_i) / ||sqrt(d)||_2, the eigenvector of the normalized
/// adjacency to eigenvalue 1, normalized to unit length.
inline Vec unit_degree_vector(ConstVecRef d) {
    require((d.array() > 0).all(), "unit_degree_vector: degrees must be positive");
    Vec u = d.array().sqrt();
    u /= u.norm();
    return u;
}

/// Matrix-free application of the normalized adjacency
/// A_hat = D^{-1/2} A D^{-1/2} and of the deflated signless Laplacian
/// I + A_hat - 2 u0 u0^T. Owns the graph, its degree vector and u0; the
/// value is immutable and safe to share across threads.
class LaplacianOperator {
public:
    explicit LaplacianOperator(SparseGraph g) : source_(std::move(g)) {
        if (!is_connected(std::get<SparseGraph>(source_)))
            throw DisconnectedGraphError("laplacian: graph is not connected");
        init(degrees(std::get<SparseGraph>(source_)));
    }

    explicit LaplacianOperator(GaussianCloud c) : source_(std::move(c)) {
        // all Gaussian weights are positive, so the cloud graph is connected
        init(degrees(std::get<GaussianCloud>(source_)));
    }

    Index rows() const { return d_.size(); }
    const Vec& degree_vector() const { return d_; }
    const Vec& u0() const { return u0_; }

    /// Y = A_hat X.
    Mat apply_normalized_adjacency(ConstMatRef X) const {
        require_dims(X.rows() == rows(), "laplacian: X row count mismatch");
        Mat Xs = dinv_sqrt_.asDiagonal() * X;
        Mat Y(X.rows(), X.cols());
        std::visit([&](const auto& g) { g.apply_adjacency(Xs, Y); }, source_);
        Y = dinv_sqrt_.asDiagonal() * Y;
        return Y;
    }

    /// Y = X + A_hat X - 2 u0 (u0^T X); the trivial eigenpair is deflated
    /// to zero and all remaining eigenvalues are 2 - lambda_i.
    Mat apply_deflated_signless(ConstMatRef X) const {
        Mat Y = apply_normalized_adjacency(X);
        Y += X;
        Y.noalias() -= u0_ * (2.0 * (u0_.transpose() * X));
        return Y;
    }

    const std::variant<SparseGraph, GaussianCloud>& source() const { return source_; }

private:
    void init(Vec d) {
        d_ = std::move(d);
        dinv_sqrt_ = d_.array().rsqrt();
        u0_ = unit_degree_vector(d_);
    }

    std::variant<SparseGraph, GaussianCloud> source_;
    Vec d_;
    Vec dinv_sqrt_;
    Vec u0_;
};

} // namespace pinvgcn
