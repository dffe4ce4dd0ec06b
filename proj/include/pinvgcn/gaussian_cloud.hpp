#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

/// Fully connected graph over 3D points with Gaussian edge weights
/// A_ij = exp(-||x_i - x_j||^2 / sigma^2), i != j. The n x n kernel is never
/// materialized; every operation walks row blocks and recomputes kernel
/// entries on the fly. Kernel underflow for very distant pairs is accepted.
class GaussianCloud {
public:
    GaussianCloud(Mat points, Real sigma, Index block_size = 256)
        : points_(std::move(points)), sigma_(sigma), block_size_(block_size) {
        require(points_.cols() == 3, "cloud: points must be n x 3");
        require(points_.rows() >= 2, "cloud: need at least 2 points");
        require(sigma_ > 0, "cloud: sigma must be positive");
        require(block_size_ >= 1, "cloud: block size must be >= 1");
        check_distinct();
        sq_norms_ = points_.rowwise().squaredNorm();
    }

    Index nodes() const { return points_.rows(); }
    const Mat& points() const { return points_; }
    Real sigma() const { return sigma_; }
    Index block_size() const { return block_size_; }
    void set_block_size(Index b) {
        require(b >= 1, "cloud: block size must be >= 1");
        block_size_ = b;
    }

    /// Dense kernel rows [lo, lo+len) with an exactly zero diagonal.
    /// Only used block-by-block; memory O(len * n).
    Mat kernel_rows(Index lo, Index len) const {
        const Index n = nodes();
        Mat K = (2.0 * points_.middleRows(lo, len) * points_.transpose()).eval();
        K.colwise() -= sq_norms_.segment(lo, len);
        K.rowwise() -= sq_norms_.transpose();
        K = (K / (sigma_ * sigma_)).array().exp().matrix();
        // Eigen's vectorized exp clamps large negative arguments to a denormal
        // floor instead of underflowing; flush that floor to an exact zero
        K = (K.array() >= 1e-300).select(K, 0.0);
        for (Index i = 0; i < len; ++i) K(i, lo + i) = 0.0;
        return K;
    }

    /// Y = A X, blocked over rows.
    void apply_adjacency(ConstMatRef X, MatRef Y) const {
        const Index n = nodes();
        require_dims(X.rows() == n && Y.rows() == n && Y.cols() == X.cols(),
                     "cloud: apply_adjacency shape mismatch");
        for (Index lo = 0; lo < n; lo += block_size_) {
            const Index len = std::min(block_size_, n - lo);
            Y.middleRows(lo, len).noalias() = kernel_rows(lo, len) * X;
        }
    }

private:
    void check_distinct() const {
        std::vector<Index> order(static_cast<std::size_t>(points_.rows()));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            for (Index c = 0; c < 3; ++c) {
                if (points_(a, c) < points_(b, c)) return true;
                if (points_(a, c) > points_(b, c)) return false;
            }
            return false;
        });
        for (std::size_t k = 1; k < order.size(); ++k)
            require(points_.row(order[k - 1]) != points_.row(order[k]),
                    "cloud: points must be pairwise distinct");
    }

    Mat points_;
    Real sigma_;
    Index block_size_;
    Vec sq_norms_;
};

/// Blockwise kernel row sums (zero diagonal excluded by construction).
inline Vec degrees(const GaussianCloud& c) {
    const Index n = c.nodes();
    Vec d(n);
    for (Index lo = 0; lo < n; lo += c.block_size()) {
        const Index len = std::min(c.block_size(), n - lo);
        d.segment(lo, len) = c.kernel_rows(lo, len).rowwise().sum();
    }
    for (Index i = 0; i < n; ++i)
        if (d(i) <= 0)
            throw IsolatedNodeError("cloud: point " + std::to_string(i) +
                                    " has zero degree (all kernel entries underflowed)");
    return d;
}

} // namespace pinvgcn
