#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/spectral_basis.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

/// Value of the three-part filter at a single frequency: alpha at zero,
/// lambda_1 * beta / lambda on the retained band, lambda_1 * gamma above it.
/// Diagnostic / plotting aid.
inline Real filter_value(Real alpha, Real beta, Real gamma, const SpectralBasis& basis,
                         Real lambda) {
    require(lambda >= 0.0 && lambda <= 2.0, "filter_value: lambda must lie in [0, 2]");
    if (lambda == 0.0) return alpha;
    if (lambda <= basis.lambda(basis.r - 1)) return basis.eigengap() * beta / lambda;
    return basis.eigengap() * gamma;
}

/// The three convolutional matrices
///   K1 = u0 u0^T
///   K2 = lambda_1 U_r Lambda_r^{-1} U_r^T
///   K3 = lambda_1 (I - u0 u0^T - U_r U_r^T)
/// kept in factored form; applications cost O(n r c) and no n x n matrix is
/// ever stored.
class FilterBank {
public:
    explicit FilterBank(SpectralBasis basis) : basis_(std::move(basis)) {
        scale_ = basis_.lambda(0) / basis_.lambda.array();
        require(scale_(0) == 1.0 && (scale_.array() > 0).all() &&
                    (scale_.array() <= 1.0).all(),
                "filter bank: eigenvalue scaling out of range");
    }

    const SpectralBasis& basis() const { return basis_; }
    Index size() const { return basis_.n; }
    Index rank() const { return basis_.r; }
    Real eigengap() const { return basis_.eigengap(); }
    /// lambda_1 / lambda_i, i = 1..r; first entry exactly 1.
    const Vec& eigenvalue_scaling() const { return scale_; }

    /// K^(k) X for k in {1, 2, 3}.
    Mat conv_apply(int k, ConstMatRef X) const {
        require_dims(X.rows() == basis_.n, "conv_apply: X row count mismatch");
        switch (k) {
        case 1:
            return basis_.u0 * (basis_.u0.transpose() * X);
        case 2:
            return basis_.U * (scale_.asDiagonal() * (basis_.U.transpose() * X));
        case 3: {
            Mat Y = X;
            Y.noalias() -= basis_.u0 * (basis_.u0.transpose() * X);
            Y.noalias() -= basis_.U * (basis_.U.transpose() * X);
            return basis_.eigengap() * Y;
        }
        default:
            throw Error("conv_apply: k must be 1, 2 or 3");
        }
    }

    /// Factored feature map
    ///   Y = u0 ((u0^T X) W1 - lambda_1 u0^T (X W3))
    ///     + lambda_1 U_r (Lambda_r^{-1} (U_r^T X) W2 - U_r^T (X W3))
    ///     + lambda_1 X W3,
    /// identical to K1 X W1 + K2 X W2 + K3 X W3.
    Mat feature_map(ConstMatRef X, ConstMatRef W1, ConstMatRef W2, ConstMatRef W3) const {
        require_dims(X.rows() == basis_.n, "feature_map: X row count mismatch");
        require_dims(W1.rows() == X.cols() && W2.rows() == X.cols() && W3.rows() == X.cols(),
                     "feature_map: weight row count mismatch");
        require_dims(W1.cols() == W2.cols() && W2.cols() == W3.cols(),
                     "feature_map: weight column count mismatch");
        const Real gap = basis_.eigengap();

        Mat XW3(X.rows(), W3.cols());
        XW3.noalias() = X * W3;

        Eigen::RowVectorXd u0X = basis_.u0.transpose() * X;
        Eigen::RowVectorXd zero_row = u0X * W1;
        zero_row.noalias() -= gap * (basis_.u0.transpose() * XW3);

        Mat UrX(basis_.r, X.cols());
        UrX.noalias() = basis_.U.transpose() * X;
        Mat band = basis_.lambda.cwiseInverse().asDiagonal() * UrX * W2;
        band.noalias() -= basis_.U.transpose() * XW3;

        Mat Y = std::move(XW3);
        Y *= gap;
        Y.noalias() += basis_.u0 * zero_row;
        Y.noalias() += gap * (basis_.U * band);
        return Y;
    }

    /// Explicit n x n K^(k); tests and diagnostics only.
    Mat dense_conv_matrix(int k) const {
        require(basis_.n <= 2000, "dense_conv_matrix: limited to n <= 2000");
        switch (k) {
        case 1:
            return basis_.u0 * basis_.u0.transpose();
        case 2:
            return basis_.U * scale_.asDiagonal() * basis_.U.transpose();
        case 3: {
            Mat K = Mat::Identity(basis_.n, basis_.n);
            K.noalias() -= basis_.u0 * basis_.u0.transpose();
            K.noalias() -= basis_.U * basis_.U.transpose();
            return basis_.eigengap() * K;
        }
        default:
            throw Error("dense_conv_matrix: k must be 1, 2 or 3");
        }
    }

private:
    SpectralBasis basis_;
    Vec scale_;
};

/// Filter response curve as two-column CSV (lambda, phi(lambda)): a uniform
/// grid over [0, 2] merged with the retained eigenvalues.
inline void write_filter_response_csv(std::ostream& out, const SpectralBasis& basis,
                                      Real alpha, Real beta, Real gamma,
                                      Index grid_points = 200) {
    out << "lambda,phi\n";
    out << std::setprecision(std::numeric_limits<Real>::max_digits10);
    std::vector<Real> xs;
    xs.reserve(static_cast<std::size_t>(grid_points + basis.r + 1));
    for (Index i = 0; i <= grid_points; ++i)
        xs.push_back(2.0 * static_cast<Real>(i) / static_cast<Real>(grid_points));
    for (Index i = 0; i < basis.r; ++i) xs.push_back(basis.lambda(i));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (Real x : xs)
        out << x << ',' << filter_value(alpha, beta, gamma, basis, x) << '\n';
}

inline void write_filter_response_csv(const std::string& path, const SpectralBasis& basis,
                                      Real alpha, Real beta, Real gamma,
                                      Index grid_points = 200) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot open response csv for writing: " + path);
    write_filter_response_csv(out, basis, alpha, beta, gamma, grid_points);
}

} // namespace pinvgcn
