#pragma once

#include <cmath>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

template <class Scalar>
struct JacobiEig {
    Vector<Scalar> eigenvalues; // ascending
    Matrix<Scalar> eigenvectors; // columns, orthonormal
};

/// Full eigendecomposition of a symmetric dense matrix by cyclic Jacobi
/// sweeps. Independent of every iterative path in the library; used as the
/// reference decomposition in tests and oracle checks. Rotations continue
/// until the off-diagonal Frobenius norm drops below 1e-13 * ||M||_F.
template <class Scalar>
JacobiEig<Scalar> jacobi_eigendecomposition(Matrix<Scalar> M, int max_sweeps = 64) {
    const Index n = M.rows();
    require_dims(M.cols() == n, "jacobi: matrix must be square");
    require(n <= 500, "jacobi: oracle limited to n <= 500");
    require((M - M.transpose()).cwiseAbs().maxCoeff() <=
                Scalar(1e-12) * (Scalar(1) + M.cwiseAbs().maxCoeff()),
            "jacobi: matrix must be symmetric");

    Matrix<Scalar> V = Matrix<Scalar>::Identity(n, n);
    const Scalar norm_f = M.norm();
    const Scalar stop = Scalar(1e-13) * norm_f;

    auto off_norm = [&]() {
        Scalar s = 0;
        for (Index p = 0; p < n; ++p)
            for (Index q = p + 1; q < n; ++q) s += M(p, q) * M(p, q);
        return std::sqrt(Scalar(2) * s);
    };

    for (int sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const Scalar apq = M(p, q);
                if (std::abs(apq) <= Scalar(1e-300)) continue;
                const Scalar theta = (M(q, q) - M(p, p)) / (Scalar(2) * apq);
                const Scalar t =
                    (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                    (std::abs(theta) + std::sqrt(Scalar(1) + theta * theta));
                const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
                const Scalar s = t * c;

                // M <- J^T M J with J the (p,q) rotation
                for (Index k = 0; k < n; ++k) {
                    const Scalar mkp = M(k, p), mkq = M(k, q);
                    M(k, p) = c * mkp - s * mkq;
                    M(k, q) = s * mkp + c * mkq;
                }
                for (Index k = 0; k < n; ++k) {
                    const Scalar mpk = M(p, k), mqk = M(q, k);
                    M(p, k) = c * mpk - s * mqk;
                    M(q, k) = s * mpk + c * mqk;
                }
                for (Index k = 0; k < n; ++k) {
                    const Scalar vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    JacobiEig<Scalar> out;
    out.eigenvalues = M.diagonal();
    out.eigenvectors = std::move(V);

    // selection-sort ascending, swapping vector columns along
    for (Index i = 0; i < n; ++i) {
        Index best = i;
        for (Index j = i + 1; j < n; ++j)
            if (out.eigenvalues(j) < out.eigenvalues(best)) best = j;
        if (best != i) {
            std::swap(out.eigenvalues(i), out.eigenvalues(best));
            out.eigenvectors.col(i).swap(out.eigenvectors.col(best));
        }
    }
    return out;
}

} // namespace pinvgcn
