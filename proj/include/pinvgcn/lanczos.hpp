#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdint>
#include <string>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/random.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

struct EigSolveConfig {
    Real tol = 1e-8;          // relative residual, against max(1, |mu|)
    Index max_subspace = 0;   // 0 -> max(2r + 10, 40)
    Index max_restarts = 200;
    std::uint64_t seed = 0;
};

struct EigenPairs {
    Vec values;  // descending
    Mat vectors; // column-orthonormal
    Index matvecs = 0;
    Real max_residual = 0; // max ||Op v - mu v|| / max(1, |mu|)
};

namespace detail {

/// Two-pass classical Gram-Schmidt of w against the columns of B (first cols
/// columns) and the optional external block O. Coefficients against B are
/// accumulated into h.
template <class Scalar>
void orthogonalize(Vector<Scalar>& w, const Matrix<Scalar>& B, Index cols,
                   const Matrix<Scalar>& O, Vector<Scalar>& h) {
    h.setZero(cols);
    for (int pass = 0; pass < 2; ++pass) {
        if (cols > 0) {
            Vector<Scalar> c = B.leftCols(cols).transpose() * w;
            w.noalias() -= B.leftCols(cols) * c;
            h.head(cols) += c;
        }
        if (O.cols() > 0) {
            Vector<Scalar> c = O.transpose() * w;
            w.noalias() -= O * c;
        }
    }
}

} // namespace detail

/// Largest `nev` eigenpairs of a symmetric operator by Lanczos with full
/// reorthogonalization and thick (Krylov-Schur) restarts. `op` is a callable
/// mapping a vector to the operator image; `orth_against` columns span a
/// known invariant subspace the iteration is kept orthogonal to (Wielandt
/// deflation uses this for u0). Start vector is seeded uniform random.
///
/// Restart bookkeeping: the projected matrix is maintained as the upper
/// triangle of V^T Op V, so kept Ritz blocks, arrow columns and
/// reorthogonalization corrections all land in one place and the
/// Rayleigh-Ritz step just mirrors the triangle.
template <class Op, class Scalar = Real>
EigenPairs largest_eigenpairs(Op&& op, Index n, Index nev, const EigSolveConfig& cfg,
                              const Matrix<Scalar>& orth_against = Matrix<Scalar>()) {
    require(nev >= 1, "eigensolver: need nev >= 1");
    require(nev < n, "eigensolver: nev must be below the dimension");
    require(cfg.tol > 0, "eigensolver: tol must be positive");
    const Index free_dim = n - orth_against.cols();
    require(nev <= free_dim, "eigensolver: nev exceeds the deflated dimension");

    Index m = cfg.max_subspace > 0 ? cfg.max_subspace : std::max<Index>(2 * nev + 10, 40);
    m = std::min(m, free_dim);
    m = std::max(m, std::min<Index>(nev + 2, free_dim));
    require(m > nev || m == free_dim, "eigensolver: max_subspace must exceed nev");

    Matrix<Scalar> V(n, m + 1);
    Matrix<Scalar> H = Matrix<Scalar>::Zero(m + 1, m + 1);
    Vector<Scalar> h(m + 1), w(n);
    Rng rng(cfg.seed);

    auto random_direction = [&](Index cols) -> bool {
        for (int attempt = 0; attempt < 5; ++attempt) {
            w = rng.uniform_vector(n, -1.0, 1.0);
            detail::orthogonalize(w, V, cols, orth_against, h);
            const Scalar nrm = w.norm();
            if (nrm > Scalar(1e-8)) {
                V.col(cols) = w / nrm;
                return true;
            }
        }
        return false; // complement space exhausted
    };

    require(random_direction(0), "eigensolver: could not build a start vector");

    Index filled = 1;    // basis columns present
    Index converged_from = 0; // columns 0..k-1 hold restarted Ritz data
    EigenPairs out;

    for (Index restart = 0; restart <= cfg.max_restarts; ++restart) {
        // grow the basis to (at most) m columns
        Index mm = filled;
        bool exhausted = false;
        for (Index j = converged_from; j < m; ++j) {
            w = op(V.col(j));
            ++out.matvecs;
            detail::orthogonalize(w, V, j + 1, orth_against, h);
            H.col(j).head(j + 1) = h.head(j + 1);
            const Scalar beta = w.norm();
            if (beta > Scalar(1e-13)) {
                H(j + 1, j) = beta;
                H(j, j + 1) = beta;
                V.col(j + 1) = w / beta;
            } else {
                H(j + 1, j) = 0;
                H(j, j + 1) = 0;
                if (!random_direction(j + 1)) {
                    mm = j + 1;
                    exhausted = true;
                    break;
                }
            }
            mm = j + 1;
        }

        // Rayleigh-Ritz on the current basis
        Matrix<Scalar> Hs = H.topLeftCorner(mm, mm)
                                .template selfadjointView<Eigen::Upper>();
        Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(Hs);
        const auto& theta = es.eigenvalues(); // ascending
        const auto& S = es.eigenvectors();

        const Index got = std::min(nev, mm);
        const Scalar beta_last = H(mm, mm - 1);
        bool est_ok = got == nev;
        for (Index i = 0; i < got; ++i) {
            const Index c = mm - 1 - i;
            const Scalar est = std::abs(beta_last * S(mm - 1, c));
            if (est > cfg.tol * std::max<Scalar>(1, std::abs(theta(c)))) est_ok = false;
        }

        if (est_ok || exhausted || restart == cfg.max_restarts) {
            out.values.resize(got);
            out.vectors.resize(n, got);
            for (Index i = 0; i < got; ++i) {
                const Index c = mm - 1 - i;
                out.values(i) = theta(c);
                out.vectors.col(i).noalias() = V.leftCols(mm) * S.col(c);
            }
            // verify against true residuals, not just the Krylov estimate
            out.max_residual = 0;
            for (Index i = 0; i < got; ++i) {
                const Vector<Scalar> r = op(out.vectors.col(i)) - out.values(i) * out.vectors.col(i);
                ++out.matvecs;
                out.max_residual = std::max(
                    out.max_residual,
                    r.norm() / std::max<Scalar>(1, std::abs(out.values(i))));
            }
            if (got == nev && out.max_residual <= cfg.tol) return out;
            if (exhausted && got == nev) return out; // basis spans the whole space
            if (restart == cfg.max_restarts || exhausted)
                throw NoConvergenceError(
                    "eigensolver: no convergence after " + std::to_string(restart) +
                        " restarts (residual " + std::to_string(out.max_residual) + ")",
                    out.max_residual);
        }

        // thick restart: keep the wanted Ritz vectors plus 25% extra
        Index keep = nev + std::max<Index>(1, (nev + 3) / 4);
        keep = std::min(keep, mm - 1);
        Matrix<Scalar> Y(n, keep);
        for (Index i = 0; i < keep; ++i)
            Y.col(i).noalias() = V.leftCols(mm) * S.col(mm - 1 - i);
        V.leftCols(keep) = Y;
        V.col(keep) = V.col(mm); // residual direction carries the new arrow
        H.setZero();
        for (Index i = 0; i < keep; ++i) H(i, i) = theta(mm - 1 - i);
        converged_from = keep;
        filled = keep + 1;
    }
    throw NoConvergenceError("eigensolver: unreachable", 0);
}

} // namespace pinvgcn
