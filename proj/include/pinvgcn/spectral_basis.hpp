#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "pinvgcn/errors.hpp"
#include "pinvgcn/lanczos.hpp"
#include "pinvgcn/laplacian.hpp"
#include "pinvgcn/types.hpp"

namespace pinvgcn {

/// The r smallest nonzero Laplacian eigenpairs plus the known trivial
/// eigenvector; the single input all spectral filters consume.
struct SpectralBasis {
    Index n = 0;
    Index r = 0;
    Vec u0;     // unit trivial eigenvector
    Vec lambda; // ascending, in (0, 2)
    Mat U;      // n x r, column-orthonormal, orthogonal to u0
    Real tol = 0;

    Real eigengap() const { return lambda(0); }
};

/// Krylov route: largest eigenpairs of the deflated signless operator,
/// recovered via lambda_i = 2 - mu_{i-1}. Eigenvectors carry over unchanged.
inline SpectralBasis spectral_basis(const LaplacianOperator& op, Index r,
                                    const EigSolveConfig& cfg) {
    const Index n = op.rows();
    require(r >= 1, "spectral_basis: need r >= 1");
    require(r + 1 <= n, "spectral_basis: r + 1 must not exceed n");

    Mat orth = op.u0();
    EigenPairs pairs = largest_eigenpairs(
        [&](ConstVecRef x) -> Vec { return op.apply_deflated_signless(x); }, n, r,
        cfg, orth);

    SpectralBasis b;
    b.n = n;
    b.r = r;
    b.u0 = op.u0();
    b.tol = cfg.tol;
    b.lambda = (2.0 - pairs.values.array()).matrix(); // ascending
    b.U = std::move(pairs.vectors);

    if (b.lambda(0) <= cfg.tol)
        throw NumericallyDisconnectedError(
            "spectral_basis: eigengap " + std::to_string(b.lambda(0)) +
            " below tolerance; graph is numerically disconnected");
    require(b.lambda(r - 1) < 2.0,
            "spectral_basis: largest recovered eigenvalue reached 2 (bipartite graph?)");
    return b;
}

namespace detail {

constexpr char kBasisMagic[8] = {'P', 'G', 'C', 'N', 'B', 'A', 'S', '1'};

template <class T>
void write_raw(std::ostream& out, const T* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(T)));
}

template <class T>
void read_raw(std::istream& in, T* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(count * sizeof(T)));
    require(static_cast<std::size_t>(in.gcount()) == count * sizeof(T),
            "basis file truncated");
}

} // namespace detail

/// Binary container: header (n, r, tol), lambda, u0, U column-major.
/// Round-trips bit-exactly (native little-endian doubles).
inline void save_spectral_basis(std::ostream& out, const SpectralBasis& b) {
    detail::write_raw(out, detail::kBasisMagic, 8);
    const std::int64_t n = b.n, r = b.r;
    detail::write_raw(out, &n, 1);
    detail::write_raw(out, &r, 1);
    detail::write_raw(out, &b.tol, 1);
    detail::write_raw(out, b.lambda.data(), static_cast<std::size_t>(b.r));
    detail::write_raw(out, b.u0.data(), static_cast<std::size_t>(b.n));
    detail::write_raw(out, b.U.data(), static_cast<std::size_t>(b.n * b.r));
}

inline void save_spectral_basis(const std::string& path, const SpectralBasis& b) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open basis file for writing: " + path);
    save_spectral_basis(out, b);
    require(static_cast<bool>(out), "failed writing basis file: " + path);
}

inline SpectralBasis load_spectral_basis(std::istream& in) {
    char magic[8];
    detail::read_raw(in, magic, 8);
    require(std::memcmp(magic, detail::kBasisMagic, 8) == 0, "not a basis file");
    std::int64_t n = 0, r = 0;
    detail::read_raw(in, &n, 1);
    detail::read_raw(in, &r, 1);
    require(n >= 2 && r >= 1 && r < n, "basis file has invalid header");
    SpectralBasis b;
    b.n = static_cast<Index>(n);
    b.r = static_cast<Index>(r);
    detail::read_raw(in, &b.tol, 1);
    b.lambda.resize(b.r);
    b.u0.resize(b.n);
    b.U.resize(b.n, b.r);
    detail::read_raw(in, b.lambda.data(), static_cast<std::size_t>(b.r));
    detail::read_raw(in, b.u0.data(), static_cast<std::size_t>(b.n));
    detail::read_raw(in, b.U.data(), static_cast<std::size_t>(b.n * b.r));
    return b;
}

inline SpectralBasis load_spectral_basis(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open basis file: " + path);
    return load_spectral_basis(in);
}

} // namespace pinvgcn
