#pragma once

#include <chrono>
#include <cstring>
#include <filesystem>
#include <string>

#include "pinvgcn/dataset.hpp"
#include "pinvgcn/laplacian.hpp"
#include "pinvgcn/sparse_graph.hpp"

namespace test_helpers {

using namespace pinvgcn;

inline SparseGraph triangle() {
    return SparseGraph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
}

inline SparseGraph single_edge() { return SparseGraph::from_edges(2, {{0, 1, 1.0}}); }

/// Two cliques of `size` nodes joined by one weak bridge 0 -- size.
inline SparseGraph two_cliques(Index size, Real bridge_weight = 1.0) {
    std::vector<SparseGraph::WeightedEdge> edges;
    for (Index c = 0; c < 2; ++c) {
        const Index base = c * size;
        for (Index i = 0; i < size; ++i)
            for (Index j = i + 1; j < size; ++j)
                edges.emplace_back(base + i, base + j, 1.0);
    }
    edges.emplace_back(0, size, bridge_weight);
    return SparseGraph::from_edges(2 * size, edges);
}

/// Bit-level equality of two dense arrays (shape + every byte).
template <class A, class B>
bool bits_equal(const A& a, const B& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(Real) * static_cast<std::size_t>(a.size())) == 0;
}

/// Unique path inside the build's temp space; removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("pinvgcn_test_" + std::to_string(
                                      std::chrono::steady_clock::now().time_since_epoch().count()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace test_helpers
