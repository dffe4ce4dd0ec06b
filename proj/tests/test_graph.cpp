#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "pinvgcn/gaussian_cloud.hpp"
#include "pinvgcn/laplacian.hpp"
#include "pinvgcn/random.hpp"
#include "pinvgcn/sparse_graph.hpp"
#include "pinvgcn/testing.hpp"

using namespace pinvgcn;
using test_helpers::single_edge;
using test_helpers::triangle;

TEST_CASE("degrees: triangle graph has d = (2, 2, 2)") {
    const Vec d = degrees(triangle());
    CHECK(d.size() == 3);
    for (Index i = 0; i < 3; ++i) CHECK(d(i) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("degrees: two-point cloud at distance sqrt(3), sigma = 1") {
    Mat P(2, 3);
    P << 0, 0, 0, 1, 1, 1;
    GaussianCloud cloud(P, 1.0);
    const Vec d = degrees(cloud);
    CHECK(d(0) == doctest::Approx(std::exp(-3.0)).epsilon(1e-14));
    CHECK(d(1) == doctest::Approx(std::exp(-3.0)).epsilon(1e-14));
}

TEST_CASE("degrees: 50-node Gaussian cloud matches dense kernel row sums") {
    Rng rng(3);
    Mat P = rng.uniform_vector(50 * 3, -2.0, 2.0).reshaped(50, 3);
    GaussianCloud cloud(P, 1.3);
    const Vec d = degrees(cloud);
    const Vec want = testing::dense_gaussian_kernel(P, 1.3).rowwise().sum();
    CHECK((d - want).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("unit_degree_vector examples") {
    const Vec u = unit_degree_vector(degrees(triangle()));
    for (Index i = 0; i < 3; ++i)
        CHECK(u(i) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));

    Vec d(2);
    d << 1.0, 4.0;
    const Vec u2 = unit_degree_vector(d);
    CHECK(u2(0) == doctest::Approx(1.0 / std::sqrt(5.0)));
    CHECK(u2(1) == doctest::Approx(2.0 / std::sqrt(5.0)));

    Vec bad(2);
    bad << 1.0, 0.0;
    CHECK_THROWS_AS(unit_degree_vector(bad), Error);
}

TEST_CASE("u0 is the eigenvector of the normalized adjacency to eigenvalue 1") {
    Rng rng(17);
    LaplacianOperator op(testing::random_connected_graph(60, rng));
    const Vec u0 = op.u0();
    CHECK((op.apply_normalized_adjacency(u0) - u0).norm() <= 1e-10);
    CHECK(u0.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((u0.array() > 0).all());
}

TEST_CASE("normalized adjacency: trivial examples") {
    LaplacianOperator tri(triangle());
    const Vec u0 = tri.u0();
    CHECK((tri.apply_normalized_adjacency(u0) - u0).norm() <= 1e-14);

    LaplacianOperator edge(single_edge());
    Mat e1 = Mat::Zero(2, 1);
    e1(0, 0) = 1.0;
    const Mat out = edge.apply_normalized_adjacency(e1);
    CHECK(out(0, 0) == doctest::Approx(0.0));
    CHECK(out(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("normalized adjacency on a cloud matches dense assembly") {
    Rng rng(5);
    const Index n = 100;
    Mat P = rng.uniform_vector(n * 3, -1.5, 1.5).reshaped(n, 3);
    GaussianCloud cloud(P, 0.9, 17);
    LaplacianOperator op(cloud);
    const Mat X = rng.uniform_vector(n * 4, -1.0, 1.0).reshaped(n, 4);
    const Mat got = op.apply_normalized_adjacency(X);
    const Mat want =
        testing::dense_normalized_adjacency(testing::dense_gaussian_kernel(P, 0.9)) * X;
    CHECK((got - want).norm() <= 1e-11 * want.norm());
}

TEST_CASE("blocked Gaussian matvec is independent of the block size") {
    Rng rng(21);
    const Index n = 83;
    Mat P = rng.uniform_vector(n * 3, -1.0, 1.0).reshaped(n, 3);
    const Mat X = rng.uniform_vector(n * 2, -1.0, 1.0).reshaped(n, 2);
    Mat reference;
    for (Index block : {Index(1), Index(7), Index(64), n}) {
        GaussianCloud cloud(P, 1.1, block);
        Mat Y(n, 2);
        cloud.apply_adjacency(X, Y);
        if (reference.size() == 0)
            reference = Y;
        else
            CHECK((Y - reference).norm() <= 1e-12 * reference.norm());
    }
}

TEST_CASE("adjacency application is symmetric: <Ax, y> = <x, Ay>") {
    Rng rng(29);
    LaplacianOperator ops[] = {
        LaplacianOperator(testing::random_connected_graph(40, rng)),
        LaplacianOperator(
            GaussianCloud(rng.uniform_vector(40 * 3, -1.0, 1.0).reshaped(40, 3), 1.0))};
    for (const auto& op : ops) {
        const Vec x = rng.uniform_vector(40, -1.0, 1.0);
        const Vec y = rng.uniform_vector(40, -1.0, 1.0);
        const Real lhs = op.apply_normalized_adjacency(x).col(0).dot(y);
        const Real rhs = x.dot(op.apply_normalized_adjacency(y).col(0));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * x.norm() * y.norm());
    }
}

TEST_CASE("spectral bounds: eigenvalues of the normalized adjacency lie in [-1, 1]") {
    Rng rng(31);
    SparseGraph g = testing::random_connected_graph(50, rng);
    const auto je =
        jacobi_eigendecomposition<Real>(testing::dense_normalized_adjacency(g.dense_adjacency()));
    CHECK(je.eigenvalues.minCoeff() >= -1.0 - 1e-12);
    CHECK(je.eigenvalues.maxCoeff() <= 1.0 + 1e-12);
    CHECK(je.eigenvalues.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deflated signless operator") {
    Rng rng(37);

    SUBCASE("x = u0 maps to zero") {
        LaplacianOperator op(testing::random_connected_graph(30, rng));
        CHECK(op.apply_deflated_signless(op.u0()).norm() <= 1e-12);
    }

    SUBCASE("triangle eigenvector (1, -1, 0) halves") {
        LaplacianOperator op(test_helpers::triangle());
        Vec x(3);
        x << 1.0, -1.0, 0.0;
        const Vec y = op.apply_deflated_signless(x);
        CHECK((y - 0.5 * x).norm() <= 1e-14);
    }

    SUBCASE("matches dense I + A_hat - 2 u0 u0^T") {
        SparseGraph g = testing::random_connected_graph(45, rng);
        LaplacianOperator op(g);
        const Mat Ahat = testing::dense_normalized_adjacency(g.dense_adjacency());
        const Mat D = Mat::Identity(45, 45) + Ahat - 2.0 * op.u0() * op.u0().transpose();
        const Mat X = rng.uniform_vector(45 * 3, -1.0, 1.0).reshaped(45, 3);
        CHECK((op.apply_deflated_signless(X) - D * X).norm() <= 1e-12 * X.norm());
    }
}

TEST_CASE("connectivity check") {
    CHECK(is_connected(triangle()));
    const SparseGraph disjoint =
        SparseGraph::from_edges(4, {{0, 1, 1.0}, {2, 3, 1.0}});
    CHECK_FALSE(is_connected(disjoint));
    CHECK_THROWS_AS(LaplacianOperator{disjoint}, DisconnectedGraphError);

    Rng rng(41);
    CHECK(is_connected(testing::random_connected_graph(70, rng)));
}

TEST_CASE("graph construction rejects invalid edges") {
    using E = std::vector<SparseGraph::WeightedEdge>;
    CHECK_THROWS_AS(SparseGraph::from_edges(2, E{{0, 0, 1.0}}), Error); // loop
    CHECK_THROWS_AS(SparseGraph::from_edges(2, E{{0, 1, -1.0}}), Error); // bad weight
    CHECK_THROWS_AS(SparseGraph::from_edges(2, E{{0, 1, 1.0}, {1, 0, 2.0}}), Error); // dup
    CHECK_THROWS_AS(SparseGraph::from_edges(2, E{{0, 2, 1.0}}), Error); // out of range
}

TEST_CASE("edge list round trip and parse errors") {
    std::istringstream in("# toy triangle\n0 1 1.0\n1 2 1.0\n0 2 1.0\n");
    const SparseGraph g = read_edge_list(in);
    CHECK(g.nodes() == 3);
    CHECK(g.stored_entries() == 6);

    std::istringstream bad("0 1\n");
    CHECK_THROWS_AS(read_edge_list(bad), ParseError);
}

TEST_CASE("cloud validation") {
    Mat same(2, 3);
    same << 1, 2, 3, 1, 2, 3;
    CHECK_THROWS_AS(GaussianCloud(same, 1.0), Error);

    Mat one(1, 3);
    one << 0, 0, 0;
    CHECK_THROWS_AS(GaussianCloud(one, 1.0), Error);

    Mat ok(2, 3);
    ok << 0, 0, 0, 1, 0, 0;
    CHECK_THROWS_AS(GaussianCloud(ok, -1.0), Error);

    // kernel underflow to exact zero for extremely distant points
    Mat far(3, 3);
    far << 0, 0, 0, 1e6, 0, 0, 2e6, 0, 0;
    GaussianCloud cloud(far, 1.0);
    CHECK_THROWS_AS(degrees(cloud), IsolatedNodeError);
}
