#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "helpers.hpp"
#include "pinvgcn/hypergraph.hpp"
#include "pinvgcn/testing.hpp"

using namespace pinvgcn;

namespace {

CategoricalSchema one_categorical_column() {
    CategoricalSchema s;
    s.columns.push_back({"attr", ColumnRole::Categorical, 10});
    s.columns.push_back({"class", ColumnRole::Label, 10});
    return s;
}

} // namespace

TEST_CASE("from_categorical_table: values (a, a, b, b) give hyperedges {0,1} and {2,3}") {
    TableRows rows = {{"a", "x"}, {"a", "x"}, {"b", "y"}, {"b", "y"}};
    const auto ch = from_categorical_table(rows, one_categorical_column());
    const Hypergraph& hg = ch.hypergraph;
    REQUIRE(hg.edge_count() == 2);
    CHECK(hg.members(0) == std::vector<Index>{0, 1});
    CHECK(hg.members(1) == std::vector<Index>{2, 3});
    CHECK(hg.weight(0) == 1.0);
    CHECK(ch.labels == std::vector<int>{0, 0, 1, 1});
    CHECK(ch.class_names == std::vector<std::string>{"x", "y"});
}

TEST_CASE("from_categorical_table: continuous binning puts the max in the last bin") {
    CategoricalSchema s;
    s.columns.push_back({"v", ColumnRole::Continuous, 10});
    s.columns.push_back({"class", ColumnRole::Label, 10});
    TableRows rows = {{"0", "x"}, {"0.05", "x"}, {"0.95", "y"}, {"1.0", "y"}};
    const auto ch = from_categorical_table(rows, s);
    REQUIRE(ch.hypergraph.edge_count() == 2); // bins 0 and 9 only
    CHECK(ch.hypergraph.members(0) == std::vector<Index>{0, 1});
    CHECK(ch.hypergraph.members(1) == std::vector<Index>{2, 3});
}

TEST_CASE("from_categorical_table: binary column keeps only true samples") {
    CategoricalSchema s;
    s.columns.push_back({"flag", ColumnRole::Binary, 10});
    s.columns.push_back({"other", ColumnRole::Categorical, 10});
    s.columns.push_back({"class", ColumnRole::Label, 10});
    TableRows rows = {{"1", "a", "x"}, {"0", "a", "x"}, {"1", "a", "y"}, {"0", "a", "y"}};
    const auto ch = from_categorical_table(rows, s);
    REQUIRE(ch.hypergraph.edge_count() == 2); // flag-true edge + the single `a` edge
    CHECK(ch.hypergraph.members(0) == std::vector<Index>{0, 2});
    CHECK(ch.hypergraph.members(1) == std::vector<Index>{0, 1, 2, 3});
}

TEST_CASE("from_categorical_table: attributes with missing values are skipped") {
    CategoricalSchema s;
    s.columns.push_back({"broken", ColumnRole::Categorical, 10});
    s.columns.push_back({"fine", ColumnRole::Categorical, 10});
    s.columns.push_back({"class", ColumnRole::Label, 10});
    TableRows rows = {{"a", "c", "x"}, {"?", "c", "x"}, {"a", "d", "y"}, {"b", "d", "y"}};
    const auto ch = from_categorical_table(rows, s);
    CHECK(ch.skipped_columns == std::vector<std::string>{"broken"});
    REQUIRE(ch.hypergraph.edge_count() == 2); // only `fine` contributes
}

TEST_CASE("from_categorical_table: error paths") {
    // dropping every hyperedge (all values distinct)
    TableRows singletons = {{"a", "x"}, {"b", "x"}, {"c", "y"}, {"d", "y"}};
    CHECK_THROWS_AS(from_categorical_table(singletons, one_categorical_column()),
                    EmptyHypergraphError);

    // sample left in no hyperedge
    TableRows isolated = {{"a", "x"}, {"a", "x"}, {"c", "y"}};
    CHECK_THROWS_AS(from_categorical_table(isolated, one_categorical_column()),
                    IsolatedNodeError);

    // missing label
    TableRows no_label = {{"a", "?"}, {"a", "x"}};
    CHECK_THROWS_AS(from_categorical_table(no_label, one_categorical_column()), Error);

    // ragged row
    TableRows ragged = {{"a", "x"}, {"a"}};
    CHECK_THROWS_AS(from_categorical_table(ragged, one_categorical_column()), Error);
}

TEST_CASE("from_categorical_table is deterministic") {
    TableRows rows = {{"b", "x"}, {"a", "x"}, {"b", "y"}, {"a", "y"}, {"c", "x"}, {"c", "y"}};
    const auto a = from_categorical_table(rows, one_categorical_column());
    const auto b = from_categorical_table(rows, one_categorical_column());
    REQUIRE(a.hypergraph.edge_count() == b.hypergraph.edge_count());
    // hyperedge order follows first appearance: b, a, c
    CHECK(a.hypergraph.members(0) == std::vector<Index>{0, 2});
    for (Index e = 0; e < a.hypergraph.edge_count(); ++e)
        CHECK(a.hypergraph.members(e) == b.hypergraph.members(e));
}

TEST_CASE("normalized incidence examples") {
    SUBCASE("single hyperedge over all nodes") {
        const Index n = 5;
        Hypergraph hg = Hypergraph::from_incidence_lists(n, {{0, 1, 2, 3, 4}}, Vec::Ones(1));
        const Mat Ht = normalized_incidence(hg);
        REQUIRE(Ht.rows() == n);
        REQUIRE(Ht.cols() == 1);
        for (Index i = 0; i < n; ++i)
            CHECK(Ht(i, 0) == doctest::Approx(1.0 / std::sqrt(static_cast<Real>(n))));
    }

    SUBCASE("two disjoint hyperedges of sizes 2 and 3") {
        Hypergraph hg = Hypergraph::from_incidence_lists(5, {{0, 1}, {2, 3, 4}}, Vec::Ones(2));
        const Mat Ht = normalized_incidence(hg);
        CHECK(Ht(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(Ht(2, 1) == doctest::Approx(1.0 / std::sqrt(3.0)));
        CHECK(Ht(0, 1) == 0.0);
    }

    SUBCASE("I - H H^T equals the clique-expansion Laplacian") {
        Rng rng(5);
        Hypergraph hg = testing::random_hypergraph(40, 8, rng);
        const Mat Ht = normalized_incidence(hg);
        const Mat L = Mat::Identity(40, 40) - Ht * Ht.transpose();
        const Mat L_dense = testing::dense_laplacian(clique_expansion_dense(hg));
        CHECK((L - L_dense).norm() <= 1e-12);
    }

    SUBCASE("sqrt-degree vector is a unit left singular vector") {
        Rng rng(6);
        Hypergraph hg = testing::random_hypergraph(30, 6, rng);
        const Mat Ht = normalized_incidence(hg);
        const Vec u0 = unit_degree_vector(node_degrees(hg));
        // H H^T u0 = u0  <=>  singular value 1
        CHECK((Ht * (Ht.transpose() * u0) - u0).norm() <= 1e-12);
    }
}

TEST_CASE("clique expansion examples") {
    SUBCASE("single hyperedge over 3 nodes") {
        Hypergraph hg = Hypergraph::from_incidence_lists(3, {{0, 1, 2}}, Vec::Ones(1));
        const Mat A = clique_expansion_dense(hg);
        CHECK((A - Mat::Constant(3, 3, 1.0 / 3.0)).norm() <= 1e-15);
    }

    SUBCASE("two disjoint pair edges make a block diagonal") {
        Hypergraph hg = Hypergraph::from_incidence_lists(4, {{0, 1}, {2, 3}}, Vec::Ones(2));
        const Mat A = clique_expansion_dense(hg);
        CHECK(A(0, 1) == doctest::Approx(0.5));
        CHECK(A(0, 0) == doctest::Approx(0.5)); // loops included
        CHECK(A(0, 2) == 0.0);
    }

    SUBCASE("row sums equal the node degrees") {
        Rng rng(7);
        Hypergraph hg = testing::random_hypergraph(50, 9, rng);
        const Vec row_sums = clique_expansion_dense(hg).rowwise().sum();
        CHECK((row_sums - node_degrees(hg)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("hypergraph_spectral_basis: rank limits") {
    Hypergraph all = Hypergraph::from_incidence_lists(4, {{0, 1, 2, 3}}, Vec::Ones(1));
    CHECK_THROWS_AS(hypergraph_spectral_basis(all, 1), RankTooLargeError);

    // duplicated hyperedge makes the incidence rank deficient
    Hypergraph dup =
        Hypergraph::from_incidence_lists(4, {{0, 1}, {0, 1}, {2, 3}, {0, 2}}, Vec::Ones(4));
    CHECK_THROWS_AS(hypergraph_spectral_basis(dup, 3), RankDeficientError);
}

TEST_CASE("hypergraph_spectral_basis: unit-eigenspace completion for deficient incidence") {
    // two complete categorical attributes partition the nodes twice, leaving
    // one exact dependency: rank(H) = |E| - 1
    TableRows rows;
    for (int i = 0; i < 12; ++i)
        rows.push_back({i % 2 ? "a" : "b", i % 3 ? "x" : "y", i < 6 ? "c0" : "c1"});
    CategoricalSchema schema;
    schema.columns.push_back({"first", ColumnRole::Categorical, 10});
    schema.columns.push_back({"second", ColumnRole::Categorical, 10});
    schema.columns.push_back({"class", ColumnRole::Label, 10});
    const Hypergraph hg = from_categorical_table(rows, schema).hypergraph;
    const Index r = hg.edge_count() - 1;

    CHECK_THROWS_AS(hypergraph_spectral_basis(hg, r), RankDeficientError);

    const SpectralBasis b = hypergraph_spectral_basis(hg, r, true);
    CHECK(b.lambda(r - 1) == 1.0); // exact padded eigenvalue
    CHECK((b.U.transpose() * b.U - Mat::Identity(r, r)).norm() <= 1e-10);
    CHECK((b.u0.transpose() * b.U).cwiseAbs().maxCoeff() <= 1e-10);

    // padded columns are genuine eigenvalue-1 eigenvectors of the Laplacian
    const Mat L = testing::dense_laplacian(clique_expansion_dense(hg));
    for (Index i = 0; i < r; ++i) {
        const Vec resid = L * b.U.col(i) - b.lambda(i) * b.U.col(i);
        CHECK(resid.norm() <= 1e-10);
    }

    // deterministic: rerun is bit-identical
    const SpectralBasis c = hypergraph_spectral_basis(hg, r, true);
    CHECK(test_helpers::bits_equal(b.U, c.U));
    CHECK(test_helpers::bits_equal(b.lambda, c.lambda));
}

TEST_CASE("hypergraph_spectral_basis: Gram route matches the dense oracle") {
    Rng rng(9);
    Hypergraph hg = testing::random_hypergraph(60, 8, rng);
    const Index r = hg.edge_count() - 1;
    const SpectralBasis b = hypergraph_spectral_basis(hg, r);

    const auto je =
        jacobi_eigendecomposition<Real>(testing::dense_laplacian(clique_expansion_dense(hg)));
    CHECK(std::abs(je.eigenvalues(0)) <= 1e-10);
    for (Index i = 0; i < r; ++i)
        CHECK(b.lambda(i) == doctest::Approx(je.eigenvalues(i + 1)).epsilon(1e-10));
    // remaining eigenvalues all equal 1
    for (Index i = r + 1; i < 60; ++i)
        CHECK(je.eigenvalues(i) == doctest::Approx(1.0).epsilon(1e-10));

    // basis invariants
    CHECK((b.U.transpose() * b.U - Mat::Identity(r, r)).norm() <= 1e-8);
    CHECK((b.u0.transpose() * b.U).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("hypergraph oracle suite") {
    const auto st = testing::hypergraph_oracle_stats(120, 10, 6, 77);
    CHECK(st.instances == 6);
    CHECK(st.wrong_unit_counts == 0);
    CHECK(st.max_eigenvalue_err <= 1e-10);
    CHECK(st.max_u0_err <= 1e-10);
}

TEST_CASE("hypergraph validation and connectivity") {
    CHECK_THROWS_AS(Hypergraph::from_incidence_lists(3, {{0}}, Vec::Ones(1)), Error);
    CHECK_THROWS_AS(Hypergraph::from_incidence_lists(3, {{0, 1}}, Vec::Ones(1)),
                    IsolatedNodeError);
    CHECK_THROWS_AS(Hypergraph::from_incidence_lists(2, {}, Vec()), EmptyHypergraphError);

    Hypergraph connected = Hypergraph::from_incidence_lists(4, {{0, 1}, {1, 2, 3}}, Vec::Ones(2));
    CHECK(is_connected(connected));
    Hypergraph split = Hypergraph::from_incidence_lists(4, {{0, 1}, {2, 3}}, Vec::Ones(2));
    CHECK_FALSE(is_connected(split));
    CHECK_THROWS_AS(hypergraph_spectral_basis(split, 1), NumericallyDisconnectedError);
}

TEST_CASE("hypergraph text serialization round trip") {
    Rng rng(12);
    Hypergraph hg = testing::random_hypergraph(25, 6, rng);
    std::stringstream buf;
    save_hypergraph(buf, hg);
    const Hypergraph back = load_hypergraph(buf);
    REQUIRE(back.nodes() == hg.nodes());
    REQUIRE(back.edge_count() == hg.edge_count());
    for (Index e = 0; e < hg.edge_count(); ++e) {
        CHECK(back.members(e) == hg.members(e));
        CHECK(back.weight(e) == hg.weight(e));
    }

    std::stringstream junk("not a hypergraph");
    CHECK_THROWS_AS(load_hypergraph(junk), Error);
}
