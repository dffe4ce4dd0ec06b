#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "helpers.hpp"
#include "pinvgcn/filters.hpp"
#include "pinvgcn/testing.hpp"

using namespace pinvgcn;

namespace {

FilterBank toy_bank(Index n, Index r, std::uint64_t seed) {
    Rng rng(seed);
    SparseGraph g = testing::random_connected_graph(n, rng);
    LaplacianOperator op(g);
    EigSolveConfig cfg;
    cfg.tol = 1e-12;
    cfg.seed = rng.next_u64();
    return FilterBank(spectral_basis(op, r, cfg));
}

} // namespace

TEST_CASE("filter_value: branch structure") {
    FilterBank bank = toy_bank(30, 4, 1);
    const SpectralBasis& b = bank.basis();
    const Real l1 = b.eigengap();
    const Real lr = b.lambda(b.r - 1);

    CHECK(filter_value(1, 1, 1, b, b.lambda(0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(filter_value(0.7, 1, 1, b, 0.0) == 0.7);
    CHECK(filter_value(0, 1, 0, b, lr / 2) == doctest::Approx(2.0 * l1 / lr));
    CHECK(filter_value(0, 0, 0.3, b, std::min(2.0, lr + 0.1)) ==
          doctest::Approx(l1 * 0.3));
    CHECK_THROWS_AS(filter_value(0, 0, 0, b, -0.1), Error);
}

TEST_CASE("conv_apply: orthogonality of the parts on u0 and u1") {
    FilterBank bank = toy_bank(40, 5, 2);
    const SpectralBasis& b = bank.basis();

    const Mat u0 = b.u0;
    CHECK((bank.conv_apply(1, u0) - u0).norm() <= 1e-10);
    CHECK(bank.conv_apply(2, u0).norm() <= 1e-10);
    CHECK(bank.conv_apply(3, u0).norm() <= 1e-9);

    const Mat u1 = b.U.col(0);
    CHECK((bank.conv_apply(2, u1) - u1).norm() <= 1e-9); // lambda_1/lambda_1 = 1
    CHECK(bank.conv_apply(1, u1).norm() <= 1e-10);
    CHECK(bank.conv_apply(3, u1).norm() <= 1e-9);
}

TEST_CASE("conv_apply matches dense matrices from the Jacobi oracle") {
    const auto st = testing::filter_oracle_stats(80, 4, 33);
    CHECK(st.instances == 4);
    CHECK(st.max_conv_err <= 1e-10);
    CHECK(st.max_feature_map_err <= 1e-10);
    CHECK(st.max_pinv_norm_err <= 1e-8);
}

TEST_CASE("feature_map: zero-impulse passthrough and high-pass scaling") {
    FilterBank bank = toy_bank(35, 4, 3);
    const SpectralBasis& b = bank.basis();
    const Index n = b.n;

    SUBCASE("identity weights pass u0 through") {
        const Mat I1 = Mat::Identity(1, 1);
        const Mat Y = bank.feature_map(b.u0, I1, I1, I1);
        CHECK((Y - b.u0).norm() <= 1e-10);
    }

    SUBCASE("X orthogonal to the retained spectrum scales by lambda_1") {
        Rng rng(4);
        Mat X = rng.uniform_vector(n, -1.0, 1.0);
        X -= b.u0 * (b.u0.transpose() * X);
        X -= b.U * (b.U.transpose() * X);
        const Mat Z = Mat::Zero(1, 1);
        const Mat I1 = Mat::Identity(1, 1);
        const Mat Y = bank.feature_map(X, Z, Z, I1);
        CHECK((Y - b.eigengap() * X).norm() <= 1e-10 * X.norm());
    }

    SUBCASE("equals the three-term sum of conv_apply") {
        Rng rng(5);
        const Index c = 4, cp = 3;
        const Mat X = rng.uniform_vector(n * c, -1.0, 1.0).reshaped(n, c);
        std::array<Mat, 3> W;
        for (auto& Wk : W) Wk = rng.uniform_vector(c * cp, -1.0, 1.0).reshaped(c, cp);
        const Mat got = bank.feature_map(X, W[0], W[1], W[2]);
        Mat want = Mat::Zero(n, cp);
        for (int k = 0; k < 3; ++k) want += bank.conv_apply(k + 1, X) * W[static_cast<std::size_t>(k)];
        CHECK((got - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }

    SUBCASE("dimension mismatches are rejected") {
        const Mat X = Mat::Zero(n, 2);
        const Mat W_good = Mat::Zero(2, 3), W_bad = Mat::Zero(4, 3);
        CHECK_THROWS_AS(bank.feature_map(X, W_bad, W_good, W_good), DimensionError);
        CHECK_THROWS_AS(bank.feature_map(Mat::Zero(n + 1, 2), W_good, W_good, W_good),
                        DimensionError);
        CHECK_THROWS_AS(bank.conv_apply(1, Mat::Zero(n + 1, 2)), DimensionError);
    }
}

TEST_CASE("dense_conv_matrix: resolution of identity and rank-1 structure") {
    FilterBank bank = toy_bank(45, 6, 6);
    const Mat K1 = bank.dense_conv_matrix(1);
    const Mat K2 = bank.dense_conv_matrix(2);
    const Mat K3 = bank.dense_conv_matrix(3);
    const Index n = bank.size();

    CHECK(K1.trace() == doctest::Approx(1.0).epsilon(1e-12));
    // rank 1: K1^2 = K1 and all columns proportional to u0
    CHECK((K1 * K1 - K1).norm() <= 1e-12);

    const Mat UUt = bank.basis().U * bank.basis().U.transpose();
    CHECK((K3 / bank.eigengap() + K1 + UUt - Mat::Identity(n, n)).norm() <= 1e-12);

    // projector algebra: K2 and K3 annihilate each other's ranges
    CHECK((K2 * K3).norm() <= 1e-9);
    CHECK((K3 * K2).norm() <= 1e-9);
    CHECK((K1 * K2).norm() <= 1e-10);
}

TEST_CASE("orthogonality invariant: parts 2 and 3 output orthogonal to u0") {
    FilterBank bank = toy_bank(50, 5, 7);
    Rng rng(8);
    const Mat X = rng.uniform_vector(50 * 6, -1.0, 1.0).reshaped(50, 6);
    const Vec u0 = bank.basis().u0;
    CHECK((u0.transpose() * bank.conv_apply(2, X)).cwiseAbs().maxCoeff() <=
          1e-9 * X.norm());
    CHECK((u0.transpose() * bank.conv_apply(3, X)).cwiseAbs().maxCoeff() <=
          1e-9 * X.norm());
}

TEST_CASE("sign invariance: flipping a column of U leaves outputs unchanged") {
    FilterBank bank = toy_bank(40, 5, 9);
    SpectralBasis flipped = bank.basis();
    flipped.U.col(2) = -flipped.U.col(2);
    FilterBank bank2(std::move(flipped));

    Rng rng(10);
    const Mat X = rng.uniform_vector(40 * 3, -1.0, 1.0).reshaped(40, 3);
    for (int k = 1; k <= 3; ++k)
        CHECK((bank.conv_apply(k, X) - bank2.conv_apply(k, X)).norm() <= 1e-12);

    std::array<Mat, 3> W;
    for (auto& Wk : W) Wk = rng.uniform_vector(3 * 2, -1.0, 1.0).reshaped(3, 2);
    CHECK((bank.feature_map(X, W[0], W[1], W[2]) - bank2.feature_map(X, W[0], W[1], W[2]))
              .norm() <= 1e-12);
}

TEST_CASE("spectral action: conv_apply(2) scales retained eigenvectors by lambda_1/lambda_i") {
    FilterBank bank = toy_bank(40, 6, 11);
    const SpectralBasis& b = bank.basis();
    for (Index i = 0; i < b.r; ++i) {
        const Mat out = bank.conv_apply(2, b.U.col(i));
        const Real scale = b.eigengap() / b.lambda(i);
        CHECK((out - scale * b.U.col(i)).norm() <= 1e-9);
    }
}

TEST_CASE("filter response CSV export") {
    FilterBank bank = toy_bank(30, 3, 12);
    std::stringstream out;
    write_filter_response_csv(out, bank.basis(), 1.0, 2.0, 0.5, 10);
    std::string header;
    std::getline(out, header);
    CHECK(header == "lambda,phi");
    int lines = 0;
    std::string line;
    double prev = -1.0;
    while (std::getline(out, line)) {
        const auto comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        const double x = std::stod(line.substr(0, comma));
        CHECK(x > prev); // strictly ascending, no duplicates
        prev = x;
        ++lines;
    }
    CHECK(lines >= 11);
}
