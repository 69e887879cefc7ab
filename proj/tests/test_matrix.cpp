#include <catch2/catch_amalgamated.hpp>

#include "otfuse/matrix.hpp"
#include "otfuse/rng.hpp"

using namespace otfuse;

namespace {

Matrix random_matrix(SeededStream& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian(0.0, scale);
    return m;
}

// Independent oracle: naive triple loop.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
            out(i, j) = s;
        }
    return out;
}

}  // namespace

TEST_CASE("matmul identity") {
    auto b = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
    auto out = matmul(Matrix::identity(3), b);
    REQUIRE(max_abs_diff(out, b) == 0.0);
}

TEST_CASE("matmul hand example") {
    auto a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    auto b = Matrix::from_rows({{1.0}, {1.0}});
    auto out = matmul(a, b);
    REQUIRE(out(0, 0) == 3.0);
    REQUIRE(out(1, 0) == 7.0);
}

TEST_CASE("matmul matches naive loop oracle") {
    SeededStream rng(11);
    auto a = random_matrix(rng, 5, 4);
    auto b = random_matrix(rng, 4, 3);
    REQUIRE(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-14);
}

TEST_CASE("matmul rejects dimension mismatch with both shapes") {
    auto a = Matrix(2, 3);
    auto b = Matrix(2, 3);
    REQUIRE_THROWS_WITH(matmul(a, b),
                        Catch::Matchers::ContainsSubstring("2x3"));
}

TEST_CASE("matmul associativity on random triples") {
    SeededStream rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        auto a = random_matrix(rng, 4, 5);
        auto b = random_matrix(rng, 5, 3);
        auto c = random_matrix(rng, 3, 6);
        auto left = matmul(matmul(a, b), c);
        auto right = matmul(a, matmul(b, c));
        double scale = 0.0;
        for (std::size_t i = 0; i < left.size(); ++i)
            scale = std::max(scale, std::abs(left.data()[i]));
        REQUIRE(max_abs_diff(left, right) <= 1e-9 * std::max(scale, 1.0));
    }
}

TEST_CASE("softmax uniform row") {
    auto out = softmax_rows(Matrix::from_rows({{0.0, 0.0, 0.0}}));
    for (std::size_t j = 0; j < 3; ++j) REQUIRE_THAT(out(0, j), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("softmax closed form") {
    auto out = softmax_rows(Matrix::from_rows({{std::log(2.0), 0.0}}));
    REQUIRE_THAT(out(0, 0), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    REQUIRE_THAT(out(0, 1), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("softmax shift invariance") {
    SeededStream rng(5);
    auto x = random_matrix(rng, 1, 6);
    auto shifted = x;
    for (double& v : shifted.values()) v += 123.456;
    REQUIRE(max_abs_diff(softmax_rows(x), softmax_rows(shifted)) < 1e-14);
}

TEST_CASE("softmax rows sum to one, large magnitudes included") {
    SeededStream rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        Matrix m = random_matrix(rng, 4, 7, 1.0);
        if (rep % 2 == 0) {
            for (double& v : m.values()) v *= 700.0;
        }
        auto s = softmax_rows(m);
        for (std::size_t i = 0; i < s.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < s.cols(); ++j) {
                sum += s(i, j);
                REQUIRE(s(i, j) >= 0.0);
            }
            REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
        }
    }
}

TEST_CASE("mean_rows matches naive average") {
    SeededStream rng(9);
    auto m = random_matrix(rng, 7, 5);
    auto mean = mean_rows(m);
    for (std::size_t j = 0; j < 5; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 7; ++i) s += m(i, j);
        REQUIRE_THAT(mean(0, j), Catch::Matchers::WithinAbs(s / 7.0, 1e-12));
    }
}
