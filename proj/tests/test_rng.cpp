#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "otfuse/rng.hpp"

using namespace otfuse;

TEST_CASE("identical seed reproduces the stream bit for bit") {
    SeededStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.uniform() == b.uniform());
        REQUIRE(a.gaussian() == b.gaussian());
    }
}

TEST_CASE("different seeds diverge immediately") {
    SeededStream a(1), b(2);
    REQUIRE(a.uniform() != b.uniform());
}

TEST_CASE("gaussian moments at sigma 0.02") {
    SeededStream rng(2024);
    const int n = 1'000'000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gaussian(0.0, 0.02);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sumsq / n - mean * mean);
    REQUIRE(std::abs(mean) < 1e-4);
    REQUIRE(std::abs(sd - 0.02) < 0.02 * 0.02);
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
    SeededStream rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const double v = rng.uniform_pos();
        REQUIRE(v > 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("uniform_below is bounded and deterministic") {
    SeededStream a(99), b(99);
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.uniform_below(17);
        REQUIRE(x < 17);
        REQUIRE(x == b.uniform_below(17));
    }
}

TEST_CASE("derive gives independent reproducible streams") {
    SeededStream base(7);
    auto c1 = base.derive(1);
    auto c2 = base.derive(2);
    auto c1_again = base.derive(1);
    REQUIRE(c1.uniform() == c1_again.uniform());
    SeededStream c1_b = SeededStream(7).derive(1);
    c1_b.uniform();
    REQUIRE(c1.uniform() == c1_b.uniform());
    REQUIRE(c1.uniform() != c2.uniform());
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    SeededStream rng(13);
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 10; ++i) REQUIRE(sorted[i] == i);

    std::vector<int> w{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    SeededStream rng2(13);
    rng2.shuffle(w);
    REQUIRE(v == w);
}
