#include <doctest.h>

#include <cmath>

#include "pairlab/math.hpp"
#include "pairlab/rng.hpp"

using namespace pairlab;

TEST_CASE("normal quantile matches reference values") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
    CHECK(normal_quantile(0.0001) == doctest::Approx(-3.719016485455709).epsilon(1e-12));
    CHECK_THROWS_AS(normal_quantile(0.0), numeric_error);
    CHECK_THROWS_AS(normal_quantile(1.0), numeric_error);
}

TEST_CASE("normal quantile round-trips through the cdf") {
    for (double p : {1e-8, 1e-4, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0 - 1e-6}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    }
}

TEST_CASE("standard normal moments") {
    CHECK(std_normal_moment(0) == 1.0);
    CHECK(std_normal_moment(1) == 0.0);
    CHECK(std_normal_moment(2) == 1.0);
    CHECK(std_normal_moment(3) == 0.0);
    CHECK(std_normal_moment(4) == 3.0);
    CHECK(std_normal_moment(6) == 15.0);
}

TEST_CASE("polynomial evaluation uses ascending coefficients") {
    Polynomial p{1.0, -2.0, 3.0};  // 1 - 2x + 3x^2
    CHECK(p(0.0) == 1.0);
    CHECK(p(2.0) == doctest::Approx(9.0));
    Polynomial empty;
    CHECK(empty(5.0) == 0.0);
}

TEST_CASE("symmetric square root reproduces the matrix") {
    // Unit diagonal, all off-diagonals -0.3 (eigenvalues 0.1, 1.3, 1.3, 1.3).
    std::vector<double> m(16, -0.3);
    for (int i = 0; i < 4; ++i) m[i * 4 + i] = 1.0;
    auto root = symmetric_sqrt(m, 4);
    // root * root == m
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += root[i * 4 + k] * root[k * 4 + j];
            CHECK(acc == doctest::Approx(m[i * 4 + j]).epsilon(1e-10));
        }
    }
}

TEST_CASE("symmetric square root rejects indefinite matrices") {
    std::vector<double> m = {1.0, 0.99, 0.99, 1.0};
    CHECK_NOTHROW(symmetric_sqrt(m, 2));
    std::vector<double> bad = {1.0, 1.2, 1.2, 1.0};  // eigenvalue -0.2
    CHECK_THROWS_AS(symmetric_sqrt(bad, 2), spec_error);
}

TEST_CASE("splitmix streams are deterministic and children are order-free") {
    SplitMix64 a(42), b(42);
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(SplitMix64::child_seed(7, 3) == SplitMix64::child_seed(7, 3));
    CHECK(SplitMix64::child_seed(7, 3) != SplitMix64::child_seed(7, 4));
    CHECK(SplitMix64::child_seed(8, 3) != SplitMix64::child_seed(7, 3));
}

TEST_CASE("uniform draws live strictly inside (0,1) and normals have sane moments") {
    SplitMix64 rng(123);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = rng.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        double z = rng.next_normal();
        sum += z;
        sum_sq += z * z;
    }
    double mean = sum / n;
    double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("kahan summation keeps cancellation error tiny") {
    KahanSum s;
    for (int i = 0; i < 100000; ++i) {
        s.add(1e-10);
        s.add(1.0);
        s.add(-1.0);
    }
    CHECK(s.value() == doctest::Approx(1e-5).epsilon(1e-12));
}
