#include <doctest.h>

#include <cmath>
#include <vector>

#include "ppmatch/rng.hpp"

using namespace ppmatch;

TEST_CASE("identical seeds reproduce identical draws") {
    Pcg64 a(RngSeed{42, 7});
    Pcg64 b(RngSeed{42, 7});
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different streams differ") {
    Pcg64 a(RngSeed{42, 0});
    Pcg64 b(RngSeed{42, 1});
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
}

TEST_CASE("roles split a stream") {
    Pcg64 a(RngSeed{42, 3}, RngRole::location);
    Pcg64 b(RngSeed{42, 3}, RngRole::mark);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
}

TEST_CASE("uniform01 moments") {
    Pcg64 rng(RngSeed{1, 0});
    double s = 0.0, ss = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        s += u;
        ss += u * u;
    }
    CHECK(std::fabs(s / n - 0.5) < 0.005);
    CHECK(std::fabs(ss / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("exponential mean") {
    Pcg64 rng(RngSeed{2, 0});
    double s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) s += rng.exponential(2.0);
    CHECK(std::fabs(s / n - 0.5) < 0.01);
}

TEST_CASE("discrete sampler frequencies") {
    DiscreteSampler d({0.2, 0.5, 0.3});
    Pcg64 rng(RngSeed{3, 0});
    std::vector<int> counts(3, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[d.sample(rng)];
    CHECK(std::fabs(counts[0] / double(n) - 0.2) < 0.01);
    CHECK(std::fabs(counts[1] / double(n) - 0.5) < 0.01);
    CHECK(std::fabs(counts[2] / double(n) - 0.3) < 0.01);
}

TEST_CASE("discrete sampler rejects bad input") {
    CHECK_THROWS_AS(DiscreteSampler({}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteSampler({-0.1, 1.1}), std::invalid_argument);
}
