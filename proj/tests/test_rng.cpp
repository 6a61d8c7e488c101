#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mdk/rng.hpp"
#include "mdk/threading.hpp"

using namespace mdk;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams depend on label and index") {
    Rng a = derive_rng(42, "augment", 0);
    Rng b = derive_rng(42, "augment", 1);
    Rng c = derive_rng(42, "mask", 0);
    Rng a2 = derive_rng(42, "augment", 0);
    CHECK(a.next_u64() == a2.next_u64());
    CHECK(a.next_u64() != b.next_u64());
    CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("uniform doubles stay in range") {
    Rng r(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double v = r.next_double();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
    CHECK(lo < 0.05);
    CHECK(hi > 0.95);
}

TEST_CASE("next_below covers the range uniformly enough") {
    Rng r(11);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 50000; ++i) ++counts[static_cast<std::size_t>(r.next_below(10))];
    for (int c : counts) {
        CHECK(c > 4500);
        CHECK(c < 5500);
    }
}

TEST_CASE("normal deviates have roughly unit variance") {
    Rng r(5);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = r.normal();
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation and is seed-stable") {
    std::vector<int> v(20);
    std::iota(v.begin(), v.end(), 0);
    Rng r(42);
    shuffle(v, r);

    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 20; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);

    std::vector<int> w(20);
    std::iota(w.begin(), w.end(), 0);
    Rng r2(42);
    shuffle(w, r2);
    CHECK(v == w);
}

TEST_CASE("parallel_for covers every index once") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("parallel_for propagates exceptions") {
    CHECK_THROWS_AS(
        parallel_for(100, 4, [](std::size_t i) {
            if (i == 57) throw std::runtime_error("boom");
        }),
        std::runtime_error);
}

TEST_CASE("resolve_threads respects explicit requests") {
    CHECK(resolve_threads(1) == 1);
    CHECK(resolve_threads(0) >= 1);
}
