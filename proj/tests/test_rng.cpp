#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "iici/rng.hpp"

using iici::Rng;

TEST_CASE("identical seeds reproduce identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("state round-trips through checkpointing") {
    Rng a(7);
    for (int i = 0; i < 10; ++i) a.next_u64();
    Rng b(0);
    b.set_state(a.state());
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("named substreams differ from each other and the root") {
    const std::set<std::uint64_t> seeds = {
        iici::substream_seed(1, "data"),    iici::substream_seed(1, "sampler"),
        iici::substream_seed(1, "augment"), iici::substream_seed(1, "kmeans"),
        iici::substream_seed(1, "probe"),   1};
    CHECK(seeds.size() == 6);
    CHECK(iici::substream_seed(1, "data") != iici::substream_seed(2, "data"));
}

TEST_CASE("uniform stays in [0, 1) and below stays in range") {
    Rng r(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = r.below(7);
        CHECK(k >= 0);
        CHECK(k < 7);
    }
}

TEST_CASE("normal draws have roughly standard moments") {
    Rng r(11);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}
