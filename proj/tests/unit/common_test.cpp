#include "custemb/csv.hpp"
#include "custemb/hash.hpp"
#include "custemb/parallel.hpp"
#include "custemb/rng.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

using namespace custemb;

TEST(Fnv1a, PublishedTestVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Fnv1a, IncrementalEqualsOneShot) { EXPECT_EQ(fnv1a64("bar", fnv1a64("foo")), fnv1a64("foobar")); }

TEST(Hex, SixteenLowercaseDigits) {
    EXPECT_EQ(to_hex16(0), "0000000000000000");
    EXPECT_EQ(to_hex16(0xABCDEF0123456789ULL), "abcdef0123456789");
}

TEST(DeriveSeed, DistinctStreamsDiffer) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

TEST(Rng, UniformRangeAndMean) {
    Rng rng(3);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(Rng, BelowIsUnbiasedOverSmallRange) {
    Rng rng(4);
    int counts[7] = {};
    const int n = 70000;
    for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
    for (int c : counts) EXPECT_NEAR(c, n / 7.0, 4.0 * std::sqrt(n / 7.0));
}

TEST(Rng, NormalMoments) {
    Rng rng(5);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(11), b(11);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Csv, SplitsQuotedFields) {
    std::vector<std::string> f;
    ASSERT_TRUE(csv::split_record(R"(a,"b,c","say ""hi""",)", f));
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[1], "b,c");
    EXPECT_EQ(f[2], "say \"hi\"");
    EXPECT_EQ(f[3], "");
    EXPECT_FALSE(csv::split_record(R"(a,"open)", f));
}

TEST(Csv, EscapeRoundTrips) {
    std::vector<std::string> f;
    const std::string line = csv::escape("x,y") + "," + csv::escape("q\"q") + "," + csv::escape("plain");
    ASSERT_TRUE(csv::split_record(line, f));
    EXPECT_EQ(f, (std::vector<std::string>{"x,y", "q\"q", "plain"}));
}

TEST(Csv, StrictNumberParsing) {
    double d = 0.0;
    EXPECT_TRUE(csv::parse_double("12.5", d));
    EXPECT_EQ(d, 12.5);
    EXPECT_TRUE(csv::parse_double(" -3 ", d));
    EXPECT_EQ(d, -3.0);
    EXPECT_FALSE(csv::parse_double("12.5x", d));
    EXPECT_FALSE(csv::parse_double("", d));
    EXPECT_FALSE(csv::parse_double("nan", d));
    EXPECT_FALSE(csv::parse_double("inf", d));
    long long i = 0;
    EXPECT_TRUE(csv::parse_int("42", i));
    EXPECT_EQ(i, 42);
    EXPECT_FALSE(csv::parse_int("4.2", i));
}

TEST(Csv, FormatDoubleRoundTripsExactly) {
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.normal() * std::pow(10.0, rng.between(-12, 12));
        double back = 0.0;
        ASSERT_TRUE(csv::parse_double(csv::format_double(x), back));
        ASSERT_EQ(back, x);
    }
    EXPECT_EQ(csv::format_double(0.1), "0.1");
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (int threads : {0, 1, 3}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i].fetch_add(1); });
        for (auto& h : hits) ASSERT_EQ(h.load(), 1);
    }
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(10, 2, [](std::size_t i) { if (i == 7) throw std::runtime_error("boom"); }),
                 std::runtime_error);
}
