#include "custemb/corpus.hpp"
#include "custemb/rng.hpp"
#include "custemb/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

using namespace custemb;
using custemb::test::make_transaction;

namespace {

// Independent ISO-week oracle: weeks(y) is 53 when Dec 31 of y is a Thursday or of
// y - 1 is a Wednesday; week = floor((ordinal - weekday + 10) / 7).
int p(int y) { return (y + y / 4 - y / 100 + y / 400) % 7; }
int weeks_in(int y) { return p(y) == 4 || p(y - 1) == 3 ? 53 : 52; }

IsoWeek oracle_week(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    const sys_days date = year{y} / month{m} / day{d};
    const int ordinal = (date - sys_days{year{y} / January / 1}).count() + 1;
    const int weekday = static_cast<int>(std::chrono::weekday{date}.iso_encoding());
    int week = (ordinal - weekday + 10) / 7;
    if (week < 1) return {y - 1, weeks_in(y - 1)};
    if (week > weeks_in(y)) return {y + 1, 1};
    return {y, week};
}

}  // namespace

TEST(IsoWeek, NamedExamples) {
    const auto t = make_transaction("A", "2020-12-31 09:00:00", "grocery_pos", 1);
    const auto k = group_key(t);
    EXPECT_EQ(k.category, "grocery_pos");
    EXPECT_EQ(k.iso_year, 2020);
    EXPECT_EQ(k.iso_week, 53);
    EXPECT_EQ(group_key(make_transaction("A", "2019-06-18 09:00:00", "x", 1)),
              group_key(make_transaction("B", "2019-06-20 23:00:00", "x", 1)));
    EXPECT_NE(group_key(make_transaction("A", "2019-06-23 23:59:59", "x", 1)).iso_week,
              group_key(make_transaction("A", "2019-06-24 00:00:00", "x", 1)).iso_week);
}

TEST(IsoWeek, MatchesCalendarOracleAcrossYearBoundaries) {
    using namespace std::chrono;
    for (sys_days d = year{1999} / January / 1; d < sys_days{year{2031} / January / 1}; d += days{1}) {
        const year_month_day ymd{d};
        const auto got = iso_week_of(sys_seconds{d} + hours{12});
        const auto want = oracle_week(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                                      static_cast<unsigned>(ymd.day()));
        ASSERT_EQ(got, want) << static_cast<int>(ymd.year()) << "-" << static_cast<unsigned>(ymd.month()) << "-"
                             << static_cast<unsigned>(ymd.day());
    }
}

TEST(Sequences, EmptyInput) { EXPECT_TRUE(build_sequences({}).sentences.empty()); }

TEST(Sequences, HandGroupedExample) {
    const std::vector<RawTransaction> txns{
        make_transaction("C", "2019-06-19 10:00:00", "home", 1),
        make_transaction("A", "2019-06-18 10:00:00", "home", 1),
        make_transaction("B", "2019-06-25 08:00:00", "home", 1),  // next week
        make_transaction("B", "2019-06-18 10:00:00", "home", 1),  // tie with A at 10:00
        make_transaction("D", "2019-06-26 07:00:00", "home", 1),
    };
    const auto corpus = build_sequences(txns);
    ASSERT_EQ(corpus.sentences.size(), 2u);
    const auto key = [&](int i) { return txns[i].customer_key().value; };
    const std::string first = std::min(key(1), key(3)), second = std::max(key(1), key(3));
    EXPECT_EQ(corpus.sentences[0], (std::vector<std::string>{first, second, key(0)}));
    EXPECT_EQ(corpus.sentences[1], (std::vector<std::string>{key(2), key(4)}));
    EXPECT_EQ(corpus.group_keys[0].iso_week, 25);
    EXPECT_EQ(corpus.group_keys[1].iso_week, 26);
}

TEST(Sequences, RepeatedPurchasesRepeatTheToken) {
    const std::vector<RawTransaction> txns{
        make_transaction("A", "2019-06-18 10:00:00", "grocery_pos", 1),
        make_transaction("A", "2019-06-19 10:00:00", "grocery_pos", 1),
        make_transaction("B", "2019-06-19 11:00:00", "grocery_pos", 1),
        make_transaction("A", "2019-06-20 10:00:00", "grocery_pos", 1),
    };
    const auto corpus = build_sequences(txns);
    ASSERT_EQ(corpus.sentences.size(), 1u);
    EXPECT_EQ(std::count(corpus.sentences[0].begin(), corpus.sentences[0].end(), txns[0].customer_key().value), 3);
}

TEST(Sequences, TokenCountAndPermutationInvariance) {
    SyntheticConfig cfg;
    cfg.n_customers = 200;
    cfg.n_transactions = 5000;
    cfg.n_rings = 4;
    cfg.ring_size = 5;
    auto txns = generate_synthetic(cfg).transactions;
    const auto corpus = build_sequences(txns);
    EXPECT_EQ(corpus.token_count(), txns.size());
    for (const auto& s : corpus.sentences) EXPECT_FALSE(s.empty());
    Rng rng(3);
    rng.shuffle(txns);
    const auto shuffled = build_sequences(txns);
    EXPECT_EQ(shuffled.sentences, corpus.sentences);
    EXPECT_EQ(shuffled.group_keys, corpus.group_keys);
}

TEST(Sequences, PlainTextRoundTrip) {
    SentenceCorpus corpus;
    corpus.sentences = {{"a", "b", "a"}, {"c"}};
    std::stringstream buf;
    write_corpus(buf, corpus);
    EXPECT_EQ(buf.str(), "a b a\nc\n");
    std::istringstream in("  x\ty \n\n z\n");
    const auto back = read_corpus(in);
    EXPECT_EQ(back.sentences, (std::vector<std::vector<std::string>>{{"x", "y"}, {"z"}}));
    EXPECT_TRUE(back.group_keys.empty());
}
