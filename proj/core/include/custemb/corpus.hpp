#pragma once

#include "custemb/ingest.hpp"

#include <compare>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace custemb {

struct IsoWeek {
    int year = 0;
    int week = 0;  // 1..53

    friend auto operator<=>(const IsoWeek&, const IsoWeek&) = default;
};

/// ISO-8601 week-numbering year and week of the calendar date of `ts`.
IsoWeek iso_week_of(Timestamp ts);

/// Sentences are the customers who bought in one category during one ISO week.
struct GroupKey {
    std::string category;
    int iso_year = 0;
    int iso_week = 0;

    friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

GroupKey group_key(const RawTransaction& transaction);

struct SentenceCorpus {
    std::vector<std::vector<std::string>> sentences;
    /// Parallel to `sentences`; empty for corpora read from plain text.
    std::vector<GroupKey> group_keys;

    std::size_t token_count() const noexcept;
};

/// One sentence per (category, ISO week), sorted by group key. Within a sentence, tokens
/// are ordered by transaction time, ties broken by customer key; repeated purchases
/// repeat the token.
SentenceCorpus build_sequences(std::span<const RawTransaction> transactions);

/// One sentence per line, tokens separated by single spaces.
void write_corpus(std::ostream& out, const SentenceCorpus& corpus);
/// Any whitespace-tokenized text; blank lines are ignored.
SentenceCorpus read_corpus(std::istream& in);

}  // namespace custemb
