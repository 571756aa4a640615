#include "custemb/corpus.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace custemb {

IsoWeek iso_week_of(Timestamp ts) {
    using namespace std::chrono;
    const sys_days date = floor<days>(ts);
    const auto iso_day = static_cast<int>(weekday{date}.iso_encoding());  // Monday = 1
    const sys_days thursday = date + days{4 - iso_day};
    const year_month_day thursday_ymd{thursday};
    const sys_days jan1{thursday_ymd.year() / January / 1};
    return IsoWeek{static_cast<int>(thursday_ymd.year()), static_cast<int>((thursday - jan1).count() / 7 + 1)};
}

GroupKey group_key(const RawTransaction& transaction) {
    const auto week = iso_week_of(transaction.timestamp);
    return GroupKey{transaction.category, week.year, week.week};
}

std::size_t SentenceCorpus::token_count() const noexcept {
    std::size_t total = 0;
    for (const auto& s : sentences) total += s.size();
    return total;
}

SentenceCorpus build_sequences(std::span<const RawTransaction> transactions) {
    std::map<GroupKey, std::vector<std::pair<Timestamp, CustomerKey>>> groups;
    for (const auto& tx : transactions) {
        groups[group_key(tx)].emplace_back(tx.timestamp, tx.customer_key());
    }
    SentenceCorpus corpus;
    corpus.sentences.reserve(groups.size());
    corpus.group_keys.reserve(groups.size());
    for (auto& [key, members] : groups) {
        std::sort(members.begin(), members.end());
        std::vector<std::string> sentence;
        sentence.reserve(members.size());
        for (auto& [ts, customer] : members) sentence.push_back(std::move(customer.value));
        corpus.sentences.push_back(std::move(sentence));
        corpus.group_keys.push_back(key);
    }
    return corpus;
}

void write_corpus(std::ostream& out, const SentenceCorpus& corpus) {
    for (const auto& sentence : corpus.sentences) {
        for (std::size_t i = 0; i < sentence.size(); ++i) {
            if (i > 0) out << ' ';
            out << sentence[i];
        }
        out << '\n';
    }
}

SentenceCorpus read_corpus(std::istream& in) {
    SentenceCorpus corpus;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::vector<std::string> sentence;
        std::string token;
        while (words >> token) sentence.push_back(token);
        if (!sentence.empty()) corpus.sentences.push_back(std::move(sentence));
    }
    return corpus;
}

}  // namespace custemb
