#pragma once

#include "custemb/corpus.hpp"
#include "custemb/customer_key.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace custemb {

class Rng;

struct Vocabulary {
    std::vector<std::string> tokens;    // index -> token
    std::vector<std::uint64_t> counts;  // index -> corpus frequency
    std::uint64_t total_tokens = 0;     // sum of retained counts
    std::unordered_map<std::string, std::size_t> index;

    std::size_t size() const noexcept { return tokens.size(); }
    std::optional<std::size_t> find(std::string_view token) const;
};

/// Tokens with frequency >= min_count, ordered by descending frequency then
/// lexicographically. Throws CorpusTooSmallError if nothing survives.
Vocabulary build_vocab(const SentenceCorpus& corpus, std::uint64_t min_count);

struct SubwordConfig {
    bool enabled = false;
    int ngram_min = 3;
    int ngram_max = 6;
    std::size_t buckets = 2'000'000;
};

struct TrainConfig {
    std::size_t dim = 20;
    std::size_t window = 40;
    std::uint64_t min_count = 5;
    std::size_t epochs = 100;
    std::size_t negatives = 5;
    double lr_start = 0.025;
    double lr_floor = 1e-4;
    SubwordConfig subword;
    std::uint64_t seed = 1;
    /// 0 or 1: deterministic single-threaded training. >1: lock-free sharded training.
    int threads = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Input vectors hold V token rows followed by subword bucket rows when subword is enabled.
struct EmbeddingSpace {
    Vocabulary vocab;
    std::size_t dim = 0;
    SubwordConfig subword;
    std::vector<double> input;
    std::vector<double> output;

    std::span<const double> input_row(std::size_t row) const { return {input.data() + row * dim, dim}; }
    std::span<double> input_row(std::size_t row) { return {input.data() + row * dim, dim}; }
    std::span<const double> output_row(std::size_t row) const { return {output.data() + row * dim, dim}; }
    std::span<double> output_row(std::size_t row) { return {output.data() + row * dim, dim}; }

    /// Input rows that sum to the served vector of vocabulary entry `index`.
    std::vector<std::size_t> component_rows(std::size_t index) const;
};

/// Input entries uniform on [-0.5/dim, 0.5/dim], output entries zero.
EmbeddingSpace init_embeddings(Vocabulary vocab, std::size_t dim, std::uint64_t seed,
                               const SubwordConfig& subword = {});

/// Pure SGNS loss and gradients for one center vector h, one positive target and a list
/// of negative targets:  L = -log s(u_pos . h) - sum_n log s(-u_n . h).
struct SgnsGradient {
    double loss = 0.0;
    std::vector<double> center;                // dL/dh
    std::vector<std::vector<double>> targets;  // dL/du, positive first then negatives
};
SgnsGradient sgns_gradient(std::span<const double> center, std::span<const double> positive,
                           std::span<const std::vector<double>> negatives);

/// One stochastic gradient step on the pair (center, context) with the given negatives.
/// Returns the loss evaluated before the update.
double sgns_step(EmbeddingSpace& space, std::size_t center_index, std::size_t context_index,
                 std::span<const std::size_t> negative_indices, double lr);

/// Samples vocabulary indices with probability proportional to count^power, in O(1) per
/// draw via an alias table.
class UnigramSampler {
public:
    explicit UnigramSampler(std::span<const std::uint64_t> counts, double power = 0.75);
    std::size_t draw(Rng& rng) const;
    double probability(std::size_t index) const;
    std::size_t size() const noexcept { return weights_.size(); }

private:
    std::vector<double> weights_;  // normalized
    std::vector<double> accept_;
    std::vector<std::size_t> alias_;
};

struct TrainLog {
    std::vector<double> epoch_loss;  // mean per-pair loss of each epoch
    std::uint64_t pairs = 0;
};

EmbeddingSpace train(const SentenceCorpus& corpus, const TrainConfig& config, TrainLog* log = nullptr);

/// Served vector, or nullopt when the token is out of vocabulary (subword disabled).
/// With subword enabled every token with at least one n-gram is served.
std::optional<std::vector<double>> vector_of(const EmbeddingSpace& space, std::string_view token);
inline std::optional<std::vector<double>> vector_of(const EmbeddingSpace& space, const CustomerKey& key) {
    return vector_of(space, key.value);
}

/// Character n-grams of "<token>" for lengths ngram_min..ngram_max, each FNV-1a hashed
/// modulo `buckets`.
std::vector<std::size_t> ngram_indices(std::string_view token, int ngram_min, int ngram_max, std::size_t buckets);

/// word2vec text format: "V dim" header, then "token v_1 ... v_dim" per line.
void save_vectors(const EmbeddingSpace& space, std::ostream& out);
void save_vectors(const EmbeddingSpace& space, const std::string& path);
/// Loaded spaces serve exactly the saved vectors (subword disabled, counts zero).
EmbeddingSpace load_vectors(std::istream& in);
EmbeddingSpace load_vectors(const std::string& path);

}  // namespace custemb
