#include "custemb/embed.hpp"

#include "custemb/csv.hpp"
#include "custemb/error.hpp"
#include "custemb/hash.hpp"
#include "custemb/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace custemb {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct PlainAccess {
    static double load(const double& x) { return x; }
    static void store(double& x, double v) { x = v; }
};

// Relaxed per-element access for lock-free concurrent training; lost updates are
// tolerated, torn values are not possible.
struct SharedAccess {
    static double load(const double& x) { return std::atomic_ref<const double>(x).load(std::memory_order_relaxed); }
    static void store(double& x, double v) { std::atomic_ref<double>(x).store(v, std::memory_order_relaxed); }
};

struct Scratch {
    std::vector<double> center;
    std::vector<double> center_update;
    std::vector<std::size_t> rows;
};

template <class Access, bool kWantLoss = true>
double sgns_update(EmbeddingSpace& space, std::span<const std::size_t> center_rows, std::size_t context,
                   std::span<const std::size_t> negatives, double lr, Scratch& scratch) {
    const std::size_t dim = space.dim;
    scratch.center.assign(dim, 0.0);
    scratch.center_update.assign(dim, 0.0);
    double* __restrict h = scratch.center.data();
    double* __restrict delta = scratch.center_update.data();
    for (std::size_t r : center_rows) {
        const double* v = space.input.data() + r * dim;
        for (std::size_t d = 0; d < dim; ++d) h[d] += Access::load(v[d]);
    }
    double loss = 0.0;
    auto visit = [&](std::size_t target, bool positive) {
        double* __restrict u = space.output.data() + target * dim;
        double f = 0.0;
        for (std::size_t d = 0; d < dim; ++d) f += Access::load(u[d]) * h[d];
        // sigmoid and softplus share e = exp(-|f|).
        const double e = std::exp(-std::abs(f));
        const double sig = f >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
        if constexpr (kWantLoss) {
            const double margin = positive ? -f : f;
            loss += (margin > 0.0 ? margin : 0.0) + std::log1p(e);
        }
        const double step = lr * ((positive ? 1.0 : 0.0) - sig);
        const double g = (positive ? 1.0 : 0.0) - sig;
        for (std::size_t d = 0; d < dim; ++d) {
            const double ud = Access::load(u[d]);
            delta[d] += g * ud;
            Access::store(u[d], ud + step * h[d]);
        }
    };
    visit(context, true);
    for (std::size_t n : negatives) visit(n, false);
    for (std::size_t r : center_rows) {
        double* v = space.input.data() + r * dim;
        for (std::size_t d = 0; d < dim; ++d) Access::store(v[d], Access::load(v[d]) + lr * delta[d]);
    }
    return loss;
}

void component_rows_into(const EmbeddingSpace& space, std::size_t index, std::vector<std::size_t>& rows) {
    rows.clear();
    rows.push_back(index);
    if (space.subword.enabled) {
        const auto buckets = ngram_indices(space.vocab.tokens[index], space.subword.ngram_min,
                                           space.subword.ngram_max, space.subword.buckets);
        for (std::size_t b : buckets) rows.push_back(space.vocab.size() + b);
    }
}

struct IndexedCorpus {
    std::vector<std::vector<std::uint32_t>> sentences;
    std::uint64_t tokens = 0;
};

IndexedCorpus index_corpus(const SentenceCorpus& corpus, const Vocabulary& vocab) {
    IndexedCorpus out;
    for (const auto& sentence : corpus.sentences) {
        std::vector<std::uint32_t> ids;
        ids.reserve(sentence.size());
        for (const auto& token : sentence) {
            if (auto id = vocab.find(token)) ids.push_back(static_cast<std::uint32_t>(*id));
        }
        out.tokens += ids.size();
        if (ids.size() > 1) out.sentences.push_back(std::move(ids));
    }
    return out;
}

struct ShardResult {
    double loss = 0.0;
    std::uint64_t pairs = 0;
};

template <class Access, bool kWantLoss>
ShardResult train_shard(EmbeddingSpace& space, const TrainConfig& config, const UnigramSampler& sampler,
                        std::span<const std::vector<std::uint32_t>> sentences, Rng& rng,
                        std::atomic<std::uint64_t>& processed, std::uint64_t total_positions) {
    ShardResult result;
    Scratch scratch;
    std::vector<std::size_t> negatives;
    negatives.reserve(config.negatives);
    const double lr_span = config.lr_start - config.lr_floor;
    for (const auto& sentence : sentences) {
        const std::size_t n = sentence.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto done = processed.fetch_add(1, std::memory_order_relaxed);
            const double progress = total_positions > 0 ? static_cast<double>(done) / static_cast<double>(total_positions) : 1.0;
            const double lr = std::max(config.lr_floor, config.lr_start - lr_span * progress);
            const std::size_t reach = 1 + rng.below(config.window);
            const std::size_t lo = i >= reach ? i - reach : 0;
            const std::size_t hi = std::min(n - 1, i + reach);
            component_rows_into(space, sentence[i], scratch.rows);
            for (std::size_t j = lo; j <= hi; ++j) {
                if (j == i) continue;
                const std::size_t context = sentence[j];
                negatives.clear();
                for (std::size_t k = 0; k < config.negatives; ++k) {
                    // Redraw when the sample hits the positive target.
                    for (int attempt = 0; attempt < 16; ++attempt) {
                        const std::size_t candidate = sampler.draw(rng);
                        if (candidate != context) {
                            negatives.push_back(candidate);
                            break;
                        }
                    }
                }
                result.loss += sgns_update<Access, kWantLoss>(space, scratch.rows, context, negatives, lr, scratch);
                ++result.pairs;
            }
        }
    }
    return result;
}

}  // namespace

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
    auto it = index.find(std::string(token));
    if (it == index.end()) return std::nullopt;
    return it->second;
}

Vocabulary build_vocab(const SentenceCorpus& corpus, std::uint64_t min_count) {
    if (min_count < 1) throw ConfigError("must be at least 1", "embed.min_count");
    std::map<std::string, std::uint64_t> counts;
    for (const auto& sentence : corpus.sentences) {
        for (const auto& token : sentence) ++counts[token];
    }
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [token, count] : counts) {
        if (count >= min_count) kept.emplace_back(token, count);
    }
    if (kept.empty()) {
        throw CorpusTooSmallError("no token reaches min_count=" + std::to_string(min_count) + " in a corpus of " +
                                  std::to_string(corpus.token_count()) + " tokens");
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary vocab;
    vocab.tokens.reserve(kept.size());
    vocab.counts.reserve(kept.size());
    for (auto& [token, count] : kept) {
        vocab.index.emplace(token, vocab.tokens.size());
        vocab.tokens.push_back(std::move(token));
        vocab.counts.push_back(count);
        vocab.total_tokens += count;
    }
    return vocab;
}

void TrainConfig::validate() const {
    if (dim < 1) throw ConfigError("must be at least 1", "embed.dim");
    if (window < 1) throw ConfigError("must be at least 1", "embed.window");
    if (min_count < 1) throw ConfigError("must be at least 1", "embed.min_count");
    if (negatives < 1) throw ConfigError("must be at least 1", "embed.negatives");
    if (!(lr_floor > 0.0)) throw ConfigError("must be positive", "embed.lr_floor");
    if (!(lr_start > lr_floor)) throw ConfigError("must exceed lr_floor", "embed.lr_start");
    if (subword.enabled) {
        if (subword.ngram_min < 1 || subword.ngram_max < subword.ngram_min) {
            throw ConfigError("need 1 <= ngram_min <= ngram_max", "embed.subword.ngram_min");
        }
        if (subword.buckets < 1) throw ConfigError("must be at least 1", "embed.subword.buckets");
    }
}

std::vector<std::size_t> EmbeddingSpace::component_rows(std::size_t index) const {
    std::vector<std::size_t> rows;
    component_rows_into(*this, index, rows);
    return rows;
}

EmbeddingSpace init_embeddings(Vocabulary vocab, std::size_t dim, std::uint64_t seed, const SubwordConfig& subword) {
    if (dim < 1) throw ConfigError("must be at least 1", "embed.dim");
    EmbeddingSpace space;
    space.dim = dim;
    space.subword = subword;
    const std::size_t rows = vocab.size() + (subword.enabled ? subword.buckets : 0);
    space.vocab = std::move(vocab);
    space.input.resize(rows * dim);
    Rng rng(derive_seed(seed, 0x1e));
    const double scale = 1.0 / static_cast<double>(dim);
    for (double& x : space.input) x = (rng.uniform() - 0.5) * scale;
    space.output.assign(space.vocab.size() * dim, 0.0);
    return space;
}

SgnsGradient sgns_gradient(std::span<const double> center, std::span<const double> positive,
                           std::span<const std::vector<double>> negatives) {
    SgnsGradient out;
    out.center.assign(center.size(), 0.0);
    auto visit = [&](std::span<const double> u, double label) {
        double f = 0.0;
        for (std::size_t d = 0; d < center.size(); ++d) f += u[d] * center[d];
        out.loss += label > 0.5 ? softplus(-f) : softplus(f);
        const double g = sigmoid(f) - label;  // dL/df
        std::vector<double> grad_u(center.size());
        for (std::size_t d = 0; d < center.size(); ++d) {
            out.center[d] += g * u[d];
            grad_u[d] = g * center[d];
        }
        out.targets.push_back(std::move(grad_u));
    };
    visit(positive, 1.0);
    for (const auto& n : negatives) visit(n, 0.0);
    return out;
}

double sgns_step(EmbeddingSpace& space, std::size_t center_index, std::size_t context_index,
                 std::span<const std::size_t> negative_indices, double lr) {
    const std::size_t v = space.vocab.size();
    if (center_index >= v || context_index >= v) throw DomainError("sgns_step index out of range");
    for (std::size_t n : negative_indices) {
        if (n >= v) throw DomainError("sgns_step negative index out of range");
        if (n == context_index) throw DomainError("negative sample equals the context token");
    }
    Scratch scratch;
    const auto rows = space.component_rows(center_index);
    return sgns_update<PlainAccess>(space, rows, context_index, negative_indices, lr, scratch);
}

UnigramSampler::UnigramSampler(std::span<const std::uint64_t> counts, double power) {
    if (counts.empty()) throw DomainError("unigram sampler needs a non-empty vocabulary");
    const std::size_t n = counts.size();
    weights_.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        weights_[i] = std::pow(static_cast<double>(counts[i]), power);
        total += weights_[i];
    }
    if (!(total > 0.0)) throw DomainError("unigram sampler needs a positive count");
    for (double& w : weights_) w /= total;

    // Walker's alias method (Vose's construction).
    accept_.assign(n, 1.0);
    alias_.resize(n);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        alias_[i] = i;
        scaled[i] = weights_[i] * static_cast<double>(n);
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        accept_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
}

std::size_t UnigramSampler::draw(Rng& rng) const {
    const std::size_t column = rng.below(accept_.size());
    return rng.uniform() < accept_[column] ? column : alias_[column];
}

double UnigramSampler::probability(std::size_t index) const { return weights_.at(index); }

EmbeddingSpace train(const SentenceCorpus& corpus, const TrainConfig& config, TrainLog* log) {
    config.validate();
    Vocabulary vocab = build_vocab(corpus, config.min_count);
    EmbeddingSpace space = init_embeddings(std::move(vocab), config.dim, config.seed, config.subword);
    if (log) *log = TrainLog{};
    if (config.epochs == 0) return space;

    const IndexedCorpus indexed = index_corpus(corpus, space.vocab);
    const UnigramSampler sampler(space.vocab.counts);
    std::uint64_t positions = 0;
    for (const auto& s : indexed.sentences) positions += s.size();
    const std::uint64_t total_positions = positions * config.epochs;
    std::atomic<std::uint64_t> processed{0};

    if (config.threads <= 1) {
        Rng rng(derive_seed(config.seed, 0x5a));
        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            const auto r = log ? train_shard<PlainAccess, true>(space, config, sampler, indexed.sentences, rng,
                                                                processed, total_positions)
                               : train_shard<PlainAccess, false>(space, config, sampler, indexed.sentences, rng,
                                                                 processed, total_positions);
            if (log) {
                log->epoch_loss.push_back(r.pairs ? r.loss / static_cast<double>(r.pairs) : 0.0);
                log->pairs += r.pairs;
            }
        }
        return space;
    }

    const auto workers = static_cast<std::size_t>(config.threads);
    std::vector<Rng> rngs;
    for (std::size_t w = 0; w < workers; ++w) rngs.emplace_back(derive_seed(config.seed, 0x100 + w));
    std::span<const std::vector<std::uint32_t>> all(indexed.sentences);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<ShardResult> results(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = all.size() * w / workers;
            const std::size_t end = all.size() * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] {
                results[w] = train_shard<SharedAccess, true>(space, config, sampler, all.subspan(begin, end - begin), rngs[w],
                                                       processed, total_positions);
            });
        }
        for (auto& t : pool) t.join();
        if (log) {
            ShardResult sum;
            for (const auto& r : results) {
                sum.loss += r.loss;
                sum.pairs += r.pairs;
            }
            log->epoch_loss.push_back(sum.pairs ? sum.loss / static_cast<double>(sum.pairs) : 0.0);
            log->pairs += sum.pairs;
        }
    }
    return space;
}

std::optional<std::vector<double>> vector_of(const EmbeddingSpace& space, std::string_view token) {
    std::vector<std::size_t> rows;
    if (auto index = space.vocab.find(token)) {
        component_rows_into(space, *index, rows);
    } else if (space.subword.enabled) {
        for (std::size_t b : ngram_indices(token, space.subword.ngram_min, space.subword.ngram_max, space.subword.buckets)) {
            rows.push_back(space.vocab.size() + b);
        }
    }
    if (rows.empty()) return std::nullopt;
    std::vector<double> out(space.dim, 0.0);
    for (std::size_t r : rows) {
        const auto v = space.input_row(r);
        for (std::size_t d = 0; d < space.dim; ++d) out[d] += v[d];
    }
    return out;
}

std::vector<std::size_t> ngram_indices(std::string_view token, int ngram_min, int ngram_max, std::size_t buckets) {
    std::vector<std::size_t> out;
    if (buckets == 0 || ngram_min < 1) return out;
    const std::string wrapped = "<" + std::string(token) + ">";
    for (int n = ngram_min; n <= ngram_max; ++n) {
        const auto len = static_cast<std::size_t>(n);
        if (len > wrapped.size()) break;
        for (std::size_t i = 0; i + len <= wrapped.size(); ++i) {
            out.push_back(static_cast<std::size_t>(fnv1a64(std::string_view(wrapped).substr(i, len)) % buckets));
        }
    }
    return out;
}

void save_vectors(const EmbeddingSpace& space, std::ostream& out) {
    out << space.vocab.size() << ' ' << space.dim << '\n';
    for (const auto& token : space.vocab.tokens) {
        const auto v = vector_of(space, token);
        out << token;
        for (double x : *v) out << ' ' << csv::format_double(x);
        out << '\n';
    }
}

void save_vectors(const EmbeddingSpace& space, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vectors to '" + path + "'");
    save_vectors(space, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

EmbeddingSpace load_vectors(std::istream& in) {
    std::string line;
    std::size_t line_number = 1;
    if (!std::getline(in, line)) throw FormatError("missing header", line_number);
    long long declared_rows = 0, declared_dim = 0;
    {
        std::istringstream header(line);
        std::string a, b, extra;
        if (!(header >> a >> b) || (header >> extra) || !csv::parse_int(a, declared_rows) ||
            !csv::parse_int(b, declared_dim) || declared_rows < 0 || declared_dim < 1) {
            throw FormatError("header must be \"<count> <dim>\"", line_number);
        }
    }
    EmbeddingSpace space;
    space.dim = static_cast<std::size_t>(declared_dim);
    space.input.reserve(static_cast<std::size_t>(declared_rows) * space.dim);
    std::vector<std::string> parts;
    while (std::getline(in, line)) {
        ++line_number;
        if (csv::trim(line).empty()) continue;
        std::istringstream words(line);
        parts.clear();
        std::string w;
        while (words >> w) parts.push_back(w);
        if (parts.size() != space.dim + 1) {
            throw FormatError("expected token and " + std::to_string(space.dim) + " values, found " +
                                  std::to_string(parts.size() - 1) + " values",
                              line_number);
        }
        if (space.vocab.size() == static_cast<std::size_t>(declared_rows)) {
            throw FormatError("more rows than the declared " + std::to_string(declared_rows), line_number);
        }
        if (space.vocab.index.count(parts[0]) != 0) throw FormatError("duplicate token '" + parts[0] + "'", line_number);
        for (std::size_t d = 0; d < space.dim; ++d) {
            double x = 0.0;
            if (!csv::parse_double(parts[d + 1], x)) throw FormatError("bad value '" + parts[d + 1] + "'", line_number);
            space.input.push_back(x);
        }
        space.vocab.index.emplace(parts[0], space.vocab.size());
        space.vocab.tokens.push_back(parts[0]);
        space.vocab.counts.push_back(0);
    }
    if (space.vocab.size() != static_cast<std::size_t>(declared_rows)) {
        throw FormatError("declared " + std::to_string(declared_rows) + " rows, found " +
                              std::to_string(space.vocab.size()),
                          line_number);
    }
    space.output.assign(space.vocab.size() * space.dim, 0.0);
    return space;
}

EmbeddingSpace load_vectors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vectors file '" + path + "'");
    return load_vectors(in);
}

}  // namespace custemb
