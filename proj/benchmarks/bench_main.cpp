#include "custemb/classify.hpp"
#include "custemb/corpus.hpp"
#include "custemb/embed.hpp"
#include "custemb/rng.hpp"
#include "custemb/simaug.hpp"
#include "custemb/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <sstream>

using namespace custemb;

namespace {

const SentenceCorpus& ring_corpus() {
    static const SentenceCorpus corpus = build_sequences(generate_synthetic({}).transactions);
    return corpus;
}

FeatureTable gaussian_table(std::size_t rows, std::size_t cols) {
    FeatureTable t;
    for (std::size_t c = 0; c < cols; ++c) t.column_names.push_back("f" + std::to_string(c));
    Rng rng(1);
    std::vector<double> row(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const bool y = rng.bernoulli(0.1);
        for (auto& v : row) v = rng.normal() + (y ? 0.8 : 0.0);
        t.append_row(row, y, CustomerKey{"k"});
    }
    return t;
}

}  // namespace

// One SGNS epoch over the default planted-ring corpus with the default window.
static void BM_SgnsEpoch(benchmark::State& state) {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.window = static_cast<std::size_t>(state.range(0));
    const auto& corpus = ring_corpus();
    for (auto _ : state) benchmark::DoNotOptimize(train(corpus, cfg).input.data());
    state.counters["tokens"] = static_cast<double>(corpus.token_count());
}
BENCHMARK(BM_SgnsEpoch)->Arg(5)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_DecisionTree(benchmark::State& state) {
    const auto t = gaussian_table(static_cast<std::size_t>(state.range(0)), 40);
    for (auto _ : state) benchmark::DoNotOptimize(train_decision_tree(t));
}
BENCHMARK(BM_DecisionTree)->Arg(10000)->Arg(40000)->Unit(benchmark::kMillisecond);

static void BM_RandomForest(benchmark::State& state) {
    const auto t = gaussian_table(static_cast<std::size_t>(state.range(0)), 40);
    RandomForestParams p;
    p.n_estimators = 10;
    for (auto _ : state) benchmark::DoNotOptimize(train_random_forest(t, p));
}
BENCHMARK(BM_RandomForest)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_SeedIndexQuery(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    std::ostringstream text;
    text << n + 1 << " 20\n";
    for (std::size_t i = 0; i <= n; ++i) {
        text << "t" << i;
        for (int d = 0; d < 20; ++d) text << ' ' << rng.normal();
        text << '\n';
    }
    std::istringstream in(text.str());
    const auto space = load_vectors(in);
    std::vector<CustomerKey> seeds;
    for (std::size_t i = 1; i <= n; ++i) seeds.push_back({"t" + std::to_string(i)});
    const SeedIndex index(space, seeds);
    const auto query = *vector_of(space, "t0");
    for (auto _ : state) benchmark::DoNotOptimize(index.query(query));
}
BENCHMARK(BM_SeedIndexQuery)->Arg(1000)->Arg(20000);

BENCHMARK_MAIN();
