#include "custemb/simaug.hpp"

#include "custemb/error.hpp"
#include "custemb/hash.hpp"
#include "custemb/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace custemb {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Shared by cosine() and SeedIndex so both produce identical bits.
double cosine_from_parts(double ab, double na, double nb) {
    return std::clamp(ab / (na * nb), -1.0, 1.0);
}

}  // namespace

std::optional<double> cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DomainError("cosine of vectors with lengths " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return std::nullopt;
    return cosine_from_parts(dot(a, b), na, nb);
}

SeedIndex::SeedIndex(const EmbeddingSpace& space, std::span<const CustomerKey> seeds) : dim_(space.dim) {
    std::set<CustomerKey> sorted(seeds.begin(), seeds.end());
    for (const auto& key : sorted) {
        auto v = vector_of(space, key);
        if (!v) continue;
        const double n = norm(*v);
        if (n == 0.0) continue;
        keys_.push_back(key);
        vectors_.insert(vectors_.end(), v->begin(), v->end());
        norms_.push_back(n);
    }
    if (keys_.empty()) throw DomainError("no seed customer is in the embedding vocabulary");
}

std::optional<SimilarityHit> SeedIndex::query(std::span<const double> vector) const {
    if (vector.size() != dim_) throw DomainError("query vector has the wrong dimension");
    const double nq = norm(vector);
    if (nq == 0.0) return std::nullopt;
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t s = 0; s < keys_.size(); ++s) {
        const std::span<const double> seed(vectors_.data() + s * dim_, dim_);
        const double sim = cosine_from_parts(dot(vector, seed), nq, norms_[s]);
        if (sim > best_sim) {
            best_sim = sim;
            best = s;
        }
    }
    return SimilarityHit{best_sim, keys_[best]};
}

std::optional<SimilarityHit> max_similarity_to_set(const EmbeddingSpace& space, const CustomerKey& query,
                                                   std::span<const CustomerKey> seeds) {
    const SeedIndex index(space, seeds);
    const auto v = vector_of(space, query);
    if (!v) return std::nullopt;
    return index.query(*v);
}

void AugmentConfig::validate() const {
    if (!(tau > -1.0 && tau <= 1.0)) throw ConfigError("must lie in (-1, 1]", "augment.tau");
    if (smote_k < 1) throw ConfigError("must be at least 1", "augment.smote_k");
}

std::string AugmentationReport::to_json() const {
    nlohmann::ordered_json j;
    j["method"] = method;
    j["positives_before"] = positives_before;
    j["positives_after"] = positives_after;
    if (method == "similarity") {
        j["tau"] = tau;
        j["flipped_customers"] = flipped_customers.size();
        j["rows_relabeled"] = rows_relabeled;
        auto& keys = j["flipped_customer_keys"] = nlohmann::ordered_json::array();
        for (const auto& k : flipped_customers) keys.push_back(k.value);
    } else {
        j["smote_k"] = smote_k;
        j["synthetic_rows_created"] = synthetic_rows_created;
        j["seed"] = seed;
    }
    return j.dump(2) + "\n";
}

std::pair<FeatureTable, AugmentationReport> relabel_by_similarity(const FeatureTable& table, const EmbeddingSpace& space,
                                                                  double tau) {
    if (!(tau > -1.0 && tau <= 1.0)) throw ConfigError("must lie in (-1, 1]", "augment.tau");
    AugmentationReport report;
    report.method = "similarity";
    report.tau = tau;
    report.positives_before = table.positives();

    std::set<CustomerKey> seeds;
    std::set<CustomerKey> customers;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        customers.insert(table.customer_keys[i]);
        if (table.labels[i] == 1) seeds.insert(table.customer_keys[i]);
    }
    FeatureTable out = table;
    if (seeds.empty()) {
        report.positives_after = report.positives_before;
        return {std::move(out), std::move(report)};
    }
    const std::vector<CustomerKey> seed_list(seeds.begin(), seeds.end());
    const SeedIndex index(space, seed_list);

    std::set<CustomerKey> flipped;
    for (const auto& customer : customers) {
        if (seeds.count(customer)) continue;
        const auto v = vector_of(space, customer);
        if (!v) continue;
        const auto hit = index.query(*v);
        if (hit && hit->similarity >= tau) flipped.insert(customer);
    }
    for (std::size_t i = 0; i < out.rows(); ++i) {
        if (out.labels[i] == 0 && flipped.count(out.customer_keys[i])) {
            out.labels[i] = 1;
            ++report.rows_relabeled;
        }
    }
    report.flipped_customers.assign(flipped.begin(), flipped.end());
    report.positives_after = out.positives();
    return {std::move(out), std::move(report)};
}

std::pair<FeatureTable, AugmentationReport> smote(const FeatureTable& table, std::size_t k, std::size_t extra,
                                                  std::uint64_t seed) {
    if (k < 1) throw ConfigError("must be at least 1", "augment.smote_k");
    AugmentationReport report;
    report.method = "smote";
    report.smote_k = k;
    report.seed = seed;
    report.positives_before = table.positives();

    FeatureTable out = table;
    if (extra == 0) {
        report.positives_after = report.positives_before;
        return {std::move(out), std::move(report)};
    }
    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        if (table.labels[i] == 1) positives.push_back(i);
    }
    if (positives.size() < k + 1) {
        throw DomainError("SMOTE with k=" + std::to_string(k) + " needs at least " + std::to_string(k + 1) +
                          " positive rows, found " + std::to_string(positives.size()));
    }

    const std::size_t width = table.cols();
    // k nearest positive neighbours of every positive row; ties by row order.
    std::vector<std::vector<std::size_t>> neighbours(positives.size());
    std::vector<std::pair<double, std::size_t>> dist(positives.size());
    for (std::size_t a = 0; a < positives.size(); ++a) {
        const auto ra = table.row(positives[a]);
        for (std::size_t b = 0; b < positives.size(); ++b) {
            const auto rb = table.row(positives[b]);
            double d = 0.0;
            for (std::size_t c = 0; c < width; ++c) d += (ra[c] - rb[c]) * (ra[c] - rb[c]);
            dist[b] = {a == b ? std::numeric_limits<double>::infinity() : d, b};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        for (std::size_t j = 0; j < k; ++j) neighbours[a].push_back(dist[j].second);
    }

    Rng rng(derive_seed(seed, 0x5307e));
    std::vector<double> synthetic(width);
    out.values.reserve(out.values.size() + extra * width);
    for (std::size_t s = 0; s < extra; ++s) {
        const std::size_t a = rng.below(positives.size());
        const std::size_t b = neighbours[a][rng.below(k)];
        const double lambda = rng.uniform();
        const auto xa = table.row(positives[a]);
        const auto xb = table.row(positives[b]);
        for (std::size_t c = 0; c < width; ++c) synthetic[c] = xa[c] + lambda * (xb[c] - xa[c]);
        out.append_row(synthetic, 1, kSyntheticCustomerKey);
    }
    report.synthetic_rows_created = extra;
    report.positives_after = out.positives();
    return {std::move(out), std::move(report)};
}

}  // namespace custemb
