#include "custemb/synthetic.hpp"

#include "custemb/error.hpp"
#include "custemb/hash.hpp"
#include "custemb/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace custemb {

namespace {

constexpr std::array<std::string_view, 14> kPublicCategories{
    "entertainment", "food_dining", "gas_transport", "grocery_net", "grocery_pos",
    "health_fitness", "home", "kids_pets", "misc_net", "misc_pos",
    "personal_care", "shopping_net", "shopping_pos", "travel"};

constexpr std::array<std::string_view, 24> kFirstNames{
    "James", "Mary", "Robert", "Patricia", "John", "Jennifer", "Michael", "Linda",
    "David", "Elizabeth", "William", "Barbara", "Richard", "Susan", "Joseph", "Jessica",
    "Thomas", "Sarah", "Charles", "Karen", "Daniel", "Nancy", "Matthew", "Lisa"};

constexpr std::array<std::string_view, 24> kLastNames{
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis",
    "Rodriguez", "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Thomas",
    "Taylor", "Moore", "Jackson", "Martin", "Lee", "Perez", "Thompson", "White"};

constexpr std::array<std::string_view, 16> kJobs{
    "Nurse", "Teacher", "Engineer, civil", "Accountant", "Pharmacist", "Architect",
    "Surveyor, land", "Librarian", "Chef", "Electrician", "Journalist", "Paramedic",
    "Designer, textile", "Solicitor", "Geologist", "Copywriter"};

constexpr std::array<std::string_view, 12> kStreets{
    "Elm", "Oak", "Maple", "Cedar", "Pine", "Birch", "Walnut", "Chestnut", "Willow", "Spruce", "Hickory", "Poplar"};

constexpr std::array<std::string_view, 5> kStreetSuffixes{"St", "Ave", "Rd", "Ln", "Blvd"};

struct Customer {
    std::string first_name, last_name, job, date_of_birth, home_address;
    char gender = 'F';
    double lat = 0.0, lon = 0.0;
    double activity = 1.0;
    std::vector<double> category_cdf;
    std::vector<std::pair<double, double>> merchants;
};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& items) {
    return items[rng.below(N)];
}

std::size_t sample_cdf(Rng& rng, const std::vector<double>& cdf) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

double round_cents(double x) { return std::round(x * 100.0) / 100.0; }

double round_coord(double x) { return std::round(x * 1e6) / 1e6; }

double normal_amount(Rng& rng, std::size_t category) {
    const double mu = 3.0 + 0.12 * static_cast<double>(category % 12);
    return round_cents(std::exp(rng.normal(mu, 0.8)));
}

double fraud_amount(Rng& rng) { return round_cents(std::exp(rng.normal(5.0, 0.7))); }

int random_hour(Rng& rng) {
    // Mostly daytime with a thin night tail.
    if (rng.bernoulli(0.12)) return static_cast<int>(rng.below(6));
    return 6 + static_cast<int>(rng.below(18));
}

}  // namespace

std::vector<std::string> synthetic_categories(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(i < kPublicCategories.size() ? std::string(kPublicCategories[i]) : "cat_" + std::to_string(i + 1));
    }
    return out;
}

void SyntheticConfig::validate() const {
    if (n_customers == 0) throw ConfigError("must be positive", "synthetic.n_customers");
    if (n_transactions == 0) throw ConfigError("must be positive", "synthetic.n_transactions");
    if (n_categories == 0) throw ConfigError("must be positive", "synthetic.n_categories");
    if (!(fraud_rate > 0.0 && fraud_rate < 1.0)) throw ConfigError("must lie in (0, 1)", "synthetic.fraud_rate");
    if (!(ring_fraud_share >= 0.0 && ring_fraud_share <= 1.0)) {
        throw ConfigError("must lie in [0, 1]", "synthetic.ring_fraud_share");
    }
    if (!(ring_participation > 0.0 && ring_participation <= 1.0)) {
        throw ConfigError("must lie in (0, 1]", "synthetic.ring_participation");
    }
    if (n_rings > 0 && ring_size < 2) throw ConfigError("rings need at least 2 members", "synthetic.ring_size");
    if (n_rings * ring_size > n_customers) {
        throw ConfigError("n_rings x ring_size exceeds n_customers", "synthetic.n_rings");
    }
    if (year < 1900 || year > 2100) throw ConfigError("must lie in [1900, 2100]", "synthetic.year");
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    using namespace std::chrono;

    Rng rng(derive_seed(config.seed, 0));
    const auto categories = synthetic_categories(config.n_categories);
    const sys_days year_start{year_month_day{year{config.year}, January, day{1}}};
    const auto days_in_year =
        static_cast<std::uint64_t>((sys_days{year_month_day{year{config.year + 1}, January, day{1}}} - year_start).count());

    std::vector<Customer> customers(config.n_customers);
    for (std::size_t i = 0; i < customers.size(); ++i) {
        auto& c = customers[i];
        c.first_name = std::string(pick(rng, kFirstNames));
        c.last_name = std::string(pick(rng, kLastNames));
        c.job = std::string(pick(rng, kJobs));
        const auto dob = year_start - days{static_cast<int>(365 * 18 + rng.below(365 * 60))};
        c.date_of_birth = format_timestamp(Timestamp{dob.time_since_epoch()}).substr(0, 10);
        // The house number embeds the index, so identities never coincide.
        c.home_address = std::to_string(i * 10 + rng.below(10) + 1) + " " + std::string(pick(rng, kStreets)) + " " +
                         std::string(pick(rng, kStreetSuffixes));
        c.gender = rng.bernoulli(0.5) ? 'F' : 'M';
        c.lat = round_coord(rng.uniform(26.0, 48.0));
        c.lon = round_coord(rng.uniform(-122.0, -71.0));
        c.activity = std::exp(0.6 * rng.normal());
        std::vector<double> weights(config.n_categories, 1.0);
        for (int f = 0; f < 3; ++f) weights[rng.below(config.n_categories)] += 4.0;
        c.category_cdf.resize(weights.size());
        std::partial_sum(weights.begin(), weights.end(), c.category_cdf.begin());
        const std::size_t n_merchants = 2 + rng.below(10);
        for (std::size_t m = 0; m < n_merchants; ++m) {
            c.merchants.emplace_back(round_coord(c.lat + rng.uniform(-0.5, 0.5)),
                                     round_coord(c.lon + rng.uniform(-0.5, 0.5)));
        }
    }

    SyntheticDataset dataset;
    std::vector<std::size_t> order(config.n_customers);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> rings(config.n_rings);
    for (std::size_t r = 0; r < config.n_rings; ++r) {
        rings[r].assign(order.begin() + static_cast<std::ptrdiff_t>(r * config.ring_size),
                        order.begin() + static_cast<std::ptrdiff_t>((r + 1) * config.ring_size));
    }

    auto make_tx = [&](std::size_t customer, std::size_t category, Timestamp ts, std::pair<double, double> merchant) {
        const auto& c = customers[customer];
        RawTransaction tx;
        tx.timestamp = ts;
        tx.category = categories[category];
        tx.amount = normal_amount(rng, category);
        tx.first_name = c.first_name;
        tx.last_name = c.last_name;
        tx.job = c.job;
        tx.date_of_birth = c.date_of_birth;
        tx.home_address = c.home_address;
        tx.gender = c.gender;
        tx.customer_lat = c.lat;
        tx.customer_lon = c.lon;
        tx.merchant_lat = merchant.first;
        tx.merchant_lon = merchant.second;
        return tx;
    };

    const auto total_fraud = static_cast<std::size_t>(std::llround(config.fraud_rate * static_cast<double>(config.n_transactions)));
    const std::size_t ring_fraud =
        config.n_rings > 0 ? static_cast<std::size_t>(std::llround(config.ring_fraud_share * static_cast<double>(total_fraud))) : 0;

    std::vector<RawTransaction> ring_txs;
    if (config.n_rings > 0) {
        // About half of the ring-event transactions end up labelled fraud.
        const double per_event = static_cast<double>(config.ring_size) * config.ring_participation;
        const auto events = static_cast<std::size_t>(
            std::ceil(2.0 * static_cast<double>(ring_fraud) / (static_cast<double>(config.n_rings) * per_event)));
        for (std::size_t r = 0; r < config.n_rings; ++r) {
            std::array<std::size_t, 3> ring_categories{};
            for (auto& c : ring_categories) c = rng.below(config.n_categories);
            std::array<std::pair<double, double>, 2> ring_merchants{};
            for (auto& m : ring_merchants) {
                m = {round_coord(rng.uniform(26.0, 48.0)), round_coord(rng.uniform(-122.0, -71.0))};
            }
            for (std::size_t e = 0; e < events; ++e) {
                const std::size_t category = ring_categories[rng.below(ring_categories.size())];
                const auto merchant = ring_merchants[rng.below(ring_merchants.size())];
                const auto event_start = year_start + days{static_cast<int>(rng.below(days_in_year))};
                const auto base = Timestamp{event_start.time_since_epoch()} + hours{8 + rng.below(12)};
                for (std::size_t member : rings[r]) {
                    if (!rng.bernoulli(config.ring_participation)) continue;
                    const auto ts = base + seconds{rng.below(3 * 3600)};
                    ring_txs.push_back(make_tx(member, category, ts, merchant));
                }
            }
        }
    }
    if (ring_txs.size() > config.n_transactions) {
        throw ConfigError("ring events alone exceed n_transactions; lower fraud_rate or ring counts",
                          "synthetic.n_transactions");
    }

    std::vector<double> activity_cdf(customers.size());
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < customers.size(); ++i) activity_cdf[i] = (acc += customers[i].activity);
    }
    const std::size_t n_normal = config.n_transactions - ring_txs.size();
    std::vector<RawTransaction> normal_txs;
    normal_txs.reserve(n_normal);
    for (std::size_t t = 0; t < n_normal; ++t) {
        const std::size_t customer = sample_cdf(rng, activity_cdf);
        const auto& c = customers[customer];
        const std::size_t category = sample_cdf(rng, c.category_cdf);
        const auto day_point = year_start + days{static_cast<int>(rng.below(days_in_year))};
        const auto ts = Timestamp{day_point.time_since_epoch()} + hours{random_hour(rng)} + seconds{rng.below(3600)};
        normal_txs.push_back(make_tx(customer, category, ts, c.merchants[rng.below(c.merchants.size())]));
    }

    auto label_fraud = [&](std::vector<RawTransaction>& pool, std::size_t count) {
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        count = std::min(count, pool.size());
        for (std::size_t k = 0; k < count; ++k) {
            auto& tx = pool[idx[k]];
            tx.is_fraud = true;
            tx.amount = fraud_amount(rng);
        }
    };
    label_fraud(ring_txs, ring_fraud);
    label_fraud(normal_txs, total_fraud - std::min(ring_fraud, ring_txs.size()));

    auto& all = dataset.transactions;
    all = std::move(ring_txs);
    all.insert(all.end(), std::make_move_iterator(normal_txs.begin()), std::make_move_iterator(normal_txs.end()));
    std::stable_sort(all.begin(), all.end(),
                     [](const RawTransaction& a, const RawTransaction& b) { return a.timestamp < b.timestamp; });

    dataset.rings.reserve(rings.size());
    for (const auto& ring : rings) {
        std::vector<CustomerKey> keys;
        for (std::size_t member : ring) {
            const auto& c = customers[member];
            keys.push_back(derive_customer_key(c.first_name, c.last_name, c.job, c.date_of_birth, c.home_address));
        }
        dataset.rings.push_back(std::move(keys));
    }
    return dataset;
}

}  // namespace custemb
