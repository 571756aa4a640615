#include "json_io.hpp"

#include "custemb/error.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace custemb::detail {

namespace {

class Reader {
public:
    Reader(const Json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j_.is_null() && !j_.is_object()) throw ConfigError("must be an object", prefix_);
    }

    template <typename T>
    Reader& field(const char* name, T& out) {
        seen_.insert(name);
        if (j_.is_null() || !j_.contains(name)) return *this;
        const Json& v = j_.at(name);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("must be true or false", key(name));
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError("must be an integer", key(name));
            if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned()) {
                throw ConfigError("must be non-negative", key(name));
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError("must be a number", key(name));
        }
        try {
            out = v.get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("has the wrong type", key(name));
        }
        return *this;
    }

    Reader& nested(const char* name, const std::function<void(const Json&, const std::string&)>& fn) {
        seen_.insert(name);
        if (!j_.is_null() && j_.contains(name)) fn(j_.at(name), key(name));
        return *this;
    }

    void finish() const {
        if (j_.is_null()) return;
        for (const auto& item : j_.items()) {
            if (!seen_.contains(item.key())) throw ConfigError("unknown key", key(item.key()));
        }
    }

private:
    std::string key(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

    const Json& j_;
    std::string prefix_;
    std::set<std::string, std::less<>> seen_;
};

}  // namespace

Json to_json(const TrainConfig& c) {
    return Json{{"dim", c.dim},
                {"window", c.window},
                {"min_count", c.min_count},
                {"epochs", c.epochs},
                {"negatives", c.negatives},
                {"lr_start", c.lr_start},
                {"lr_floor", c.lr_floor},
                {"subword",
                 Json{{"enabled", c.subword.enabled},
                      {"ngram_min", c.subword.ngram_min},
                      {"ngram_max", c.subword.ngram_max},
                      {"buckets", c.subword.buckets}}},
                {"seed", c.seed}};
}

Json to_json(const AugmentConfig& c) {
    return Json{{"tau", c.tau}, {"smote_k", c.smote_k}, {"smote_extra", c.smote_extra}, {"seed", c.seed}};
}

Json to_json(const SplitConfig& c) {
    return Json{{"test_fraction", c.test_fraction}, {"seed", c.seed}, {"stratified", c.stratified}};
}

Json to_json(const SyntheticConfig& c) {
    return Json{{"n_customers", c.n_customers},
                {"n_transactions", c.n_transactions},
                {"n_categories", c.n_categories},
                {"n_rings", c.n_rings},
                {"ring_size", c.ring_size},
                {"fraud_rate", c.fraud_rate},
                {"ring_fraud_share", c.ring_fraud_share},
                {"ring_participation", c.ring_participation},
                {"year", c.year},
                {"seed", c.seed}};
}

Json models_to_json(std::span<const ModelSpec> models) {
    Json out = Json::array();
    for (const auto& m : models) {
        out.push_back(Json{{"kind", std::string(to_string(m.kind()))}, {"params", hyperparameters_to_json(m)}});
    }
    return out;
}

TrainConfig train_config_from_json(const Json& j, const std::string& prefix, TrainConfig c) {
    Reader(j, prefix)
        .field("dim", c.dim)
        .field("window", c.window)
        .field("min_count", c.min_count)
        .field("epochs", c.epochs)
        .field("negatives", c.negatives)
        .field("lr_start", c.lr_start)
        .field("lr_floor", c.lr_floor)
        .field("seed", c.seed)
        .nested("subword",
                [&](const Json& s, const std::string& p) {
                    Reader r(s, p);
                    r.field("enabled", c.subword.enabled)
                        .field("ngram_min", c.subword.ngram_min)
                        .field("ngram_max", c.subword.ngram_max)
                        .field("buckets", c.subword.buckets)
                        .finish();
                })
        .finish();
    return c;
}

AugmentConfig augment_config_from_json(const Json& j, const std::string& prefix, AugmentConfig c) {
    Reader(j, prefix)
        .field("tau", c.tau)
        .field("smote_k", c.smote_k)
        .field("smote_extra", c.smote_extra)
        .field("seed", c.seed)
        .finish();
    return c;
}

SplitConfig split_config_from_json(const Json& j, const std::string& prefix, SplitConfig c) {
    Reader(j, prefix).field("test_fraction", c.test_fraction).field("seed", c.seed).field("stratified", c.stratified).finish();
    return c;
}

SyntheticConfig synthetic_config_from_json(const Json& j, const std::string& prefix, SyntheticConfig c) {
    Reader(j, prefix)
        .field("n_customers", c.n_customers)
        .field("n_transactions", c.n_transactions)
        .field("n_categories", c.n_categories)
        .field("n_rings", c.n_rings)
        .field("ring_size", c.ring_size)
        .field("fraud_rate", c.fraud_rate)
        .field("ring_fraud_share", c.ring_fraud_share)
        .field("ring_participation", c.ring_participation)
        .field("year", c.year)
        .field("seed", c.seed)
        .finish();
    return c;
}

std::vector<ModelSpec> models_from_json(const Json& j, const std::string& prefix, std::vector<std::string>* warnings) {
    if (!j.is_array()) throw ConfigError("must be a list of models", prefix);
    std::vector<ModelSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string item_key = prefix + "[" + std::to_string(i) + "]";
        const Json& item = j.at(i);
        try {
            if (item.is_string()) {
                out.push_back(ModelSpec::defaults(parse_model_kind(item.get<std::string>())));
                continue;
            }
            if (!item.is_object() || !item.contains("kind") || !item.at("kind").is_string()) {
                throw ConfigError("must be a model name or an object with a \"kind\"", item_key);
            }
            for (const auto& kv : item.items()) {
                if (kv.key() != "kind" && kv.key() != "params") throw ConfigError("unknown key", item_key + "." + kv.key());
            }
            const ModelKind kind = parse_model_kind(item.at("kind").get<std::string>());
            out.push_back(model_spec_from_json(kind, item.contains("params") ? item.at("params") : Json(),
                                               item_key + ".params", warnings));
        } catch (const UnsupportedModelError& e) {
            if (e.key() != "model") throw;
            throw UnsupportedModelError(e.message(), item_key + ".kind");
        } catch (const ConfigError& e) {
            if (e.key() != "model") throw;
            throw ConfigError(e.message(), item_key + ".kind");
        }
    }
    return out;
}

}  // namespace custemb::detail
