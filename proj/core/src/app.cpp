#include "custemb/app.hpp"

#include "custemb/corpus.hpp"
#include "custemb/embed.hpp"
#include "custemb/error.hpp"
#include "custemb/ingest.hpp"
#include "custemb/simaug.hpp"
#include "json_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace custemb {

namespace fs = std::filesystem;
using detail::Json;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    const fs::path p(path);
    return p.is_absolute() || base_dir.empty() ? p.string() : (fs::path(base_dir) / p).lexically_normal().string();
}

Json parse_json(std::string_view text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("not valid JSON: ") + e.what(), what);
    }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(std::string_view text, const std::string& base_dir,
                                         std::vector<std::string>* warnings) {
    const Json j = parse_json(text, "config");
    if (!j.is_object()) throw ConfigError("the document must be an object", "config");
    PipelineConfig c;
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("must be a non-negative integer", "seed");
        c.apply_seed(j.at("seed").get<std::uint64_t>());
    }
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const Json& v = item.value();
        if (key == "input") {
            if (v.is_null()) continue;
            if (!v.is_string()) throw ConfigError("must be a path", key);
            c.input = resolve(v.get<std::string>(), base_dir);
        } else if (key == "synthetic") {
            c.synthetic = detail::synthetic_config_from_json(v, key, c.synthetic);
        } else if (key == "embed") {
            c.experiment.embed = detail::train_config_from_json(v, key, c.experiment.embed);
        } else if (key == "augment") {
            c.experiment.augment = detail::augment_config_from_json(v, key, c.experiment.augment);
        } else if (key == "split") {
            c.experiment.split = detail::split_config_from_json(v, key, c.experiment.split);
        } else if (key == "models") {
            c.experiment.models = detail::models_from_json(v, key, warnings);
        } else if (key == "groups") {
            if (!v.is_array()) throw ConfigError("must be a list of group numbers", key);
            c.experiment.groups.clear();
            for (const auto& g : v) {
                if (!g.is_number_integer()) throw ConfigError("must be a list of group numbers", key);
                c.experiment.groups.push_back(g.get<int>());
            }
        } else if (key == "keep_category") {
            if (!v.is_boolean()) throw ConfigError("must be true or false", key);
            c.experiment.keep_category = v.get<bool>();
        } else if (key == "output_dir") {
            if (!v.is_string()) throw ConfigError("must be a path", key);
            c.output_dir = resolve(v.get<std::string>(), base_dir);
        } else if (key == "seed") {
            continue;
        } else {
            throw ConfigError("unknown key", key);
        }
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", "config");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str(), fs::path(path).parent_path().string(), warnings);
}

void PipelineConfig::apply_seed(std::uint64_t seed) {
    synthetic.seed = seed;
    experiment.embed.seed = seed;
    experiment.augment.seed = seed;
    experiment.split.seed = seed;
}

void PipelineConfig::validate() const {
    if (input) {
        if (!fs::exists(*input)) throw ConfigError("file '" + *input + "' does not exist", "input");
    } else {
        synthetic.validate();
    }
    experiment.validate();
}

std::string PipelineConfig::to_json() const {
    Json j;
    j["input"] = input ? Json(*input) : Json();
    j["synthetic"] = detail::to_json(synthetic);
    j["embed"] = detail::to_json(experiment.embed);
    j["augment"] = detail::to_json(experiment.augment);
    j["split"] = detail::to_json(experiment.split);
    j["models"] = detail::models_to_json(experiment.effective_models());
    j["groups"] = experiment.groups;
    j["keep_category"] = experiment.keep_category;
    j["output_dir"] = output_dir;
    return j.dump(2) + "\n";
}

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 0;

    std::string input;
    std::string corpus;
    std::string vectors;
    std::string features;
    std::string model;
    std::string method = "similarity";
    bool keep_category = false;
};

class Runner {
public:
    Runner(const Options& opt, std::ostream& out, std::ostream& err) : opt_(opt), out_(out), err_(err) {}

    void log(const std::string& line) { err_ << "custemb: " << line << '\n'; }

    PipelineConfig config() {
        if (!config_) {
            std::vector<std::string> warnings;
            config_ = opt_.config.empty() ? PipelineConfig{} : PipelineConfig::load(opt_.config, &warnings);
            for (const auto& w : warnings) log("warning: " + w);
            if (opt_.seed) config_->apply_seed(*opt_.seed);
            config_->experiment.threads = opt_.threads;
            if (!opt_.out.empty()) config_->output_dir = opt_.out;
            if (!opt_.input.empty()) config_->input = opt_.input;
        }
        return *config_;
    }

    fs::path out_dir() {
        const fs::path dir = config().output_dir;
        fs::create_directories(dir);
        return dir;
    }

    void write_effective(const fs::path& dir, const std::string& command, Json settings) {
        Json j;
        j["command"] = command;
        j["threads"] = opt_.threads;
        for (auto& item : settings.items()) j[item.key()] = item.value();
        write_text(dir / "effective_config.json", j.dump(2) + "\n");
    }

    std::vector<RawTransaction> load_transactions(const std::string& path) {
        const ParseResult parsed = parse_transactions_file(path);
        log("read " + std::to_string(parsed.rows_read) + " rows from " + path + ", skipped " +
            std::to_string(parsed.skipped));
        for (const auto& d : parsed.diagnostics) log("  line " + std::to_string(d.line) + ": " + d.reason);
        last_parse_ = parsed;
        last_parse_.transactions.clear();
        return parsed.transactions;
    }

    std::string require_input() {
        const auto c = config();
        if (!c.input) throw ConfigError("a transactions file is required (--input or \"input\")", "input");
        return *c.input;
    }

    static Json parse_summary(const ParseResult& p) {
        Json diagnostics = Json::array();
        for (const auto& d : p.diagnostics) diagnostics.push_back(Json{{"line", d.line}, {"reason", d.reason}});
        return Json{{"rows_read", p.rows_read},
                    {"records", p.rows_read - p.skipped},
                    {"skipped", p.skipped},
                    {"diagnostics", diagnostics}};
    }

    int synth() {
        const auto c = config();
        c.synthetic.validate();
        const fs::path dir = out_dir();
        const auto data = generate_synthetic(c.synthetic);
        std::ostringstream csv;
        write_transactions(csv, data.transactions);
        write_text(dir / "transactions.csv", csv.str());
        std::string rings;
        for (const auto& ring : data.rings) {
            for (std::size_t i = 0; i < ring.size(); ++i) rings += (i ? " " : "") + ring[i].value;
            rings += '\n';
        }
        write_text(dir / "rings.txt", rings);
        write_effective(dir, "synth", Json{{"synthetic", detail::to_json(c.synthetic)}});
        log("wrote " + std::to_string(data.transactions.size()) + " transactions to " +
            (dir / "transactions.csv").string());
        return 0;
    }

    int ingest() {
        const std::string input = require_input();
        const fs::path dir = out_dir();
        const auto transactions = load_transactions(input);
        FeatureOptions fo;
        std::optional<EmbeddingSpace> space;
        if (!opt_.vectors.empty()) {
            space = load_vectors(opt_.vectors);
            fo.mode = FeatureMode::kEmbeddings;
            fo.space = &*space;
            fo.keep_category = opt_.keep_category;
        }
        const FeatureTable table = build_feature_table(transactions, fo);
        std::ostringstream csv;
        write_feature_table(csv, table);
        write_text(dir / "features.csv", csv.str());
        Json report = parse_summary(last_parse_);
        report["features"] = table.cols();
        write_text(dir / "ingest_report.json", report.dump(2) + "\n");
        write_effective(dir, "ingest",
                        Json{{"input", input},
                             {"mode", space ? "embeddings" : "onehot"},
                             {"vectors", opt_.vectors},
                             {"keep_category", fo.keep_category}});
        log("wrote " + std::to_string(table.rows()) + " x " + std::to_string(table.cols()) + " features");
        return 0;
    }

    int corpus() {
        const std::string input = require_input();
        const fs::path dir = out_dir();
        const SentenceCorpus corpus = build_sequences(load_transactions(input));
        std::ostringstream text;
        write_corpus(text, corpus);
        write_text(dir / "corpus.txt", text.str());
        write_effective(dir, "corpus", Json{{"input", input}});
        log("wrote " + std::to_string(corpus.sentences.size()) + " sentences, " +
            std::to_string(corpus.token_count()) + " tokens");
        return 0;
    }

    int embed() {
        auto c = config();
        const fs::path dir = out_dir();
        SentenceCorpus corpus;
        std::string source;
        if (!opt_.corpus.empty()) {
            std::istringstream in(read_text(opt_.corpus));
            corpus = read_corpus(in);
            source = opt_.corpus;
        } else {
            source = require_input();
            corpus = build_sequences(load_transactions(source));
        }
        TrainConfig tc = c.experiment.embed;
        tc.threads = opt_.threads;
        TrainLog tlog;
        const EmbeddingSpace space = train(corpus, tc, &tlog);
        save_vectors(space, (dir / "vectors.txt").string());
        write_text(dir / "training_log.json", Json{{"epoch_loss", tlog.epoch_loss}, {"pairs", tlog.pairs}}.dump(2) + "\n");
        write_effective(dir, "embed", Json{{"source", source}, {"embed", detail::to_json(tc)}});
        log("trained " + std::to_string(space.vocab.size()) + " vectors of dim " + std::to_string(space.dim));
        return 0;
    }

    FeatureTable load_features(const std::string& path) {
        std::istringstream in(read_text(path));
        return read_feature_table(in);
    }

    int augment() {
        auto c = config();
        if (opt_.features.empty()) throw ConfigError("a feature table is required", "features");
        const fs::path dir = out_dir();
        const FeatureTable table = load_features(opt_.features);
        const AugmentConfig ac = c.experiment.augment;
        ac.validate();
        std::pair<FeatureTable, AugmentationReport> result;
        if (opt_.method == "similarity") {
            if (opt_.vectors.empty()) throw ConfigError("similarity relabelling needs --vectors", "vectors");
            result = relabel_by_similarity(table, load_vectors(opt_.vectors), ac.tau);
        } else if (opt_.method == "smote") {
            const std::size_t extra =
                ac.smote_extra > 0
                    ? ac.smote_extra
                    : static_cast<std::size_t>(std::llround(static_cast<double>(table.positives()) * kReferenceSmoteRatio));
            result = smote(table, ac.smote_k, extra, ac.seed);
        } else {
            throw ConfigError("must be 'similarity' or 'smote'", "method");
        }
        std::ostringstream csv;
        write_feature_table(csv, result.first);
        write_text(dir / "augmented.csv", csv.str());
        write_text(dir / "augmentation.json", result.second.to_json());
        write_effective(dir, "augment",
                        Json{{"features", opt_.features},
                             {"method", opt_.method},
                             {"vectors", opt_.vectors},
                             {"augment", detail::to_json(ac)}});
        log(result.second.method + ": positives " + std::to_string(result.second.positives_before) + " -> " +
            std::to_string(result.second.positives_after));
        return 0;
    }

    ModelSpec model_spec(ModelKind kind) {
        const auto c = config();
        for (const auto& m : c.experiment.models) {
            if (m.kind() == kind) return m;
        }
        ModelSpec spec = ModelSpec::defaults(kind);
        if (opt_.seed) {
            std::visit(
                [&](auto& p) {
                    if constexpr (requires { p.seed; }) p.seed = *opt_.seed;
                },
                spec.params);
        }
        return spec;
    }

    int train_cmd() {
        if (opt_.features.empty()) throw ConfigError("a feature table is required", "features");
        if (opt_.model.empty()) throw ConfigError("a model kind is required", "model");
        const fs::path dir = out_dir();
        const ModelSpec spec = model_spec(parse_model_kind(opt_.model));
        const FeatureTable table = load_features(opt_.features);
        const TrainedModel model = train_model(table, spec, opt_.threads);
        model.save((dir / "model.json").string());
        write_effective(dir, "train",
                        Json{{"features", opt_.features},
                             {"model", detail::models_to_json(std::span<const ModelSpec>(&spec, 1))[0]}});
        log("trained " + std::string(to_string(model.kind())) + " on " + std::to_string(table.rows()) + " rows");
        return 0;
    }

    static std::size_t embedding_width(const std::vector<std::string>& columns) {
        std::size_t n = 0;
        for (const auto& c : columns) n += c.starts_with("emb_") ? 1 : 0;
        return n;
    }

    static void check_columns(const std::vector<std::string>& expected, const std::vector<std::string>& actual) {
        const std::size_t want = embedding_width(expected);
        const std::size_t have = embedding_width(actual);
        if (want != have) {
            throw ConfigError("embedding dimension mismatch: the model was trained on dim " + std::to_string(want) +
                                  ", the input has dim " + std::to_string(have),
                              "dim");
        }
        if (expected != actual) {
            for (std::size_t i = 0; i < std::max(expected.size(), actual.size()); ++i) {
                const std::string a = i < expected.size() ? expected[i] : "<none>";
                const std::string b = i < actual.size() ? actual[i] : "<none>";
                if (a != b) {
                    throw SchemaError("feature columns differ from the model at position " + std::to_string(i) +
                                      ": expected '" + a + "', found '" + b + "'");
                }
            }
        }
    }

    int evaluate() {
        if (opt_.model.empty()) throw ConfigError("a saved model is required", "model");
        const fs::path dir = out_dir();
        const TrainedModel model = TrainedModel::load(opt_.model);
        FeatureTable table;
        std::optional<EmbeddingSpace> space;
        if (!opt_.vectors.empty()) {
            space = load_vectors(opt_.vectors);
            const std::size_t want = embedding_width(model.columns());
            if (want != space->dim) {
                throw ConfigError("embedding dimension mismatch: the model was trained on dim " +
                                      std::to_string(want) + ", the vectors have dim " + std::to_string(space->dim),
                                  "dim");
            }
        }
        if (!opt_.features.empty()) {
            table = load_features(opt_.features);
        } else {
            const std::string input = require_input();
            FeatureOptions fo;
            for (const auto& c : model.columns()) {
                if (c.starts_with("category_")) fo.categories.push_back(c.substr(9));
            }
            if (embedding_width(model.columns()) > 0) {
                if (!space) throw ConfigError("the model uses embeddings; pass --vectors", "vectors");
                fo.mode = FeatureMode::kEmbeddings;
                fo.space = &*space;
                fo.keep_category = !fo.categories.empty();
            }
            table = build_feature_table(load_transactions(input), fo);
        }
        check_columns(model.columns(), table.column_names);
        const auto predicted = model.predict(table, opt_.threads);
        const Confusion c = confusion(table.labels, predicted);
        const Prf p = prf(c);
        const Prf m = macro_prf(c);
        const Json metrics{{"model", std::string(to_string(model.kind()))},
                           {"rows", table.rows()},
                           {"precision", p.precision},
                           {"recall", p.recall},
                           {"f1", p.f1},
                           {"macro", {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}},
                           {"confusion", {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}}}};
        write_text(dir / "metrics.json", metrics.dump(2) + "\n");
        write_effective(dir, "evaluate",
                        Json{{"model", opt_.model}, {"features", opt_.features}, {"vectors", opt_.vectors}});
        out_ << "precision " << p.precision << " recall " << p.recall << " f1 " << p.f1 << '\n';
        return 0;
    }

    int pipeline() {
        const PipelineConfig c = config();
        c.validate();
        const fs::path dir = out_dir();
        fs::remove(dir / "FAILED");
        write_text(dir / "effective_config.json", c.to_json());

        Json manifest{{"status", "running"}, {"stages", Json::array()}};
        std::string stage;
        auto record = [&](const std::string& name, std::vector<std::string> artifacts) {
            manifest["stages"].push_back(Json{{"name", name}, {"status", "complete"}, {"artifacts", artifacts}});
            write_text(dir / "manifest.json", manifest.dump(2) + "\n");
        };
        write_text(dir / "manifest.json", manifest.dump(2) + "\n");

        try {
            stage = "data";
            std::vector<RawTransaction> transactions;
            if (c.input) {
                transactions = load_transactions(*c.input);
                write_text(dir / "data" / "ingest_report.json", parse_summary(last_parse_).dump(2) + "\n");
                record(stage, {"data/ingest_report.json"});
            } else {
                auto data = generate_synthetic(c.synthetic);
                transactions = std::move(data.transactions);
                std::ostringstream csv;
                write_transactions(csv, transactions);
                write_text(dir / "data" / "transactions.csv", csv.str());
                log("generated " + std::to_string(transactions.size()) + " synthetic transactions");
                record(stage, {"data/transactions.csv"});
            }

            stage = "corpus";
            const SentenceCorpus corpus = build_sequences(transactions);
            std::ostringstream corpus_text;
            write_corpus(corpus_text, corpus);
            write_text(dir / "corpus" / "corpus.txt", corpus_text.str());
            log("corpus: " + std::to_string(corpus.sentences.size()) + " sentences");
            record(stage, {"corpus/corpus.txt"});

            stage = "embed";
            TrainConfig tc = c.experiment.embed;
            tc.threads = c.experiment.threads;
            TrainLog tlog;
            const EmbeddingSpace space = train(corpus, tc, &tlog);
            fs::create_directories(dir / "embed");
            save_vectors(space, (dir / "embed" / "vectors.txt").string());
            write_text(dir / "embed" / "training_log.json",
                       Json{{"epoch_loss", tlog.epoch_loss}, {"pairs", tlog.pairs}}.dump(2) + "\n");
            log("embedding: " + std::to_string(space.vocab.size()) + " customers, dim " + std::to_string(space.dim));
            record(stage, {"embed/vectors.txt", "embed/training_log.json"});

            stage = "experiment";
            log("training " + std::to_string(c.experiment.effective_models().size()) + " models on " +
                std::to_string(c.experiment.groups.size()) + " groups");
            const ExperimentReport report = run_groups(transactions, space, c.experiment);
            write_text(dir / "report" / "report.csv", report.to_csv());
            write_text(dir / "report" / "report.txt", report.to_text());
            write_text(dir / "report" / "report.json", report.to_json());
            record(stage, {"report/report.csv", "report/report.txt", "report/report.json"});
            out_ << report.to_text();
        } catch (const std::exception& e) {
            manifest["status"] = "failed";
            manifest["failed_stage"] = stage;
            manifest["error"] = e.what();
            write_text(dir / "manifest.json", manifest.dump(2) + "\n");
            write_text(dir / "FAILED", "stage " + stage + ": " + e.what() + "\n");
            throw;
        }
        manifest["status"] = "complete";
        write_text(dir / "manifest.json", manifest.dump(2) + "\n");
        return 0;
    }

private:
    const Options& opt_;
    std::ostream& out_;
    std::ostream& err_;
    std::optional<PipelineConfig> config_;
    ParseResult last_parse_;
};

void add_common(CLI::App* sub, Options& opt) {
    sub->add_option("--config", opt.config, "JSON configuration file");
    sub->add_option("--seed", opt.seed, "Override the seeds of this command");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--threads", opt.threads, "Worker threads; 0 is deterministic single-threaded mode")
        ->check(CLI::NonNegativeNumber);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options opt;
    CLI::App app{"Customer-embedding enrichment for transaction classification", "custemb"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto* synth = app.add_subcommand("synth", "Generate a planted-ring synthetic transaction set");
    add_common(synth, opt);

    auto* ingest = app.add_subcommand("ingest", "Parse transactions and write a feature table");
    add_common(ingest, opt);
    ingest->add_option("--input", opt.input, "Transactions CSV");
    ingest->add_option("--vectors", opt.vectors, "Use customer embeddings from this vector file");
    ingest->add_flag("--keep-category", opt.keep_category, "Keep the category one-hot with embeddings");

    auto* corpus = app.add_subcommand("corpus", "Build customer sentences");
    add_common(corpus, opt);
    corpus->add_option("--input", opt.input, "Transactions CSV");

    auto* embed = app.add_subcommand("embed", "Train customer embeddings");
    add_common(embed, opt);
    embed->add_option("--input", opt.input, "Transactions CSV");
    embed->add_option("--corpus", opt.corpus, "Sentence file (one sentence per line)");

    auto* augment = app.add_subcommand("augment", "Relabel by similarity or oversample with SMOTE");
    add_common(augment, opt);
    augment->add_option("--features", opt.features, "Feature table CSV")->required();
    augment->add_option("--method", opt.method, "similarity or smote");
    augment->add_option("--vectors", opt.vectors, "Vector file (similarity)");

    auto* train_sub = app.add_subcommand("train", "Train one classifier");
    add_common(train_sub, opt);
    train_sub->add_option("--features", opt.features, "Feature table CSV")->required();
    train_sub->add_option("--model", opt.model, "DT, RF, LR, KNN or MLP")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Score a saved model");
    add_common(evaluate, opt);
    evaluate->add_option("--model", opt.model, "Saved model JSON")->required();
    evaluate->add_option("--features", opt.features, "Feature table CSV");
    evaluate->add_option("--input", opt.input, "Transactions CSV");
    evaluate->add_option("--vectors", opt.vectors, "Vector file for embedding features");

    auto* pipeline = app.add_subcommand("pipeline", "Run the four-group experiment end to end");
    add_common(pipeline, opt);
    pipeline->add_option("--input", opt.input, "Transactions CSV (synthetic data when omitted)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "custemb: " << e.what() << '\n';
        return static_cast<int>(ExitCode::kConfig);
    }

    Runner runner(opt, out, err);
    try {
        if (*synth) return runner.synth();
        if (*ingest) return runner.ingest();
        if (*corpus) return runner.corpus();
        if (*embed) return runner.embed();
        if (*augment) return runner.augment();
        if (*train_sub) return runner.train_cmd();
        if (*evaluate) return runner.evaluate();
        if (*pipeline) return runner.pipeline();
    } catch (const Error& e) {
        err << "custemb: error: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const fs::filesystem_error& e) {
        err << "custemb: error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::kData);
    } catch (const std::exception& e) {
        err << "custemb: error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::kStage);
    }
    return static_cast<int>(ExitCode::kConfig);
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace custemb
