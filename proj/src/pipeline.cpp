#include "diabrisk/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <unordered_map>

#include "diabrisk/common.hpp"
#include "diabrisk/csv.hpp"
#include "diabrisk/rng.hpp"

namespace diabrisk {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir.string());
}

template <class T>
void maybe(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void check_known_keys(const Json& j, std::initializer_list<const char*> known,
                      const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ValidationError("unknown config key '" + it.key() + "' in " + where);
    }
}

} // namespace

PipelineConfig PipelineConfig::desk() { return PipelineConfig{}; }

PipelineConfig PipelineConfig::paper() {
    PipelineConfig c;
    c.profile = "paper";
    c.synth.structured_cols = 48;
    c.tagger.vocab_size = 10000;
    c.tagger.train.embed_dim = 300;
    c.tagger.train.hidden_units = 128;
    c.tagger.train.num_layers = 2;
    c.tagger.train.learning_rate = 0.001;
    c.tagger.train.batch_size = 32;
    c.tagger.train.dropout_rate = 0.5;
    c.tagger.train.max_epochs = 100;
    c.tagger.train.patience = 10;
    c.risk.gb.eta = 0.1;
    c.risk.gb.max_depth = 5;
    c.risk.gb.min_child_weight = 1.0;
    c.risk.gb.subsample = 0.8;
    c.risk.gb.colsample = 0.8;
    c.risk.gb.num_rounds = 100;
    c.risk.lr_c = 0.1;
    c.eval.train_ratio = 0.8;
    c.eval.k = 5;
    return c;
}

void PipelineConfig::validate() const {
    synth.validate();
    tagger.train.validate();
    risk.gb.validate();
    if (tagger.vocab_size == 0) throw ValidationError("vocab_size must be positive");
    if (!(tagger.val_fraction > 0.0) || tagger.val_fraction >= 1.0) {
        throw ValidationError("tagger val_fraction must be in (0,1)");
    }
    if (!(risk.lr_c > 0.0)) throw ValidationError("lr C must be positive");
    if (!(risk.lr_tolerance > 0.0)) throw ValidationError("lr tolerance must be positive");
    if (risk.lr_max_iter == 0) throw ValidationError("lr max_iter must be positive");
    if (risk.smote_k == 0) throw ValidationError("smote_k must be positive");
    if (!(risk.ensemble_step > 0.0) || risk.ensemble_step > 1.0) {
        throw ValidationError("ensemble_step must be in (0,1]");
    }
    if (!(risk.val_fraction > 0.0) || risk.val_fraction >= 1.0) {
        throw ValidationError("risk val_fraction must be in (0,1)");
    }
    if (!(eval.train_ratio > 0.0) || eval.train_ratio >= 1.0) {
        throw ValidationError("train_ratio must be in (0,1)");
    }
    if (eval.k < 2) throw ValidationError("k must be at least 2");
    if (profile != "desk" && profile != "paper") {
        throw ValidationError("profile must be 'desk' or 'paper'");
    }
}

Json PipelineConfig::to_json() const {
    Json j;
    j["profile"] = profile;
    j["seed"] = seed;
    Json s;
    s["n_patients"] = synth.n_patients;
    s["prevalence"] = synth.prevalence;
    s["entity_rate"] = synth.entity_rate;
    s["noise"] = synth.noise;
    s["missing_rate"] = synth.missing_rate;
    s["structured_cols"] = synth.structured_cols;
    j["synth"] = std::move(s);
    Json t;
    t["vocab_size"] = tagger.vocab_size;
    t["val_fraction"] = tagger.val_fraction;
    Json tc;
    tc["learning_rate"] = tagger.train.learning_rate;
    tc["batch_size"] = tagger.train.batch_size;
    tc["embed_dim"] = tagger.train.embed_dim;
    tc["hidden_units"] = tagger.train.hidden_units;
    tc["num_layers"] = tagger.train.num_layers;
    tc["dropout_rate"] = tagger.train.dropout_rate;
    tc["max_epochs"] = tagger.train.max_epochs;
    tc["patience"] = tagger.train.patience;
    tc["grad_clip"] = tagger.train.grad_clip;
    tc["bidirectional"] = tagger.train.bidirectional;
    tc["use_crf"] = tagger.train.use_crf;
    tc["constrain_bio"] = tagger.train.constrain_bio;
    t["train"] = std::move(tc);
    j["tagger"] = std::move(t);
    Json r;
    Json g;
    g["eta"] = risk.gb.eta;
    g["max_depth"] = risk.gb.max_depth;
    g["min_child_weight"] = risk.gb.min_child_weight;
    g["subsample"] = risk.gb.subsample;
    g["colsample"] = risk.gb.colsample;
    g["lambda"] = risk.gb.lambda;
    g["gamma"] = risk.gb.gamma;
    g["num_rounds"] = risk.gb.num_rounds;
    r["gb"] = std::move(g);
    r["lr_c"] = risk.lr_c;
    r["lr_tolerance"] = risk.lr_tolerance;
    r["lr_max_iter"] = risk.lr_max_iter;
    r["smote_k"] = risk.smote_k;
    r["ensemble_step"] = risk.ensemble_step;
    r["val_fraction"] = risk.val_fraction;
    j["risk"] = std::move(r);
    Json e;
    e["train_ratio"] = eval.train_ratio;
    e["k"] = eval.k;
    j["eval"] = std::move(e);
    return j;
}

PipelineConfig config_from_json(const Json& j, PipelineConfig base) {
    check_known_keys(j, {"profile", "seed", "synth", "tagger", "risk", "eval"}, "config");
    PipelineConfig c = std::move(base);
    maybe(j, "profile", c.profile);
    maybe(j, "seed", c.seed);
    if (j.contains("synth")) {
        const Json& s = j.at("synth");
        check_known_keys(s, {"n_patients", "prevalence", "entity_rate", "noise", "missing_rate",
                             "structured_cols"},
                         "synth");
        maybe(s, "n_patients", c.synth.n_patients);
        maybe(s, "prevalence", c.synth.prevalence);
        maybe(s, "entity_rate", c.synth.entity_rate);
        maybe(s, "noise", c.synth.noise);
        maybe(s, "missing_rate", c.synth.missing_rate);
        maybe(s, "structured_cols", c.synth.structured_cols);
    }
    if (j.contains("tagger")) {
        const Json& t = j.at("tagger");
        check_known_keys(t, {"vocab_size", "val_fraction", "train"}, "tagger");
        maybe(t, "vocab_size", c.tagger.vocab_size);
        maybe(t, "val_fraction", c.tagger.val_fraction);
        if (t.contains("train")) {
            const Json& tc = t.at("train");
            check_known_keys(tc,
                             {"learning_rate", "batch_size", "embed_dim", "hidden_units",
                              "num_layers", "dropout_rate", "max_epochs", "patience", "grad_clip",
                              "bidirectional", "use_crf", "constrain_bio"},
                             "tagger.train");
            maybe(tc, "learning_rate", c.tagger.train.learning_rate);
            maybe(tc, "batch_size", c.tagger.train.batch_size);
            maybe(tc, "embed_dim", c.tagger.train.embed_dim);
            maybe(tc, "hidden_units", c.tagger.train.hidden_units);
            maybe(tc, "num_layers", c.tagger.train.num_layers);
            maybe(tc, "dropout_rate", c.tagger.train.dropout_rate);
            maybe(tc, "max_epochs", c.tagger.train.max_epochs);
            maybe(tc, "patience", c.tagger.train.patience);
            maybe(tc, "grad_clip", c.tagger.train.grad_clip);
            maybe(tc, "bidirectional", c.tagger.train.bidirectional);
            maybe(tc, "use_crf", c.tagger.train.use_crf);
            maybe(tc, "constrain_bio", c.tagger.train.constrain_bio);
        }
    }
    if (j.contains("risk")) {
        const Json& r = j.at("risk");
        check_known_keys(r, {"gb", "lr_c", "lr_tolerance", "lr_max_iter", "smote_k",
                             "ensemble_step", "val_fraction"},
                         "risk");
        if (r.contains("gb")) {
            const Json& g = r.at("gb");
            check_known_keys(g, {"eta", "max_depth", "min_child_weight", "subsample", "colsample",
                                 "lambda", "gamma", "num_rounds"},
                             "risk.gb");
            maybe(g, "eta", c.risk.gb.eta);
            maybe(g, "max_depth", c.risk.gb.max_depth);
            maybe(g, "min_child_weight", c.risk.gb.min_child_weight);
            maybe(g, "subsample", c.risk.gb.subsample);
            maybe(g, "colsample", c.risk.gb.colsample);
            maybe(g, "lambda", c.risk.gb.lambda);
            maybe(g, "gamma", c.risk.gb.gamma);
            maybe(g, "num_rounds", c.risk.gb.num_rounds);
        }
        maybe(r, "lr_c", c.risk.lr_c);
        maybe(r, "lr_tolerance", c.risk.lr_tolerance);
        maybe(r, "lr_max_iter", c.risk.lr_max_iter);
        maybe(r, "smote_k", c.risk.smote_k);
        maybe(r, "ensemble_step", c.risk.ensemble_step);
        maybe(r, "val_fraction", c.risk.val_fraction);
    }
    if (j.contains("eval")) {
        const Json& e = j.at("eval");
        check_known_keys(e, {"train_ratio", "k"}, "eval");
        maybe(e, "train_ratio", c.eval.train_ratio);
        maybe(e, "k", c.eval.k);
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path* config_path, const std::string* profile,
                           const std::uint64_t* seed) {
    Json file = Json::object();
    if (config_path) file = read_json_file(*config_path);

    std::string prof = "desk";
    if (file.contains("profile")) prof = file.at("profile").get<std::string>();
    if (profile) prof = *profile;
    PipelineConfig base;
    if (prof == "paper") {
        base = PipelineConfig::paper();
    } else if (prof == "desk") {
        base = PipelineConfig::desk();
    } else {
        throw ValidationError("profile must be 'desk' or 'paper', got '" + prof + "'");
    }

    PipelineConfig c = config_from_json(file, std::move(base));
    c.profile = prof;
    if (seed) c.seed = *seed;
    c.validate();
    return c;
}

std::string config_hash(const PipelineConfig& config) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.to_json().dump())));
    return buf;
}

void RunManifest::write(const std::filesystem::path& out_dir) const {
    Json j = schema_header("manifest");
    j["version"] = kVersion;
    j["command"] = command;
    j["seed"] = config.seed;
    j["profile"] = config.profile;
    j["config_hash"] = config_hash(config);
    j["config"] = config.to_json();
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    Json t;
    for (const auto& [k, v] : timings_ms) t[k] = round6(v);
    j["timings_ms"] = std::move(t);
    write_json_file(out_dir / "manifest.json", j);
}

GenerateResult run_generate(const PipelineConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    auto start = Clock::now();
    ensure_dir(out_dir);

    Corpus corpus = generate_synthetic_corpus(config.seed, config.synth);
    GenerateResult result;
    result.conll = out_dir / "corpus.conll";
    result.records = out_dir / "records.csv";
    write_conll(result.conll, corpus.sentences);
    write_records_csv(result.records, corpus.records, corpus.feature_names);

    RunManifest manifest{"generate", config, {}, {result.conll.string(), result.records.string()},
                         {{"generate", ms_since(start)}}};
    manifest.write(out_dir);
    return result;
}

namespace {

Json prf_json(const PrfCounts& c) {
    Json j;
    j["gold"] = c.gold;
    j["predicted"] = c.predicted;
    j["correct"] = c.correct;
    auto val = [](double v) -> Json {
        if (std::isnan(v)) return nullptr;
        return round6(v);
    };
    j["precision"] = val(c.precision());
    j["recall"] = val(c.recall());
    j["f1"] = val(c.f1());
    return j;
}

} // namespace

TrainTaggerResult run_train_tagger(const PipelineConfig& config,
                                   const std::filesystem::path& conll,
                                   const std::filesystem::path& records,
                                   const std::filesystem::path& out_dir) {
    config.validate();
    auto start = Clock::now();
    ensure_dir(out_dir);

    Corpus corpus = load_corpus(conll, records);
    auto [train_corpus, test_corpus] =
        split_corpus(corpus, config.eval.train_ratio, derive_seed(config.seed, "split"));
    auto [fit_corpus, val_corpus] = split_corpus(train_corpus, 1.0 - config.tagger.val_fraction,
                                                 derive_seed(config.seed, "tagger-val"));
    if (fit_corpus.sentences.empty() || val_corpus.sentences.empty()) {
        throw ValidationError("train/validation sentence splits must be non-empty");
    }

    Tagger tagger;
    tagger.config = config.tagger.train;
    tagger.config.seed = derive_seed(config.seed, "tagger");
    tagger.vocab = build_vocab(fit_corpus.sentences, config.tagger.vocab_size);
    tagger.tags = corpus.tag_set;
    tagger.params = init_tagger_params(tagger.vocab.size(), tagger.tags.size(), tagger.config);

    TrainLog log = train_tagger(tagger, fit_corpus.sentences, val_corpus.sentences);

    // held-out scoring: token accuracy plus exact-match entity P/R/F1
    double token_acc = std::nan("");
    EntityScore escore;
    if (!test_corpus.sentences.empty()) {
        std::size_t correct = 0, total = 0;
        std::vector<std::vector<EntitySpan>> gold, pred;
        for (const auto& sent : test_corpus.sentences) {
            auto tags = tagger.tag(sent.tokens);
            for (std::size_t i = 0; i < tags.size(); ++i) {
                total += 1;
                if (tags[i] == sent.tags[i]) correct += 1;
            }
            gold.push_back(spans_from_bio(sent, corpus.tag_set));
            TaggedSentence p{sent.patient_id, sent.tokens, tags};
            pred.push_back(spans_from_bio(p, corpus.tag_set));
        }
        token_acc = total ? static_cast<double>(correct) / static_cast<double>(total) : std::nan("");
        escore = entity_prf(gold, pred);
    }

    TrainTaggerResult result;
    result.model = out_dir / "tagger.json";
    result.log = out_dir / "tagger_log.json";
    result.test_token_accuracy = token_acc;
    result.test_entity_f1 = test_corpus.sentences.empty() ? std::nan("") : escore.micro.f1();
    write_json_file(result.model, tagger.to_json());

    Json log_json = schema_header("tagger_log");
    Json epochs = Json::array();
    for (const auto& e : log.epochs) {
        Json row;
        row["epoch"] = e.epoch;
        row["train_loss"] = round6(e.train_loss);
        row["val_loss"] = round6(e.val_loss);
        epochs.push_back(std::move(row));
    }
    log_json["epochs"] = std::move(epochs);
    log_json["best_epoch"] = log.best_epoch;
    log_json["stopped_epoch"] = log.stopped_epoch;
    log_json["early_stopped"] = log.early_stopped;
    Json test;
    test["token_accuracy"] = std::isnan(token_acc) ? Json(nullptr) : Json(round6(token_acc));
    test["entity_micro"] = prf_json(escore.micro);
    Json per_kind;
    for (const auto& [kind, counts] : escore.per_kind) per_kind[kind] = prf_json(counts);
    test["entity_per_kind"] = std::move(per_kind);
    log_json["test"] = std::move(test);
    write_json_file(result.log, log_json);

    RunManifest manifest{"train-tagger",
                         config,
                         {conll.string(), records.string()},
                         {result.model.string(), result.log.string()},
                         {{"train_tagger", ms_since(start)}}};
    manifest.write(out_dir);
    return result;
}

ExtractResult run_extract(const PipelineConfig& config, const std::filesystem::path& tagger_model,
                          const std::filesystem::path& conll, const std::filesystem::path& records,
                          const std::filesystem::path& out_dir) {
    config.validate();
    auto start = Clock::now();
    ensure_dir(out_dir);

    Tagger tagger = Tagger::from_json(read_json_file(tagger_model));
    Corpus corpus = load_corpus(conll, records);
    for (const auto& kind : corpus.tag_set.kinds) {
        if (std::find(tagger.tags.kinds.begin(), tagger.tags.kinds.end(), kind) ==
            tagger.tags.kinds.end()) {
            throw ValidationError("corpus entity kind '" + kind + "' unknown to the tagger model");
        }
    }

    FusedSchema schema;
    schema.bow_names = tagger.vocab.tokens;
    schema.entity_kinds = tagger.tags.kinds;
    schema.structured_names = corpus.feature_names;

    std::unordered_map<std::string, std::vector<const TaggedSentence*>> by_patient;
    for (const auto& sent : corpus.sentences) by_patient[sent.patient_id].push_back(&sent);

    std::vector<FusedRecord> fused;
    fused.reserve(corpus.records.size());
    for (const auto& rec : corpus.records) {
        std::vector<std::string> all_tokens;
        std::vector<EntitySpan> all_spans;
        auto it = by_patient.find(rec.patient_id);
        if (it != by_patient.end()) {
            for (const TaggedSentence* sent : it->second) {
                auto tags = tagger.tag(sent->tokens);
                TaggedSentence predicted{sent->patient_id, sent->tokens, tags};
                for (auto& span : spans_from_bio(predicted, tagger.tags)) {
                    all_spans.push_back(std::move(span));
                }
                all_tokens.insert(all_tokens.end(), sent->tokens.begin(), sent->tokens.end());
            }
        }
        auto bow = bow_vector(all_tokens, tagger.vocab);
        auto ent = entity_features(all_spans, schema.entity_kinds);
        fused.push_back(assemble(rec.patient_id, bow, ent, rec.values, rec.label, schema));
    }

    ExtractResult result;
    result.fused = out_dir / "fused.csv";
    result.schema = out_dir / "fused_schema.json";
    write_fused_csv(result.fused, fused, schema);
    write_json_file(result.schema, schema.to_json());

    RunManifest manifest{"extract",
                         config,
                         {tagger_model.string(), conll.string(), records.string()},
                         {result.fused.string(), result.schema.string()},
                         {{"extract", ms_since(start)}}};
    manifest.write(out_dir);
    return result;
}

RiskArtifacts fit_risk_pipeline(const std::vector<FusedRecord>& train_raw,
                                const FusedSchema& schema, const RiskSettings& settings,
                                std::uint64_t seed) {
    if (train_raw.size() < 4) throw ValidationError("risk pipeline: too few training rows");
    auto [fit_idx, val_idx] = split_indices(train_raw.size(), 1.0 - settings.val_fraction,
                                            derive_seed(seed, "risk-val"));
    if (fit_idx.empty() || val_idx.empty()) {
        throw ValidationError("risk pipeline: fit/validation slices must be non-empty");
    }

    std::vector<FusedRecord> fit_raw;
    fit_raw.reserve(fit_idx.size());
    for (std::size_t i : fit_idx) fit_raw.push_back(train_raw[i]);

    RiskArtifacts art;
    art.stats = fit_scaling(fit_raw, schema);

    std::vector<FusedRecord> fit_scaled;
    fit_scaled.reserve(fit_raw.size());
    bool pos = false, neg = false;
    for (const auto& rec : fit_raw) {
        fit_scaled.push_back(standardize(rec, schema, art.stats));
        (rec.label == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) throw ValidationError("risk pipeline: fit slice has a single class");

    std::vector<FusedRecord> val_scaled;
    val_scaled.reserve(val_idx.size());
    pos = neg = false;
    for (std::size_t i : val_idx) {
        val_scaled.push_back(standardize(train_raw[i], schema, art.stats));
        (train_raw[i].label == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) throw ValidationError("risk pipeline: validation slice has a single class");

    auto balanced = smote(fit_scaled, settings.smote_k, derive_seed(seed, "smote"));

    GbConfig gb_config = settings.gb;
    gb_config.seed = derive_seed(seed, "gb");
    art.gb = fit_gbdt(balanced, gb_config);
    art.lr = fit_logreg(balanced, settings.lr_c, settings.lr_tolerance, settings.lr_max_iter,
                        derive_seed(seed, "lr"));
    art.ensemble = tune_ensemble(art.gb, art.lr, val_scaled, settings.ensemble_step);
    return art;
}

TrainRiskResult run_train_risk(const PipelineConfig& config, const std::filesystem::path& fused,
                               const std::filesystem::path& schema_path,
                               const std::filesystem::path& out_dir) {
    config.validate();
    auto start = Clock::now();
    ensure_dir(out_dir);

    FusedSchema schema = FusedSchema::from_json(read_json_file(schema_path));
    std::vector<FusedRecord> records = read_fused_csv(fused, schema);
    if (records.empty()) throw ValidationError("fused dataset is empty");
    bool pos = false, neg = false;
    for (const auto& r : records) (r.label == 1 ? pos : neg) = true;
    if (!pos || !neg) throw ValidationError("fused dataset has a single class");

    auto [train_idx, test_idx] =
        split_indices(records.size(), config.eval.train_ratio, derive_seed(config.seed, "split"));
    std::vector<FusedRecord> train_raw;
    train_raw.reserve(train_idx.size());
    for (std::size_t i : train_idx) train_raw.push_back(records[i]);

    TrainRiskResult result;
    result.artifacts = fit_risk_pipeline(train_raw, schema, config.risk, config.seed);
    RiskArtifacts& art = result.artifacts;

    std::vector<double> gb_scores, lr_scores, ens_scores;
    std::vector<int> labels;
    for (std::size_t i : test_idx) {
        FusedRecord scaled = standardize(records[i], schema, art.stats);
        gb_scores.push_back(art.gb.predict_proba(scaled.x));
        lr_scores.push_back(art.lr.predict(scaled.x));
        ens_scores.push_back(art.ensemble.predict(scaled.x));
        labels.push_back(scaled.label);
    }
    art.gb_report = evaluate_scores(gb_scores, labels);
    art.lr_report = evaluate_scores(lr_scores, labels);
    art.ensemble_report = evaluate_scores(ens_scores, labels);

    result.gb_model = out_dir / "gb.json";
    result.lr_model = out_dir / "lr.json";
    result.ensemble_model = out_dir / "ensemble.json";
    result.report = out_dir / "report.json";
    result.importance = out_dir / "importance.json";

    write_json_file(result.gb_model, art.gb.to_json());
    write_json_file(result.lr_model, art.lr.to_json());
    save_ensemble(result.ensemble_model, art.ensemble, art.stats, schema, "gb.json", "lr.json");
    auto names = schema.column_names();
    write_json_file(result.importance, feature_importance_json(art.gb, names));

    Json report = schema_header("risk_report");
    report["train_size"] = train_idx.size();
    report["test_size"] = test_idx.size();
    Json models;
    models["xgboost"] = eval_report_to_json(art.gb_report);
    models["logistic_regression"] = eval_report_to_json(art.lr_report);
    Json ens = eval_report_to_json(art.ensemble_report);
    ens["w_gb"] = round6(art.ensemble.w_gb);
    ens["w_lr"] = round6(art.ensemble.w_lr);
    models["ensemble"] = std::move(ens);
    report["models"] = std::move(models);
    write_json_file(result.report, report);

    RunManifest manifest{"train-risk",
                         config,
                         {fused.string(), schema_path.string()},
                         {result.gb_model.string(), result.lr_model.string(),
                          result.ensemble_model.string(), result.report.string(),
                          result.importance.string()},
                         {{"train_risk", ms_since(start)}}};
    manifest.write(out_dir);
    return result;
}

EvaluateResult run_evaluate(const PipelineConfig& config, const std::filesystem::path& fused,
                            const std::filesystem::path& schema_path,
                            const std::filesystem::path& out_dir) {
    config.validate();
    auto start = Clock::now();
    ensure_dir(out_dir);

    FusedSchema schema = FusedSchema::from_json(read_json_file(schema_path));
    std::vector<FusedRecord> records = read_fused_csv(fused, schema);

    RiskSettings settings = config.risk;
    std::uint64_t seed = config.seed;
    PipelineFactory factory = [&schema, settings, seed](const std::vector<FusedRecord>& train) {
        RiskArtifacts art = fit_risk_pipeline(train, schema, settings, seed);
        ScalingStats stats = art.stats;
        EnsembleModel model = std::move(art.ensemble);
        FusedSchema sch = schema;
        return RiskScorer([stats = std::move(stats), model = std::move(model),
                           sch = std::move(sch)](const FusedRecord& rec) {
            return model.predict(standardize(rec, sch, stats).x);
        });
    };

    EvaluateResult result;
    result.cv = cross_validate(factory, records, config.eval.k, derive_seed(seed, "cv"));
    result.report = out_dir / "cv_report.json";
    write_json_file(result.report, cv_report_to_json(result.cv));

    RunManifest manifest{"evaluate",
                         config,
                         {fused.string(), schema_path.string()},
                         {result.report.string()},
                         {{"evaluate", ms_since(start)}}};
    manifest.write(out_dir);
    return result;
}

void save_ensemble(const std::filesystem::path& path, const EnsembleModel& ensemble,
                   const ScalingStats& stats, const FusedSchema& schema,
                   const std::string& gb_file, const std::string& lr_file) {
    Json j = schema_header("ensemble");
    j["w_gb"] = ensemble.w_gb;
    j["w_lr"] = ensemble.w_lr;
    j["gb_file"] = gb_file;
    j["lr_file"] = lr_file;
    j["scaling"] = stats.to_json();
    j["fused_schema"] = schema.to_json();
    write_json_file(path, j);
}

LoadedEnsemble load_ensemble(const std::filesystem::path& path) {
    Json j = read_json_file(path);
    check_schema(j, "ensemble");
    LoadedEnsemble out;
    out.model.w_gb = j.at("w_gb").get<double>();
    out.model.w_lr = j.at("w_lr").get<double>();
    out.stats = ScalingStats::from_json(j.at("scaling"));
    out.schema = FusedSchema::from_json(j.at("fused_schema"));
    auto dir = path.parent_path();
    out.model.gb = GbModel::from_json(read_json_file(dir / j.at("gb_file").get<std::string>()));
    out.model.lr = LrModel::from_json(read_json_file(dir / j.at("lr_file").get<std::string>()));
    return out;
}

PredictResult run_predict(const std::filesystem::path& ensemble_model,
                          const std::filesystem::path& fused,
                          const std::filesystem::path& out_dir) {
    auto start = Clock::now();
    ensure_dir(out_dir);

    LoadedEnsemble loaded = load_ensemble(ensemble_model);
    std::vector<FusedRecord> records = read_fused_csv(fused, loaded.schema);

    Json j = schema_header("predictions");
    Json rows = Json::array();
    for (const auto& rec : records) {
        FusedRecord scaled = standardize(rec, loaded.schema, loaded.stats);
        Json row;
        row["patient_id"] = rec.patient_id;
        row["ensemble"] = round6(loaded.model.predict(scaled.x));
        row["xgboost"] = round6(loaded.model.gb.predict_proba(scaled.x));
        row["logistic_regression"] = round6(loaded.model.lr.predict(scaled.x));
        rows.push_back(std::move(row));
    }
    j["predictions"] = std::move(rows);

    PredictResult result;
    result.predictions = out_dir / "predictions.json";
    write_json_file(result.predictions, j);

    Json manifest = schema_header("manifest");
    manifest["version"] = kVersion;
    manifest["command"] = "predict";
    manifest["inputs"] = Json::array({ensemble_model.string(), fused.string()});
    manifest["outputs"] = Json::array({result.predictions.string()});
    Json t;
    t["predict"] = round6(ms_since(start));
    manifest["timings_ms"] = std::move(t);
    write_json_file(out_dir / "manifest.json", manifest);
    return result;
}

} // namespace diabrisk
