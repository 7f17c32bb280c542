#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "diabrisk/corpus.hpp"
#include "diabrisk/features.hpp"
#include "diabrisk/gbdt.hpp"
#include "diabrisk/jsonio.hpp"
#include "diabrisk/logreg.hpp"
#include "diabrisk/metrics.hpp"
#include "diabrisk/tagger.hpp"

namespace diabrisk {

inline constexpr const char* kVersion = "diabrisk 0.1.0";

struct TaggerSettings {
    TrainConfig train;
    std::size_t vocab_size = 500;
    double val_fraction = 0.1; // of the training split, for early stopping
};

struct RiskSettings {
    GbConfig gb;
    double lr_c = 0.1;
    double lr_tolerance = 1e-6;
    std::size_t lr_max_iter = 500;
    std::size_t smote_k = 5;
    double ensemble_step = 0.05;
    double val_fraction = 0.2; // of the training split, for ensemble tuning
};

struct EvalSettings {
    double train_ratio = 0.8;
    std::size_t k = 5;
};

struct PipelineConfig {
    SynthConfig synth;
    TaggerSettings tagger;
    RiskSettings risk;
    EvalSettings eval;
    std::uint64_t seed = 42;
    std::string profile = "desk"; // desk | paper

    static PipelineConfig desk();
    static PipelineConfig paper();

    void validate() const;
    Json to_json() const;
};

// Profile defaults, then overrides from the config file, then the CLI
// seed/profile flags.
PipelineConfig load_config(const std::filesystem::path* config_path, const std::string* profile,
                           const std::uint64_t* seed);
PipelineConfig config_from_json(const Json& j, PipelineConfig base);

std::string config_hash(const PipelineConfig& config);

// Stage timings vary run to run, so the manifest is the one output file
// excluded from byte-identity checks.
struct RunManifest {
    std::string command;
    PipelineConfig config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, double> timings_ms;

    void write(const std::filesystem::path& out_dir) const;
};

struct GenerateResult {
    std::filesystem::path conll;
    std::filesystem::path records;
};
GenerateResult run_generate(const PipelineConfig& config, const std::filesystem::path& out_dir);

struct TrainTaggerResult {
    std::filesystem::path model;
    std::filesystem::path log;
    double test_token_accuracy = 0.0;
    double test_entity_f1 = 0.0;
};
TrainTaggerResult run_train_tagger(const PipelineConfig& config,
                                   const std::filesystem::path& conll,
                                   const std::filesystem::path& records,
                                   const std::filesystem::path& out_dir);

struct ExtractResult {
    std::filesystem::path fused;
    std::filesystem::path schema;
};
ExtractResult run_extract(const PipelineConfig& config, const std::filesystem::path& tagger_model,
                          const std::filesystem::path& conll, const std::filesystem::path& records,
                          const std::filesystem::path& out_dir);

// Everything fitted by the risk stage; exposed so tests can check that
// training statistics never observe held-out rows.
struct RiskArtifacts {
    ScalingStats stats;
    GbModel gb;
    LrModel lr;
    EnsembleModel ensemble;
    EvalReport gb_report;
    EvalReport lr_report;
    EvalReport ensemble_report;
};

struct TrainRiskResult {
    std::filesystem::path gb_model;
    std::filesystem::path lr_model;
    std::filesystem::path ensemble_model;
    std::filesystem::path report;
    std::filesystem::path importance;
    RiskArtifacts artifacts;
};
TrainRiskResult run_train_risk(const PipelineConfig& config, const std::filesystem::path& fused,
                               const std::filesystem::path& schema,
                               const std::filesystem::path& out_dir);

// The fold pipeline behind cmd evaluate: standardize, SMOTE, fit both
// models, tune the ensemble, all from the given training rows only.
RiskArtifacts fit_risk_pipeline(const std::vector<FusedRecord>& train_raw, const FusedSchema& schema,
                                const RiskSettings& settings, std::uint64_t seed);

struct EvaluateResult {
    std::filesystem::path report;
    CvReport cv;
};
EvaluateResult run_evaluate(const PipelineConfig& config, const std::filesystem::path& fused,
                            const std::filesystem::path& schema,
                            const std::filesystem::path& out_dir);

struct PredictResult {
    std::filesystem::path predictions;
};
PredictResult run_predict(const std::filesystem::path& ensemble_model,
                          const std::filesystem::path& fused, const std::filesystem::path& out_dir);

// Ensemble persistence bundles the preprocessing (schema + scaling stats)
// with the component model file names.
void save_ensemble(const std::filesystem::path& path, const EnsembleModel& ensemble,
                   const ScalingStats& stats, const FusedSchema& schema,
                   const std::string& gb_file, const std::string& lr_file);

struct LoadedEnsemble {
    EnsembleModel model;
    ScalingStats stats;
    FusedSchema schema;
};
LoadedEnsemble load_ensemble(const std::filesystem::path& path);

} // namespace diabrisk
