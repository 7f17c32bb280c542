#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "diabrisk/common.hpp"
#include "diabrisk/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace diabrisk;

struct CommonOpts {
    std::optional<std::string> config_path;
    std::optional<std::string> profile;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--profile", opts.profile, "desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--seed", opts.seed, "global seed (overrides config)");
    cmd->add_option("--out", opts.out, "output directory")->required();
}

PipelineConfig resolve_config(const CommonOpts& opts) {
    fs::path cfg;
    const fs::path* cfg_ptr = nullptr;
    if (opts.config_path) {
        cfg = *opts.config_path;
        cfg_ptr = &cfg;
    }
    return load_config(cfg_ptr, opts.profile ? &*opts.profile : nullptr,
                       opts.seed ? &*opts.seed : nullptr);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diabetes risk pipeline: clinical entity tagging, feature fusion and"
                 " ensemble risk prediction"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    auto* gen = app.add_subcommand("generate", "Write a seeded synthetic corpus");
    add_common(gen, gen_opts);

    CommonOpts tt_opts;
    std::string tt_conll, tt_records;
    auto* tt = app.add_subcommand("train-tagger", "Train the sequence tagger");
    add_common(tt, tt_opts);
    tt->add_option("--conll", tt_conll, "annotated sentences (CoNLL)")->required();
    tt->add_option("--records", tt_records, "structured records CSV")->required();

    CommonOpts ex_opts;
    std::string ex_model, ex_conll, ex_records;
    auto* ex = app.add_subcommand("extract", "Fuse text and structured features");
    add_common(ex, ex_opts);
    ex->add_option("--tagger", ex_model, "trained tagger model")->required();
    ex->add_option("--conll", ex_conll, "sentences (CoNLL)")->required();
    ex->add_option("--records", ex_records, "structured records CSV")->required();

    CommonOpts tr_opts;
    std::string tr_fused, tr_schema;
    auto* tr = app.add_subcommand("train-risk", "Fit the risk models and the ensemble");
    add_common(tr, tr_opts);
    tr->add_option("--fused", tr_fused, "fused dataset CSV")->required();
    tr->add_option("--schema", tr_schema, "fused schema JSON")->required();

    CommonOpts ev_opts;
    std::string ev_fused, ev_schema;
    auto* ev = app.add_subcommand("evaluate", "Cross-validated risk evaluation");
    add_common(ev, ev_opts);
    ev->add_option("--fused", ev_fused, "fused dataset CSV")->required();
    ev->add_option("--schema", ev_schema, "fused schema JSON")->required();

    std::string pr_ensemble, pr_fused, pr_out;
    auto* pr = app.add_subcommand("predict", "Per-patient risk probabilities");
    pr->add_option("--ensemble", pr_ensemble, "ensemble model JSON")->required();
    pr->add_option("--fused", pr_fused, "fused dataset CSV")->required();
    pr->add_option("--out", pr_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            run_generate(resolve_config(gen_opts), gen_opts.out);
        } else if (tt->parsed()) {
            auto result = run_train_tagger(resolve_config(tt_opts), tt_conll, tt_records,
                                           tt_opts.out);
            std::cout << "tagger model: " << result.model.string() << '\n';
        } else if (ex->parsed()) {
            auto result = run_extract(resolve_config(ex_opts), ex_model, ex_conll, ex_records,
                                      ex_opts.out);
            std::cout << "fused dataset: " << result.fused.string() << '\n';
        } else if (tr->parsed()) {
            auto result = run_train_risk(resolve_config(tr_opts), tr_fused, tr_schema,
                                         tr_opts.out);
            std::cout << "report: " << result.report.string() << '\n';
        } else if (ev->parsed()) {
            auto result = run_evaluate(resolve_config(ev_opts), ev_fused, ev_schema, ev_opts.out);
            std::cout << "cv report: " << result.report.string() << '\n';
        } else if (pr->parsed()) {
            auto result = run_predict(pr_ensemble, pr_fused, pr_out);
            std::cout << "predictions: " << result.predictions.string() << '\n';
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
