#include "diabrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diabrisk/common.hpp"
#include "diabrisk/corpus.hpp"

namespace diabrisk {

namespace {

constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, double den) { return den > 0.0 ? num / den : kUndefined; }

} // namespace

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw ValidationError("confusion: length mismatch (" + std::to_string(y_true.size()) +
                              " vs " + std::to_string(y_pred.size()) + ")");
    }
    if (y_true.empty()) throw ValidationError("confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        int t = y_true[i], p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
            throw ValidationError("confusion: non-binary value at index " + std::to_string(i));
        }
        if (t == 1 && p == 1) ++cm.tp;
        else if (t == 1 && p == 0) ++cm.fn;
        else if (t == 0 && p == 1) ++cm.fp;
        else ++cm.tn;
    }
    return cm;
}

MetricSet metrics(const ConfusionMatrix& cm) {
    const double tp = static_cast<double>(cm.tp);
    const double tn = static_cast<double>(cm.tn);
    const double fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn);
    const double n = tp + tn + fp + fn;
    if (n == 0) throw ValidationError("metrics: empty confusion matrix");

    MetricSet m;
    m.accuracy = (tp + tn) / n;
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    if (std::isnan(m.precision) || std::isnan(m.recall)) {
        m.f1 = kUndefined;
    } else {
        m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    }
    // chance agreement from the 2x2 marginals
    const double p_o = m.accuracy;
    const double p_e = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
    m.kappa = (1.0 - p_e) != 0.0 ? (p_o - p_e) / (1.0 - p_e) : kUndefined;
    return m;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ValidationError("auc: length mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) {
        if (y == 1) ++n_pos;
        else if (y == 0) ++n_neg;
        else throw ValidationError("auc: labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0) throw ValidationError("auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks for tie groups, 1-based
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) rank_sum_pos += midrank;
        }
        i = j;
    }
    const double p = static_cast<double>(n_pos);
    const double u = rank_sum_pos - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(n_neg));
}

double PrfCounts::precision() const {
    return predicted == 0 ? (gold == 0 ? 1.0 : kUndefined)
                          : static_cast<double>(correct) / static_cast<double>(predicted);
}

double PrfCounts::recall() const {
    return gold == 0 ? (predicted == 0 ? 1.0 : kUndefined)
                     : static_cast<double>(correct) / static_cast<double>(gold);
}

double PrfCounts::f1() const {
    double p = precision(), r = recall();
    if (std::isnan(p) || std::isnan(r)) return kUndefined;
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

EntityScore entity_prf(std::span<const std::vector<EntitySpan>> gold,
                       std::span<const std::vector<EntitySpan>> predicted) {
    if (gold.size() != predicted.size()) {
        throw ValidationError("entity_prf: sentence count mismatch");
    }
    EntityScore score;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        for (const auto& g : gold[s]) {
            ++score.micro.gold;
            ++score.per_kind[g.kind].gold;
        }
        for (const auto& p : predicted[s]) {
            ++score.micro.predicted;
            ++score.per_kind[p.kind].predicted;
            bool hit = std::find(gold[s].begin(), gold[s].end(), p) != gold[s].end();
            if (hit) {
                ++score.micro.correct;
                ++score.per_kind[p.kind].correct;
            }
        }
    }
    return score;
}

EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels) {
    std::vector<int> pred(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= 0.5 ? 1 : 0;
    EvalReport report;
    report.cm = confusion(labels, pred);
    report.m = metrics(report.cm);
    report.auc_value = auc(scores, labels);
    return report;
}

namespace {

Json metric_value(double v) {
    if (std::isnan(v)) return nullptr; // undefined marker
    return round6(v);
}

Json confusion_json(const ConfusionMatrix& cm) {
    Json j;
    j["tp"] = cm.tp;
    j["fn"] = cm.fn;
    j["fp"] = cm.fp;
    j["tn"] = cm.tn;
    return j;
}

Json metric_set_json(const MetricSet& m, double auc_value) {
    Json j;
    j["accuracy"] = metric_value(m.accuracy);
    j["precision"] = metric_value(m.precision);
    j["recall"] = metric_value(m.recall);
    j["f1"] = metric_value(m.f1);
    j["specificity"] = metric_value(m.specificity);
    j["kappa"] = metric_value(m.kappa);
    j["auc"] = metric_value(auc_value);
    return j;
}

} // namespace

Json eval_report_to_json(const EvalReport& report) {
    Json j;
    j["confusion"] = confusion_json(report.cm);
    j["metrics"] = metric_set_json(report.m, report.auc_value);
    return j;
}

CvReport cross_validate(const PipelineFactory& factory, const std::vector<FusedRecord>& records,
                        std::size_t k, std::uint64_t seed) {
    auto folds = kfold_indices(records.size(), k, seed);
    CvReport cv;
    std::vector<double> pooled_scores;
    std::vector<int> pooled_labels;

    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& [train_idx, test_idx] = folds[f];
        std::vector<FusedRecord> train;
        train.reserve(train_idx.size());
        bool pos = false, neg = false;
        for (std::size_t i : train_idx) {
            train.push_back(records[i]);
            (records[i].label == 1 ? pos : neg) = true;
        }
        if (!pos || !neg) {
            throw ValidationError("fold " + std::to_string(f + 1) +
                                  ": training split has a single class");
        }
        RiskScorer scorer = factory(train);

        std::vector<double> scores;
        std::vector<int> labels;
        for (std::size_t i : test_idx) {
            scores.push_back(scorer(records[i]));
            labels.push_back(records[i].label);
        }
        cv.folds.push_back(evaluate_scores(scores, labels));
        pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
        pooled_labels.insert(pooled_labels.end(), labels.begin(), labels.end());
    }

    const double kf = static_cast<double>(cv.folds.size());
    auto mean_of = [&](auto getter) {
        double sum = 0.0;
        for (const auto& fold : cv.folds) sum += getter(fold);
        return sum / kf;
    };
    cv.mean.accuracy = mean_of([](const EvalReport& r) { return r.m.accuracy; });
    cv.mean.precision = mean_of([](const EvalReport& r) { return r.m.precision; });
    cv.mean.recall = mean_of([](const EvalReport& r) { return r.m.recall; });
    cv.mean.f1 = mean_of([](const EvalReport& r) { return r.m.f1; });
    cv.mean.specificity = mean_of([](const EvalReport& r) { return r.m.specificity; });
    cv.mean.kappa = mean_of([](const EvalReport& r) { return r.m.kappa; });
    cv.mean_auc = mean_of([](const EvalReport& r) { return r.auc_value; });

    for (const auto& fold : cv.folds) {
        cv.pooled.tp += fold.cm.tp;
        cv.pooled.tn += fold.cm.tn;
        cv.pooled.fp += fold.cm.fp;
        cv.pooled.fn += fold.cm.fn;
    }
    cv.pooled_metrics = metrics(cv.pooled);
    cv.pooled_auc = auc(pooled_scores, pooled_labels);
    return cv;
}

Json cv_report_to_json(const CvReport& report) {
    Json j = schema_header("cv_report");
    j["k"] = report.folds.size();
    Json folds = Json::array();
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
        Json fold = eval_report_to_json(report.folds[f]);
        Json entry;
        entry["fold"] = f + 1;
        entry["confusion"] = fold["confusion"];
        entry["metrics"] = fold["metrics"];
        folds.push_back(std::move(entry));
    }
    j["folds"] = std::move(folds);
    j["mean"] = metric_set_json(report.mean, report.mean_auc);
    j["pooled_confusion"] = confusion_json(report.pooled);
    j["pooled"] = metric_set_json(report.pooled_metrics, report.pooled_auc);
    return j;
}

} // namespace diabrisk
