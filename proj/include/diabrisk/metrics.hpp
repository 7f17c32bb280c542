#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "diabrisk/features.hpp"
#include "diabrisk/jsonio.hpp"

namespace diabrisk {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

// Undefined ratios (zero denominators) come back as NaN, never 0.
struct MetricSet {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double specificity = 0;
    double kappa = 0;
};

MetricSet metrics(const ConfusionMatrix& cm);

// Probability a random positive scores above a random negative, ties at
// half credit. Rank-based; both classes must be present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct PrfCounts {
    std::uint64_t gold = 0;
    std::uint64_t predicted = 0;
    std::uint64_t correct = 0; // exact (start, end, kind) matches

    double precision() const;
    double recall() const;
    double f1() const;
};

struct EntityScore {
    PrfCounts micro;
    std::map<std::string, PrfCounts> per_kind;
};

// Exact-match span scoring over parallel sentence lists. Both-empty
// convention: P = R = F1 = 1.
EntityScore entity_prf(std::span<const std::vector<EntitySpan>> gold,
                       std::span<const std::vector<EntitySpan>> predicted);

struct EvalReport {
    ConfusionMatrix cm;
    MetricSet m;
    double auc_value = 0;
};

// Scores thresholded at 0.5 for the confusion matrix.
EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels);

Json eval_report_to_json(const EvalReport& report);

// Fits on a fold's training rows (standardization, balancing and model
// fitting all happen inside) and returns a probability scorer.
using RiskScorer = std::function<double(const FusedRecord&)>;
using PipelineFactory = std::function<RiskScorer(const std::vector<FusedRecord>&)>;

struct CvReport {
    std::vector<EvalReport> folds;
    MetricSet mean;        // unweighted over folds; NaN folds propagate
    double mean_auc = 0;
    ConfusionMatrix pooled;
    MetricSet pooled_metrics;
    double pooled_auc = 0;
};

CvReport cross_validate(const PipelineFactory& factory, const std::vector<FusedRecord>& records,
                        std::size_t k, std::uint64_t seed);

Json cv_report_to_json(const CvReport& report);

} // namespace diabrisk
