#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diabrisk/features.hpp"
#include "diabrisk/jsonio.hpp"

namespace diabrisk {

enum class GbLoss { logistic, squared };

GbLoss parse_gb_loss(const std::string& name);
std::string gb_loss_name(GbLoss loss);

struct GbConfig {
    double eta = 0.1;
    std::size_t max_depth = 5;
    double min_child_weight = 1.0; // minimum hessian sum per child
    double subsample = 1.0;        // row fraction per round
    double colsample = 1.0;        // column fraction per round
    double lambda = 1.0;           // L2 leaf penalty
    double gamma = 0.0;            // per-split penalty
    std::size_t num_rounds = 50;
    double base_score = 0.0;       // initial raw margin
    GbLoss loss = GbLoss::logistic;
    std::uint64_t seed = 0;

    void validate() const;
};

// (gradient, hessian) of the loss at the current raw margin.
std::pair<double, double> grad_hess(GbLoss loss, double y, double margin);

// Optimal leaf value -G/(H + lambda) under the second-order expansion.
double leaf_weight(double grad_sum, double hess_sum, double lambda);

// Objective reduction of a candidate partition, minus the split penalty.
double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma);

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    double weight = 0.0; // leaf value
    int left = -1;
    int right = -1;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // root at 0; x[feature] < threshold goes left

    double predict(std::span<const double> x) const;
    Json to_json() const;
    static Tree from_json(const Json& j);
};

// Exact greedy construction: scans midpoints between consecutive distinct
// sorted values of every active column, ties broken by lowest feature
// index then lowest threshold.
Tree build_tree(std::span<const std::vector<double>> rows, std::span<const std::size_t> row_idx,
                std::span<const double> grad, std::span<const double> hess,
                std::span<const std::size_t> active_cols, const GbConfig& config);

struct GbModel {
    GbConfig config;
    std::size_t n_features = 0;
    std::vector<Tree> trees;
    std::vector<double> feature_gain; // total chosen-split gain per feature
    std::vector<double> train_loss;   // mean training loss after each round

    double margin(std::span<const double> x) const; // base + sum of eta * tree(x)
    double predict_proba(std::span<const double> x) const;

    Json to_json() const;
    static GbModel from_json(const Json& j);
};

GbModel fit_gbdt(std::span<const std::vector<double>> rows, std::span<const double> labels,
                 const GbConfig& config);
GbModel fit_gbdt(std::span<const FusedRecord> records, const GbConfig& config);

Json feature_importance_json(const GbModel& model, std::span<const std::string> column_names);

} // namespace diabrisk
