#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "diabrisk/features.hpp"
#include "diabrisk/gbdt.hpp"
#include "diabrisk/jsonio.hpp"

namespace diabrisk {

double sigmoid(double z);

struct LrModel {
    std::vector<double> w;
    double b = 0.0;
    double c_reg = 1.0; // inverse regularization strength
    std::size_t iterations = 0;
    double final_grad_norm = 0.0;
    bool converged = false;

    double predict(std::span<const double> x) const; // sigmoid(w.x + b)

    Json to_json() const;
    static LrModel from_json(const Json& j);
};

// Mean negative log-likelihood plus (1/(2C))*||w||^2; intercept unpenalized.
// Gradient is packed [dw..., db].
std::pair<double, std::vector<double>> lr_loss_grad(std::span<const double> w, double b,
                                                    std::span<const std::vector<double>> rows,
                                                    std::span<const double> labels, double c_reg);

// L-BFGS with backtracking line search; exits when the gradient 2-norm
// drops to `tolerance` or at max_iter. The seed only jitters the start
// point; the objective is convex so the optimum does not depend on it.
LrModel fit_logreg(std::span<const std::vector<double>> rows, std::span<const double> labels,
                   double c_reg, double tolerance = 1e-6, std::size_t max_iter = 500,
                   std::uint64_t seed = 0);
LrModel fit_logreg(std::span<const FusedRecord> records, double c_reg, double tolerance = 1e-6,
                   std::size_t max_iter = 500, std::uint64_t seed = 0);

struct EnsembleModel {
    double w_gb = 0.5;
    double w_lr = 0.5;
    GbModel gb;
    LrModel lr;

    // Weighted probability average; throws if the weights are not a
    // normalized non-negative pair.
    double predict(std::span<const double> x) const;
};

// Candidate gb weights {0, step, 2*step, ..., 1}.
std::vector<double> ensemble_weight_grid(double step);

// Grid scan maximizing validation AUC; ties go to the larger gb weight.
EnsembleModel tune_ensemble(GbModel gb, LrModel lr, std::span<const FusedRecord> validation,
                            double step);

} // namespace diabrisk
