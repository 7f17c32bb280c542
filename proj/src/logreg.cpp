#include "diabrisk/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "diabrisk/common.hpp"
#include "diabrisk/metrics.hpp"
#include "diabrisk/rng.hpp"

namespace diabrisk {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double LrModel::predict(std::span<const double> x) const {
    if (x.size() != w.size()) {
        throw ValidationError("logreg: input has " + std::to_string(x.size()) +
                              " features, model expects " + std::to_string(w.size()));
    }
    double z = b;
    for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * x[i];
    return sigmoid(z);
}

std::pair<double, std::vector<double>> lr_loss_grad(std::span<const double> w, double b,
                                                    std::span<const std::vector<double>> rows,
                                                    std::span<const double> labels, double c_reg) {
    if (rows.empty()) throw ValidationError("lr_loss_grad: empty dataset");
    if (rows.size() != labels.size()) throw ValidationError("lr_loss_grad: rows/labels mismatch");
    if (!(c_reg > 0.0)) throw ValidationError("lr_loss_grad: C must be positive");

    const std::size_t n = rows.size();
    const std::size_t d = w.size();
    double loss = 0.0;
    std::vector<double> grad(d + 1, 0.0); // [dw..., db]

    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = rows[i];
        if (x.size() != d) throw ValidationError("lr_loss_grad: row dimension mismatch");
        double m = b;
        for (std::size_t j = 0; j < d; ++j) m += w[j] * x[j];
        // nll = log(1 + exp(-m)) for y=1, log(1 + exp(m)) for y=0
        double z = labels[i] > 0.5 ? m : -m;
        loss += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
        double resid = sigmoid(m) - labels[i];
        for (std::size_t j = 0; j < d; ++j) grad[j] += resid * x[j];
        grad[d] += resid;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    for (double& g : grad) g *= inv_n;
    for (std::size_t j = 0; j < d; ++j) {
        loss += w[j] * w[j] / (2.0 * c_reg);
        grad[j] += w[j] / c_reg; // intercept unpenalized
    }
    return {loss, std::move(grad)};
}

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

LrModel fit_logreg(std::span<const std::vector<double>> rows, std::span<const double> labels,
                   double c_reg, double tolerance, std::size_t max_iter, std::uint64_t seed) {
    if (rows.empty()) throw ValidationError("fit_logreg: empty dataset");
    bool pos = false, neg = false;
    for (double y : labels) (y > 0.5 ? pos : neg) = true;
    if (!pos || !neg) throw ValidationError("fit_logreg: both classes must be present");

    const std::size_t d = rows.front().size();
    std::vector<double> theta(d + 1, 0.0);
    Rng rng(seed);
    for (std::size_t j = 0; j < d; ++j) theta[j] = rng.uniform(-0.01, 0.01);

    auto eval = [&](std::span<const double> t) {
        return lr_loss_grad(t.subspan(0, d), t[d], rows, labels, c_reg);
    };

    auto [f, g] = eval(theta);
    if (!std::isfinite(f)) throw std::runtime_error("fit_logreg: non-finite initial loss");

    constexpr std::size_t kHistory = 10;
    constexpr double kArmijo = 1e-4;
    std::deque<std::pair<std::vector<double>, std::vector<double>>> history; // (s, y)

    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        double gnorm = norm2(g);
        if (gnorm <= tolerance) break;

        // two-loop recursion
        std::vector<double> dir = g;
        std::vector<double> alpha(history.size());
        for (std::size_t h = history.size(); h-- > 0;) {
            const auto& [s, y] = history[h];
            double rho = 1.0 / dot(y, s);
            alpha[h] = rho * dot(s, dir);
            for (std::size_t j = 0; j < dir.size(); ++j) dir[j] -= alpha[h] * y[j];
        }
        if (!history.empty()) {
            const auto& [s, y] = history.back();
            double gamma = dot(s, y) / dot(y, y);
            for (double& v : dir) v *= gamma;
        }
        for (std::size_t h = 0; h < history.size(); ++h) {
            const auto& [s, y] = history[h];
            double rho = 1.0 / dot(y, s);
            double beta = rho * dot(y, dir);
            for (std::size_t j = 0; j < dir.size(); ++j) dir[j] += (alpha[h] - beta) * s[j];
        }
        for (double& v : dir) v = -v;

        double slope = dot(g, dir);
        if (slope >= 0.0) { // not a descent direction; reset to steepest descent
            history.clear();
            for (std::size_t j = 0; j < dir.size(); ++j) dir[j] = -g[j];
            slope = -gnorm * gnorm;
        }

        double step = history.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
        std::vector<double> theta_new(theta.size());
        double f_new = 0.0;
        std::vector<double> g_new;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t j = 0; j < theta.size(); ++j) theta_new[j] = theta[j] + step * dir[j];
            auto [ft, gt] = eval(theta_new);
            if (!std::isfinite(ft)) throw std::runtime_error("fit_logreg: non-finite loss");
            if (ft <= f + kArmijo * step * slope) {
                f_new = ft;
                g_new = std::move(gt);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> s(theta.size()), y(theta.size());
        for (std::size_t j = 0; j < theta.size(); ++j) {
            s[j] = theta_new[j] - theta[j];
            y[j] = g_new[j] - g[j];
        }
        if (dot(s, y) > 1e-12) {
            history.emplace_back(std::move(s), std::move(y));
            if (history.size() > kHistory) history.pop_front();
        }
        theta = std::move(theta_new);
        f = f_new;
        g = std::move(g_new);
    }

    LrModel model;
    model.w.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
    model.b = theta[d];
    model.c_reg = c_reg;
    model.iterations = iter;
    model.final_grad_norm = norm2(g);
    model.converged = model.final_grad_norm <= tolerance;
    return model;
}

LrModel fit_logreg(std::span<const FusedRecord> records, double c_reg, double tolerance,
                   std::size_t max_iter, std::uint64_t seed) {
    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    rows.reserve(records.size());
    for (const auto& rec : records) {
        rows.push_back(rec.x);
        labels.push_back(static_cast<double>(rec.label));
    }
    return fit_logreg(rows, labels, c_reg, tolerance, max_iter, seed);
}

Json LrModel::to_json() const {
    Json j = schema_header("logreg");
    j["w"] = w;
    j["b"] = b;
    j["C"] = c_reg;
    Json diag;
    diag["iterations"] = iterations;
    diag["final_grad_norm"] = final_grad_norm;
    diag["converged"] = converged;
    j["diagnostics"] = std::move(diag);
    return j;
}

LrModel LrModel::from_json(const Json& j) {
    check_schema(j, "logreg");
    LrModel model;
    model.w = j.at("w").get<std::vector<double>>();
    model.b = j.at("b").get<double>();
    model.c_reg = j.at("C").get<double>();
    const Json& diag = j.at("diagnostics");
    model.iterations = diag.at("iterations").get<std::size_t>();
    model.final_grad_norm = diag.at("final_grad_norm").get<double>();
    model.converged = diag.at("converged").get<bool>();
    return model;
}

double EnsembleModel::predict(std::span<const double> x) const {
    if (w_gb < 0.0 || w_lr < 0.0 || std::abs(w_gb + w_lr - 1.0) > 1e-12) {
        throw ValidationError("ensemble weights must be non-negative and sum to 1");
    }
    return w_gb * gb.predict_proba(x) + w_lr * lr.predict(x);
}

std::vector<double> ensemble_weight_grid(double step) {
    if (!(step > 0.0) || step > 1.0) throw ValidationError("ensemble step must be in (0,1]");
    std::vector<double> grid;
    for (std::size_t i = 0;; ++i) {
        double w = static_cast<double>(i) * step;
        if (w >= 1.0 - 1e-12) break;
        grid.push_back(w);
    }
    grid.push_back(1.0);
    return grid;
}

EnsembleModel tune_ensemble(GbModel gb, LrModel lr, std::span<const FusedRecord> validation,
                            double step) {
    if (validation.empty()) throw ValidationError("tune_ensemble: empty validation set");
    std::vector<double> p_gb, p_lr;
    std::vector<int> labels;
    for (const auto& rec : validation) {
        p_gb.push_back(gb.predict_proba(rec.x));
        p_lr.push_back(lr.predict(rec.x));
        labels.push_back(rec.label);
    }

    double best_w = 0.0, best_auc = -1.0;
    std::vector<double> blended(validation.size());
    for (double w : ensemble_weight_grid(step)) {
        for (std::size_t i = 0; i < blended.size(); ++i) {
            blended[i] = w * p_gb[i] + (1.0 - w) * p_lr[i];
        }
        double a = auc(blended, labels);
        if (a >= best_auc) best_auc = a, best_w = w; // >= : ties go to the larger gb weight
    }

    EnsembleModel ens;
    ens.w_gb = best_w;
    ens.w_lr = 1.0 - best_w;
    ens.gb = std::move(gb);
    ens.lr = std::move(lr);
    return ens;
}

} // namespace diabrisk
