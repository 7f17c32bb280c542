#include "diabrisk/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diabrisk/common.hpp"
#include "diabrisk/logreg.hpp"
#include "diabrisk/rng.hpp"

namespace diabrisk {

GbLoss parse_gb_loss(const std::string& name) {
    if (name == "logistic") return GbLoss::logistic;
    if (name == "squared") return GbLoss::squared;
    throw ValidationError("unknown loss kind '" + name + "'");
}

std::string gb_loss_name(GbLoss loss) {
    return loss == GbLoss::logistic ? "logistic" : "squared";
}

void GbConfig::validate() const {
    if (!(eta > 0.0) || eta > 1.0) throw ValidationError("eta must be in (0,1]");
    if (!(subsample > 0.0) || subsample > 1.0) throw ValidationError("subsample must be in (0,1]");
    if (!(colsample > 0.0) || colsample > 1.0) throw ValidationError("colsample must be in (0,1]");
    if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
    if (gamma < 0.0) throw ValidationError("gamma must be non-negative");
    if (num_rounds == 0) throw ValidationError("num_rounds must be positive");
    if (min_child_weight < 0.0) throw ValidationError("min_child_weight must be non-negative");
}

std::pair<double, double> grad_hess(GbLoss loss, double y, double margin) {
    switch (loss) {
    case GbLoss::logistic: {
        double p = sigmoid(margin);
        return {p - y, p * (1.0 - p)};
    }
    case GbLoss::squared:
        return {margin - y, 1.0};
    }
    throw ValidationError("unknown loss kind");
}

double leaf_weight(double grad_sum, double hess_sum, double lambda) {
    double den = hess_sum + lambda;
    if (!(den > 0.0)) throw ValidationError("leaf_weight: hessian sum plus lambda must be positive");
    return -grad_sum / den;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
    double parent = (gl + gr) * (gl + gr) / (hl + hr + lambda);
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent) - gamma;
}

double Tree::predict(std::span<const double> x) const {
    int node = 0;
    while (!nodes[node].is_leaf()) {
        const TreeNode& n = nodes[node];
        node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[node].weight;
}

namespace {

struct BestSplit {
    bool found = false;
    double gain = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
};

struct TreeBuilder {
    std::span<const std::vector<double>> rows;
    std::span<const double> grad;
    std::span<const double> hess;
    std::span<const std::size_t> active_cols;
    const GbConfig& config;
    Tree tree;
    std::vector<std::pair<std::size_t, double>> chosen; // (feature, gain) per split

    int build(std::vector<std::size_t>& idx, std::size_t depth) {
        double g_sum = 0.0, h_sum = 0.0;
        for (std::size_t i : idx) {
            g_sum += grad[i];
            h_sum += hess[i];
        }

        BestSplit best;
        if (depth < config.max_depth && idx.size() >= 2) best = find_split(idx, g_sum, h_sum);

        if (!best.found || best.gain <= 0.0) {
            TreeNode leaf;
            leaf.weight = leaf_weight(g_sum, h_sum, config.lambda);
            tree.nodes.push_back(leaf);
            return static_cast<int>(tree.nodes.size() - 1);
        }

        std::vector<std::size_t> left, right;
        for (std::size_t i : idx) {
            (rows[i][best.feature] < best.threshold ? left : right).push_back(i);
        }
        chosen.emplace_back(best.feature, best.gain);

        TreeNode node;
        node.feature = static_cast<int>(best.feature);
        node.threshold = best.threshold;
        tree.nodes.push_back(node);
        int self = static_cast<int>(tree.nodes.size() - 1);
        idx.clear();
        idx.shrink_to_fit();
        int l = build(left, depth + 1);
        int r = build(right, depth + 1);
        tree.nodes[self].left = l;
        tree.nodes[self].right = r;
        return self;
    }

    BestSplit find_split(const std::vector<std::size_t>& idx, double g_sum, double h_sum) {
        BestSplit best;
        std::vector<std::pair<double, std::size_t>> sorted;
        sorted.reserve(idx.size());
        for (std::size_t col : active_cols) {
            sorted.clear();
            for (std::size_t i : idx) sorted.emplace_back(rows[i][col], i);
            // total order (value, then row) keeps accumulation order fixed
            std::sort(sorted.begin(), sorted.end());

            double gl = 0.0, hl = 0.0;
            for (std::size_t p = 0; p + 1 < sorted.size(); ++p) {
                gl += grad[sorted[p].second];
                hl += hess[sorted[p].second];
                if (sorted[p].first == sorted[p + 1].first) continue; // no boundary here
                double gr = g_sum - gl, hr = h_sum - hl;
                if (hl < config.min_child_weight || hr < config.min_child_weight) continue;
                double gain = split_gain(gl, hl, gr, hr, config.lambda, config.gamma);
                // strict > keeps lowest feature index then lowest threshold on ties
                if (!best.found || gain > best.gain) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = col;
                    best.threshold = 0.5 * (sorted[p].first + sorted[p + 1].first);
                }
            }
        }
        return best;
    }
};

Json node_to_json(const Tree& tree, int id) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
    Json j;
    if (n.is_leaf()) {
        j["leaf"] = n.weight;
        return j;
    }
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_to_json(tree, n.left);
    j["right"] = node_to_json(tree, n.right);
    return j;
}

int node_from_json(const Json& j, Tree& tree) {
    TreeNode n;
    if (j.contains("leaf")) {
        n.weight = j.at("leaf").get<double>();
        tree.nodes.push_back(n);
        return static_cast<int>(tree.nodes.size() - 1);
    }
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
    tree.nodes.push_back(n);
    int self = static_cast<int>(tree.nodes.size() - 1);
    int l = node_from_json(j.at("left"), tree);
    int r = node_from_json(j.at("right"), tree);
    tree.nodes[self].left = l;
    tree.nodes[self].right = r;
    return self;
}

// round(fraction * n) distinct indices, at least one, ascending
std::vector<std::size_t> sample_indices(std::size_t n, double fraction, Rng& rng) {
    std::size_t want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    want = std::max<std::size_t>(1, std::min(want, n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (want < n) {
        // partial Fisher-Yates from the back, matching Rng::shuffle's order
        for (std::size_t i = n; i > n - want; --i) {
            std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(idx[i - 1], idx[j]);
        }
        std::vector<std::size_t> out(idx.end() - static_cast<std::ptrdiff_t>(want), idx.end());
        std::sort(out.begin(), out.end());
        return out;
    }
    return idx;
}

double mean_loss(GbLoss loss, std::span<const double> labels, std::span<const double> margins) {
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (loss == GbLoss::logistic) {
            // log(1 + exp(-z*m)) in the stable branch form
            double m = margins[i];
            double z = labels[i] > 0.5 ? m : -m;
            total += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
        } else {
            double d = margins[i] - labels[i];
            total += 0.5 * d * d;
        }
    }
    return total / static_cast<double>(labels.size());
}

} // namespace

Tree build_tree(std::span<const std::vector<double>> rows, std::span<const std::size_t> row_idx,
                std::span<const double> grad, std::span<const double> hess,
                std::span<const std::size_t> active_cols, const GbConfig& config) {
    if (row_idx.empty()) throw ValidationError("build_tree: no rows");
    TreeBuilder builder{rows, grad, hess, active_cols, config, {}, {}};
    std::vector<std::size_t> idx(row_idx.begin(), row_idx.end());
    builder.build(idx, 0);
    return std::move(builder.tree);
}

Json Tree::to_json() const { return node_to_json(*this, 0); }

Tree Tree::from_json(const Json& j) {
    Tree tree;
    node_from_json(j, tree);
    return tree;
}

double GbModel::margin(std::span<const double> x) const {
    if (x.size() != n_features) {
        throw ValidationError("gbdt: input has " + std::to_string(x.size()) +
                              " features, model expects " + std::to_string(n_features));
    }
    double m = config.base_score;
    for (const auto& tree : trees) m += config.eta * tree.predict(x);
    return m;
}

double GbModel::predict_proba(std::span<const double> x) const {
    double m = margin(x);
    return config.loss == GbLoss::logistic ? sigmoid(m) : m;
}

GbModel fit_gbdt(std::span<const std::vector<double>> rows, std::span<const double> labels,
                 const GbConfig& config) {
    config.validate();
    if (rows.size() < 2) throw ValidationError("gbdt: need at least 2 rows");
    if (rows.size() != labels.size()) throw ValidationError("gbdt: rows/labels mismatch");
    const std::size_t n = rows.size();
    const std::size_t m = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != m) throw ValidationError("gbdt: ragged feature rows");
    }
    if (config.loss == GbLoss::logistic) {
        bool pos = false, neg = false;
        for (double y : labels) (y > 0.5 ? pos : neg) = true;
        if (!pos || !neg) throw ValidationError("gbdt: logistic loss needs both classes");
    }

    GbModel model;
    model.config = config;
    model.n_features = m;
    model.feature_gain.assign(m, 0.0);

    Rng rng(config.seed);
    std::vector<double> margins(n, config.base_score);
    std::vector<double> grad(n, 0.0), hess(n, 0.0);

    for (std::size_t round = 0; round < config.num_rounds; ++round) {
        auto row_idx = sample_indices(n, config.subsample, rng);
        auto col_idx = sample_indices(m, config.colsample, rng);
        for (std::size_t i : row_idx) {
            auto [g, h] = grad_hess(config.loss, labels[i], margins[i]);
            grad[i] = g;
            hess[i] = h;
        }

        TreeBuilder builder{rows, grad, hess, col_idx, config, {}, {}};
        std::vector<std::size_t> idx(row_idx.begin(), row_idx.end());
        builder.build(idx, 0);

        for (auto [feature, gain] : builder.chosen) model.feature_gain[feature] += gain;
        for (std::size_t i = 0; i < n; ++i) {
            margins[i] += config.eta * builder.tree.predict(rows[i]); // shrinkage update
        }
        model.trees.push_back(std::move(builder.tree));

        double loss = mean_loss(config.loss, labels, margins);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("gbdt: non-finite training loss at round " +
                                     std::to_string(round + 1));
        }
        model.train_loss.push_back(loss);
    }
    return model;
}

GbModel fit_gbdt(std::span<const FusedRecord> records, const GbConfig& config) {
    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    rows.reserve(records.size());
    for (const auto& rec : records) {
        rows.push_back(rec.x);
        labels.push_back(static_cast<double>(rec.label));
    }
    return fit_gbdt(rows, labels, config);
}

Json GbModel::to_json() const {
    Json j = schema_header("gbdt");
    Json cfg;
    cfg["eta"] = config.eta;
    cfg["max_depth"] = config.max_depth;
    cfg["min_child_weight"] = config.min_child_weight;
    cfg["subsample"] = config.subsample;
    cfg["colsample"] = config.colsample;
    cfg["lambda"] = config.lambda;
    cfg["gamma"] = config.gamma;
    cfg["num_rounds"] = config.num_rounds;
    cfg["base_score"] = config.base_score;
    cfg["loss"] = gb_loss_name(config.loss);
    cfg["seed"] = config.seed;
    j["config"] = std::move(cfg);
    j["n_features"] = n_features;
    Json trees_json = Json::array();
    for (const auto& tree : trees) trees_json.push_back(tree.to_json());
    j["trees"] = std::move(trees_json);
    j["feature_gain"] = feature_gain;
    return j;
}

GbModel GbModel::from_json(const Json& j) {
    check_schema(j, "gbdt");
    GbModel model;
    const Json& cfg = j.at("config");
    model.config.eta = cfg.at("eta").get<double>();
    model.config.max_depth = cfg.at("max_depth").get<std::size_t>();
    model.config.min_child_weight = cfg.at("min_child_weight").get<double>();
    model.config.subsample = cfg.at("subsample").get<double>();
    model.config.colsample = cfg.at("colsample").get<double>();
    model.config.lambda = cfg.at("lambda").get<double>();
    model.config.gamma = cfg.at("gamma").get<double>();
    model.config.num_rounds = cfg.at("num_rounds").get<std::size_t>();
    model.config.base_score = cfg.at("base_score").get<double>();
    model.config.loss = parse_gb_loss(cfg.at("loss").get<std::string>());
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    model.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& t : j.at("trees")) model.trees.push_back(Tree::from_json(t));
    model.feature_gain = j.at("feature_gain").get<std::vector<double>>();
    return model;
}

Json feature_importance_json(const GbModel& model, std::span<const std::string> column_names) {
    if (column_names.size() != model.feature_gain.size()) {
        throw ValidationError("feature importance: name count does not match model");
    }
    Json j = schema_header("feature_importance");
    Json gains = Json::array();
    for (std::size_t i = 0; i < column_names.size(); ++i) {
        if (model.feature_gain[i] == 0.0) continue;
        Json entry;
        entry["feature"] = column_names[i];
        entry["total_gain"] = round6(model.feature_gain[i]);
        gains.push_back(std::move(entry));
    }
    j["total_gain"] = std::move(gains);
    return j;
}

} // namespace diabrisk
