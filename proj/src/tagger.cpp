#include "diabrisk/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "diabrisk/common.hpp"
#include "diabrisk/rng.hpp"

namespace diabrisk {

namespace {

constexpr double kForbidden = -1e30;

double sigmoid_(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logsumexp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - m);
    return m + std::log(sum);
}

// y = W z + b (b is 1 x rows)
void affine(const Matrix& w, const Matrix& b, std::span<const double> z, Vec& y) {
    y.assign(w.rows, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double* wr = w.row(r);
        double acc = b(0, r);
        for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * z[c];
        y[r] = acc;
    }
}

// dW += a (x) z ; db += a ; dz += W^T a
void affine_backward(const Matrix& w, std::span<const double> a, std::span<const double> z,
                     Matrix& dw, Matrix& db, Vec& dz) {
    for (std::size_t r = 0; r < w.rows; ++r) {
        double ar = a[r];
        double* dwr = dw.row(r);
        const double* wr = w.row(r);
        for (std::size_t c = 0; c < w.cols; ++c) {
            dwr[c] += ar * z[c];
            dz[c] += wr[c] * ar;
        }
        db(0, r) += ar;
    }
}

struct StepCache {
    Vec z; // [h_prev, x]
    Vec f, i, o, ctil, c, tanh_c, h;
};

struct DirCache {
    std::vector<StepCache> steps; // in processing order
};

struct LayerCache {
    Matrix input;   // T x d_in
    DirCache fwd;
    DirCache bwd;
    Matrix output;  // T x out_dim, pre-dropout
    Matrix mask;    // inverted-dropout mask, empty when not applied
    Matrix rep;     // post-dropout output
};

struct ForwardCache {
    std::vector<LayerCache> layers;
};

void run_step(const GateParams& g, std::span<const double> x, const Vec& h_prev,
              const Vec& c_prev, StepCache& out) {
    const std::size_t h = g.w_f.rows;
    out.z.resize(h + x.size());
    std::copy(h_prev.begin(), h_prev.end(), out.z.begin());
    std::copy(x.begin(), x.end(), out.z.begin() + static_cast<std::ptrdiff_t>(h));

    affine(g.w_f, g.b_f, out.z, out.f);
    affine(g.w_i, g.b_i, out.z, out.i);
    affine(g.w_c, g.b_c, out.z, out.ctil);
    affine(g.w_o, g.b_o, out.z, out.o);
    out.c.resize(h);
    out.tanh_c.resize(h);
    out.h.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        out.f[j] = sigmoid_(out.f[j]);
        out.i[j] = sigmoid_(out.i[j]);
        out.o[j] = sigmoid_(out.o[j]);
        out.ctil[j] = std::tanh(out.ctil[j]);
        out.c[j] = out.f[j] * c_prev[j] + out.i[j] * out.ctil[j];
        out.tanh_c[j] = std::tanh(out.c[j]);
        out.h[j] = out.o[j] * out.tanh_c[j];
    }
}

void run_direction(const GateParams& g, const Matrix& input, bool reverse, std::size_t hidden,
                   DirCache& cache) {
    const std::size_t t_len = input.rows;
    cache.steps.resize(t_len);
    Vec h_prev(hidden, 0.0), c_prev(hidden, 0.0);
    for (std::size_t s = 0; s < t_len; ++s) {
        std::size_t row = reverse ? t_len - 1 - s : s;
        std::span<const double> x(input.row(row), input.cols);
        run_step(g, x, h_prev, c_prev, cache.steps[s]);
        h_prev = cache.steps[s].h;
        c_prev = cache.steps[s].c;
    }
}

// Final representation rows feed the emission projection.
const Matrix& forward_sentence(const TaggerParams& params, std::span<const std::size_t> tokens,
                               bool train_mode, double dropout_rate, Rng& mask_rng,
                               ForwardCache& cache) {
    const std::size_t t_len = tokens.size();
    const std::size_t out_dim = params.out_dim();
    const bool drop = train_mode && dropout_rate > 0.0;
    const double keep = 1.0 - dropout_rate;

    cache.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        LayerCache& lc = cache.layers[l];
        if (l == 0) {
            lc.input = Matrix(t_len, params.embed_dim);
            for (std::size_t t = 0; t < t_len; ++t) {
                if (tokens[t] >= params.vocab_size) {
                    throw ValidationError("token id out of range at position " + std::to_string(t));
                }
                const double* e = params.embed.row(tokens[t]);
                std::copy(e, e + params.embed_dim, lc.input.row(t));
            }
        } else {
            lc.input = cache.layers[l - 1].rep;
        }

        run_direction(params.layers[l].fwd, lc.input, false, params.hidden, lc.fwd);
        if (params.bidirectional) {
            run_direction(params.layers[l].bwd, lc.input, true, params.hidden, lc.bwd);
        }

        lc.output = Matrix(t_len, out_dim);
        for (std::size_t t = 0; t < t_len; ++t) {
            const Vec& hf = lc.fwd.steps[t].h;
            std::copy(hf.begin(), hf.end(), lc.output.row(t));
            if (params.bidirectional) {
                const Vec& hb = lc.bwd.steps[t_len - 1 - t].h;
                std::copy(hb.begin(), hb.end(), lc.output.row(t) + params.hidden);
            }
        }

        if (drop) {
            lc.mask = Matrix(t_len, out_dim);
            lc.rep = Matrix(t_len, out_dim);
            for (std::size_t t = 0; t < t_len; ++t) {
                for (std::size_t j = 0; j < out_dim; ++j) {
                    double m = mask_rng.uniform() < keep ? 1.0 / keep : 0.0;
                    lc.mask(t, j) = m;
                    lc.rep(t, j) = lc.output(t, j) * m;
                }
            }
        } else {
            lc.mask = Matrix();
            lc.rep = lc.output;
        }
    }
    return cache.layers.back().rep;
}

void backward_direction(const GateParams& g, const DirCache& cache, const Matrix& dstep_h,
                        bool reverse, GateParams& grad, Matrix& dinput) {
    const std::size_t t_len = cache.steps.size();
    const std::size_t hidden = g.w_f.rows;
    const std::size_t d_in = g.w_f.cols - hidden;

    Vec dh_carry(hidden, 0.0), dc_carry(hidden, 0.0);
    Vec dh(hidden), dc(hidden), df(hidden), di(hidden), dctil(hidden), do_(hidden);
    Vec af(hidden), ai(hidden), ac(hidden), ao(hidden), dz;

    for (std::size_t s = t_len; s-- > 0;) {
        const StepCache& st = cache.steps[s];
        std::size_t row = reverse ? t_len - 1 - s : s;
        for (std::size_t j = 0; j < hidden; ++j) dh[j] = dstep_h(row, j) + dh_carry[j];

        const Vec* c_prev = s > 0 ? &cache.steps[s - 1].c : nullptr;
        for (std::size_t j = 0; j < hidden; ++j) {
            do_[j] = dh[j] * st.tanh_c[j];
            dc[j] = dc_carry[j] + dh[j] * st.o[j] * (1.0 - st.tanh_c[j] * st.tanh_c[j]);
            df[j] = dc[j] * (c_prev ? (*c_prev)[j] : 0.0);
            di[j] = dc[j] * st.ctil[j];
            dctil[j] = dc[j] * st.i[j];
            dc_carry[j] = dc[j] * st.f[j];
            af[j] = df[j] * st.f[j] * (1.0 - st.f[j]);
            ai[j] = di[j] * st.i[j] * (1.0 - st.i[j]);
            ao[j] = do_[j] * st.o[j] * (1.0 - st.o[j]);
            ac[j] = dctil[j] * (1.0 - st.ctil[j] * st.ctil[j]);
        }

        dz.assign(hidden + d_in, 0.0);
        affine_backward(g.w_f, af, st.z, grad.w_f, grad.b_f, dz);
        affine_backward(g.w_i, ai, st.z, grad.w_i, grad.b_i, dz);
        affine_backward(g.w_c, ac, st.z, grad.w_c, grad.b_c, dz);
        affine_backward(g.w_o, ao, st.z, grad.w_o, grad.b_o, dz);

        std::copy(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(hidden), dh_carry.begin());
        for (std::size_t c = 0; c < d_in; ++c) dinput(row, c) += dz[hidden + c];
    }
}

// drep: gradient at the final (post-dropout) representation.
void backward_sentence(const TaggerParams& params, std::span<const std::size_t> tokens,
                       const ForwardCache& cache, Matrix drep, TaggerParams& grads) {
    const std::size_t t_len = tokens.size();
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const LayerCache& lc = cache.layers[l];
        Matrix dout = std::move(drep);
        if (lc.mask.size() > 0) {
            for (std::size_t t = 0; t < t_len; ++t) {
                for (std::size_t j = 0; j < dout.cols; ++j) dout(t, j) *= lc.mask(t, j);
            }
        }

        Matrix dinput(t_len, lc.input.cols);
        backward_direction(params.layers[l].fwd, lc.fwd,
                           dout, false, grads.layers[l].fwd, dinput);
        if (params.bidirectional) {
            // backward half occupies columns [hidden, 2*hidden)
            Matrix dbwd(t_len, params.hidden);
            for (std::size_t t = 0; t < t_len; ++t) {
                for (std::size_t j = 0; j < params.hidden; ++j) {
                    dbwd(t, j) = dout(t, params.hidden + j);
                }
            }
            backward_direction(params.layers[l].bwd, lc.bwd, dbwd, true, grads.layers[l].bwd,
                               dinput);
        }

        if (l == 0) {
            for (std::size_t t = 0; t < t_len; ++t) {
                double* erow = grads.embed.row(tokens[t]);
                for (std::size_t c = 0; c < params.embed_dim; ++c) erow[c] += dinput(t, c);
            }
        } else {
            drep = std::move(dinput);
        }
    }
}

struct CrfResult {
    double nll = 0.0;
    Matrix demission; // T x K
    Matrix alpha, beta;
    double log_z = 0.0;
};

// Forward-backward in the log domain; emission gradient is marginal minus
// the gold indicator, transition gradients are accumulated into dtrans.
CrfResult crf_backward(const Matrix& em, const Matrix& trans, std::span<const std::size_t> gold,
                       Matrix* dtrans) {
    const std::size_t t_len = em.rows;
    const std::size_t k = em.cols;
    const std::size_t start = k, stop = k + 1;

    CrfResult res;
    res.alpha = Matrix(t_len, k);
    res.beta = Matrix(t_len, k);

    for (std::size_t j = 0; j < k; ++j) res.alpha(0, j) = trans(start, j) + em(0, j);
    Vec scratch(k);
    for (std::size_t t = 1; t < t_len; ++t) {
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t p = 0; p < k; ++p) scratch[p] = res.alpha(t - 1, p) + trans(p, j);
            res.alpha(t, j) = logsumexp(scratch) + em(t, j);
        }
    }
    for (std::size_t j = 0; j < k; ++j) scratch[j] = res.alpha(t_len - 1, j) + trans(j, stop);
    res.log_z = logsumexp(scratch);

    for (std::size_t j = 0; j < k; ++j) res.beta(t_len - 1, j) = trans(j, stop);
    for (std::size_t t = t_len - 1; t-- > 0;) {
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t p = 0; p < k; ++p) {
                scratch[p] = trans(j, p) + em(t + 1, p) + res.beta(t + 1, p);
            }
            res.beta(t, j) = logsumexp(scratch);
        }
    }

    res.demission = Matrix(t_len, k);
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t j = 0; j < k; ++j) {
            res.demission(t, j) = std::exp(res.alpha(t, j) + res.beta(t, j) - res.log_z);
        }
        res.demission(t, gold[t]) -= 1.0;
    }

    if (dtrans) {
        for (std::size_t j = 0; j < k; ++j) {
            (*dtrans)(start, j) += std::exp(res.alpha(0, j) + res.beta(0, j) - res.log_z);
            (*dtrans)(j, stop) +=
                std::exp(res.alpha(t_len - 1, j) + res.beta(t_len - 1, j) - res.log_z);
        }
        (*dtrans)(start, gold[0]) -= 1.0;
        (*dtrans)(gold[t_len - 1], stop) -= 1.0;
        for (std::size_t t = 1; t < t_len; ++t) {
            for (std::size_t p = 0; p < k; ++p) {
                for (std::size_t j = 0; j < k; ++j) {
                    (*dtrans)(p, j) += std::exp(res.alpha(t - 1, p) + trans(p, j) + em(t, j) +
                                                res.beta(t, j) - res.log_z);
                }
            }
            (*dtrans)(gold[t - 1], gold[t]) -= 1.0;
        }
    }

    res.nll = res.log_z - crf_path_score(em, trans, gold);
    return res;
}

void check_gold(const Matrix& em, std::span<const std::size_t> gold) {
    if (gold.size() != em.rows) throw ValidationError("gold tag length mismatch");
    for (std::size_t t = 0; t < gold.size(); ++t) {
        if (gold[t] >= em.cols) {
            throw ValidationError("gold tag id out of range at position " + std::to_string(t));
        }
    }
}

void check_crf_shapes(const Matrix& em, const Matrix& trans) {
    if (em.rows == 0 || em.cols == 0) throw ValidationError("emissions must be non-empty");
    if (trans.rows != em.cols + 2 || trans.cols != em.cols + 2) {
        throw ValidationError("transition matrix must be (K+2) x (K+2)");
    }
}

std::vector<Matrix*> tensor_list(TaggerParams& p) {
    std::vector<Matrix*> out;
    p.for_each_tensor([&](const std::string&, Matrix& m) { out.push_back(&m); });
    return out;
}

} // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
    if (embed_dim == 0 || hidden_units == 0) throw ValidationError("dimensions must be positive");
    if (num_layers == 0) throw ValidationError("num_layers must be positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ValidationError("dropout_rate must be in [0,1)");
    if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
    if (patience == 0) throw ValidationError("patience must be at least 1");
    if (grad_clip < 0.0) throw ValidationError("grad_clip must be non-negative");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        throw ValidationError("adam betas must be in (0,1)");
    }
    if (!(adam_eps > 0.0)) throw ValidationError("adam_eps must be positive");
}

TaggerParams init_tagger_params(std::size_t vocab_size, std::size_t tag_count,
                                const TrainConfig& config) {
    config.validate();
    if (vocab_size == 0 || tag_count == 0) {
        throw ValidationError("vocab and tag set must be non-empty");
    }
    TaggerParams p;
    p.vocab_size = vocab_size;
    p.embed_dim = config.embed_dim;
    p.hidden = config.hidden_units;
    p.tag_count = tag_count;
    p.bidirectional = config.bidirectional;

    Rng rng(derive_seed(config.seed, "tagger-init"));
    auto uniform_fill = [&](Matrix& m, std::size_t fan_in) {
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : m.a) v = rng.uniform(-bound, bound);
    };

    p.embed = Matrix(vocab_size, p.embed_dim);
    uniform_fill(p.embed, p.embed_dim);

    const std::size_t h = p.hidden;
    p.layers.resize(config.num_layers);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        std::size_t d_in = l == 0 ? p.embed_dim : p.out_dim();
        auto make_dir = [&](GateParams& g) {
            std::size_t fan = h + d_in;
            g.w_f = Matrix(h, fan);
            g.w_i = Matrix(h, fan);
            g.w_c = Matrix(h, fan);
            g.w_o = Matrix(h, fan);
            uniform_fill(g.w_f, fan);
            uniform_fill(g.w_i, fan);
            uniform_fill(g.w_c, fan);
            uniform_fill(g.w_o, fan);
            g.b_f = Matrix(1, h, 1.0); // forget-gate bias +1
            g.b_i = Matrix(1, h, 0.0);
            g.b_c = Matrix(1, h, 0.0);
            g.b_o = Matrix(1, h, 0.0);
        };
        make_dir(p.layers[l].fwd);
        if (p.bidirectional) make_dir(p.layers[l].bwd);
    }

    p.proj = Matrix(p.out_dim(), tag_count);
    uniform_fill(p.proj, p.out_dim());
    p.proj_b = Matrix(1, tag_count, 0.0);
    p.trans = Matrix(tag_count + 2, tag_count + 2, 0.0);
    return p;
}

TaggerParams zeros_like(const TaggerParams& params) {
    TaggerParams z = params;
    z.for_each_tensor([](const std::string&, Matrix& m) { m.fill(0.0); });
    return z;
}

LstmState lstm_step(const GateParams& gates, std::span<const double> x, const LstmState& prev) {
    if (gates.w_f.cols != prev.h.size() + x.size()) {
        throw ValidationError("lstm_step: input size does not match gate shapes");
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("lstm_step: non-finite input");
    }
    for (std::size_t j = 0; j < prev.h.size(); ++j) {
        if (!std::isfinite(prev.h[j]) || !std::isfinite(prev.c[j])) {
            throw ValidationError("lstm_step: non-finite state");
        }
    }
    StepCache st;
    run_step(gates, x, prev.h, prev.c, st);
    return {std::move(st.h), std::move(st.c)};
}

Matrix bilstm_forward(const TaggerParams& params, std::span<const std::size_t> tokens,
                      bool train_mode, double dropout_rate, std::uint64_t mask_seed) {
    if (tokens.empty()) throw ValidationError("bilstm_forward: empty sequence");
    Rng mask_rng(mask_seed);
    ForwardCache cache;
    return forward_sentence(params, tokens, train_mode, dropout_rate, mask_rng, cache);
}

Matrix emissions(const Matrix& hidden, const Matrix& proj, const Matrix& proj_b) {
    if (hidden.cols != proj.rows || proj_b.cols != proj.cols) {
        throw ValidationError("emissions: shape mismatch");
    }
    Matrix em(hidden.rows, proj.cols);
    for (std::size_t t = 0; t < hidden.rows; ++t) {
        for (std::size_t k = 0; k < proj.cols; ++k) {
            double acc = proj_b(0, k);
            for (std::size_t j = 0; j < proj.rows; ++j) acc += hidden(t, j) * proj(j, k);
            em(t, k) = acc;
        }
    }
    return em;
}

double crf_log_partition(const Matrix& em, const Matrix& trans) {
    check_crf_shapes(em, trans);
    const std::size_t t_len = em.rows, k = em.cols;
    const std::size_t start = k, stop = k + 1;
    Vec alpha(k), next(k), scratch(k);
    for (std::size_t j = 0; j < k; ++j) alpha[j] = trans(start, j) + em(0, j);
    for (std::size_t t = 1; t < t_len; ++t) {
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t p = 0; p < k; ++p) scratch[p] = alpha[p] + trans(p, j);
            next[j] = logsumexp(scratch) + em(t, j);
        }
        alpha = next;
    }
    for (std::size_t j = 0; j < k; ++j) scratch[j] = alpha[j] + trans(j, stop);
    return logsumexp(scratch);
}

double crf_path_score(const Matrix& em, const Matrix& trans, std::span<const std::size_t> path) {
    check_crf_shapes(em, trans);
    check_gold(em, path);
    const std::size_t k = em.cols;
    double s = trans(k, path[0]);
    s += em(0, path[0]);
    for (std::size_t t = 1; t < path.size(); ++t) {
        s += trans(path[t - 1], path[t]);
        s += em(t, path[t]);
    }
    s += trans(path.back(), k + 1);
    return s;
}

double crf_nll(const Matrix& em, const Matrix& trans, std::span<const std::size_t> gold) {
    return crf_log_partition(em, trans) - crf_path_score(em, trans, gold);
}

std::vector<std::size_t> viterbi(const Matrix& em, const Matrix& trans) {
    check_crf_shapes(em, trans);
    const std::size_t t_len = em.rows, k = em.cols;
    const std::size_t start = k, stop = k + 1;

    Matrix delta(t_len, k);
    std::vector<std::vector<std::size_t>> bp(t_len, std::vector<std::size_t>(k, 0));
    for (std::size_t j = 0; j < k; ++j) delta(0, j) = trans(start, j) + em(0, j);
    for (std::size_t t = 1; t < t_len; ++t) {
        for (std::size_t j = 0; j < k; ++j) {
            double best = delta(t - 1, 0) + trans(0, j);
            std::size_t arg = 0;
            for (std::size_t p = 1; p < k; ++p) {
                double cand = delta(t - 1, p) + trans(p, j);
                if (cand > best) { // strict: ties keep the smaller index
                    best = cand;
                    arg = p;
                }
            }
            delta(t, j) = best + em(t, j);
            bp[t][j] = arg;
        }
    }

    double best = delta(t_len - 1, 0) + trans(0, stop);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < k; ++j) {
        double cand = delta(t_len - 1, j) + trans(j, stop);
        if (cand > best) {
            best = cand;
            arg = j;
        }
    }

    std::vector<std::size_t> path(t_len);
    path[t_len - 1] = arg;
    for (std::size_t t = t_len - 1; t > 0; --t) path[t - 1] = bp[t][path[t]];
    return path;
}

Matrix bio_transition_mask(const TagSet& tag_set) {
    const std::size_t k = tag_set.size();
    Matrix mask(k + 2, k + 2, 0.0);
    for (std::size_t to = 0; to < k; ++to) {
        if (tag_set.roles[to] != TagSet::Role::inside) continue;
        int kind = tag_set.kind_of[to];
        for (std::size_t from = 0; from < k + 2; ++from) {
            bool ok = from < k &&
                      (tag_set.roles[from] == TagSet::Role::begin ||
                       tag_set.roles[from] == TagSet::Role::inside) &&
                      tag_set.kind_of[from] == kind;
            if (!ok) mask(from, to) = kForbidden;
        }
    }
    return mask;
}

BatchGradients gradients(const TaggerParams& params, std::span<const TaggedExample> batch,
                         const TrainConfig& config, std::uint64_t mask_seed, bool train_mode) {
    if (batch.empty()) throw ValidationError("gradients: empty batch");
    BatchGradients out;
    out.grads = zeros_like(params);
    Rng mask_rng(mask_seed);

    // without the CRF the objective is per-token softmax cross-entropy,
    // which is exactly the chain objective under all-zero transitions
    const Matrix zero_trans(params.trans.rows, params.trans.cols, 0.0);
    const Matrix& trans = config.use_crf ? params.trans : zero_trans;

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const TaggedExample& ex = batch[b];
        if (ex.tokens.empty() || ex.tokens.size() != ex.tags.size()) {
            throw ValidationError("gradients: malformed example at index " + std::to_string(b));
        }
        ForwardCache cache;
        const Matrix& rep =
            forward_sentence(params, ex.tokens, train_mode, config.dropout_rate, mask_rng, cache);
        Matrix em = emissions(rep, params.proj, params.proj_b);
        check_gold(em, ex.tags);

        Matrix dtrans_local(params.trans.rows, params.trans.cols, 0.0);
        CrfResult crf = crf_backward(em, trans, ex.tags,
                                     config.use_crf ? &dtrans_local : nullptr);
        if (!std::isfinite(crf.nll)) {
            throw std::runtime_error("gradients: non-finite loss at batch item " +
                                     std::to_string(b));
        }
        out.loss += crf.nll;
        if (config.use_crf) {
            for (std::size_t i = 0; i < dtrans_local.size(); ++i) {
                out.grads.trans.a[i] += dtrans_local.a[i];
            }
        }

        // projection backward: demission -> proj, proj_b, representation
        Matrix drep(rep.rows, rep.cols, 0.0);
        for (std::size_t t = 0; t < em.rows; ++t) {
            for (std::size_t kk = 0; kk < em.cols; ++kk) {
                double d = crf.demission(t, kk);
                if (d == 0.0) continue;
                out.grads.proj_b(0, kk) += d;
                for (std::size_t j = 0; j < rep.cols; ++j) {
                    out.grads.proj(j, kk) += rep(t, j) * d;
                    drep(t, j) += params.proj(j, kk) * d;
                }
            }
        }
        backward_sentence(params, ex.tokens, cache, std::move(drep), out.grads);
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    out.grads.for_each_tensor([&](const std::string&, Matrix& m) {
        for (double& v : m.a) v *= inv;
    });
    return out;
}

double batch_loss(const TaggerParams& params, std::span<const TaggedExample> batch,
                  const TrainConfig& config, std::uint64_t mask_seed, bool train_mode) {
    if (batch.empty()) throw ValidationError("batch_loss: empty batch");
    Rng mask_rng(mask_seed);
    const Matrix zero_trans(params.trans.rows, params.trans.cols, 0.0);
    const Matrix& trans = config.use_crf ? params.trans : zero_trans;
    double total = 0.0;
    for (const TaggedExample& ex : batch) {
        ForwardCache cache;
        const Matrix& rep =
            forward_sentence(params, ex.tokens, train_mode, config.dropout_rate, mask_rng, cache);
        Matrix em = emissions(rep, params.proj, params.proj_b);
        check_gold(em, ex.tags);
        total += crf_nll(em, trans, ex.tags);
    }
    return total / static_cast<double>(batch.size());
}

AdamState make_adam_state(const TaggerParams& params) {
    return {zeros_like(params), zeros_like(params), 0};
}

void adam_step(TaggerParams& params, const TaggerParams& grads, AdamState& state,
               const TrainConfig& config) {
    auto p_list = tensor_list(params);
    auto g_list = tensor_list(const_cast<TaggerParams&>(grads));
    auto m_list = tensor_list(state.m);
    auto v_list = tensor_list(state.v);
    if (p_list.size() != g_list.size()) throw ValidationError("adam_step: shape mismatch");

    double sq = 0.0;
    for (const Matrix* g : g_list) {
        for (double v : g->a) sq += v * v;
    }
    double norm = std::sqrt(sq);
    double scale = (config.grad_clip > 0.0 && norm > config.grad_clip)
                       ? config.grad_clip / norm
                       : 1.0;

    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < p_list.size(); ++i) {
        Matrix& p = *p_list[i];
        const Matrix& g = *g_list[i];
        Matrix& m = *m_list[i];
        Matrix& v = *v_list[i];
        if (p.size() != g.size()) throw ValidationError("adam_step: tensor size mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) {
            double gj = g.a[j] * scale;
            m.a[j] = config.adam_beta1 * m.a[j] + (1.0 - config.adam_beta1) * gj;
            v.a[j] = config.adam_beta2 * v.a[j] + (1.0 - config.adam_beta2) * gj * gj;
            double mhat = m.a[j] / bc1;
            double vhat = v.a[j] / bc2;
            p.a[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
        }
    }
}

bool EarlyStopper::update(std::size_t epoch, double val_loss) {
    if (!started || val_loss < best) {
        started = true;
        best = val_loss;
        best_epoch = epoch;
        bad = 0;
        return false;
    }
    ++bad;
    return bad >= patience;
}

TaggedExample encode_example(const TaggedSentence& sentence, const Vocabulary& vocab,
                             const TagSet& tags) {
    TaggedExample ex;
    ex.tokens.reserve(sentence.tokens.size());
    ex.tags.reserve(sentence.tags.size());
    for (const auto& tok : sentence.tokens) ex.tokens.push_back(vocab.id(tok));
    for (const auto& tag : sentence.tags) ex.tags.push_back(tags.index(tag));
    return ex;
}

std::vector<std::string> Tagger::tag(std::span<const std::string> tokens) const {
    if (tokens.empty()) throw ValidationError("tag: empty sentence");
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& tok : tokens) ids.push_back(vocab.id(tok));

    Matrix rep = bilstm_forward(params, ids, false, 0.0, 0);
    Matrix em = emissions(rep, params.proj, params.proj_b);
    Matrix trans_eff = config.use_crf ? params.trans
                                      : Matrix(params.trans.rows, params.trans.cols, 0.0);
    if (config.constrain_bio) {
        Matrix mask = bio_transition_mask(tags);
        for (std::size_t i = 0; i < trans_eff.size(); ++i) trans_eff.a[i] += mask.a[i];
    }
    auto path = viterbi(em, trans_eff);

    std::vector<std::string> out;
    out.reserve(path.size());
    for (std::size_t id : path) out.push_back(tags.tags[id]);
    return out;
}

namespace {

Json matrix_to_json(const Matrix& m) {
    Json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    j["data"] = m.a;
    return j;
}

void matrix_from_json(const Json& j, Matrix& m) {
    std::size_t rows = j.at("rows").get<std::size_t>();
    std::size_t cols = j.at("cols").get<std::size_t>();
    if (rows != m.rows || cols != m.cols) {
        throw ValidationError("tensor shape mismatch: stored " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", expected " + std::to_string(m.rows) + "x" +
                              std::to_string(m.cols));
    }
    m.a = j.at("data").get<std::vector<double>>();
    if (m.a.size() != rows * cols) throw ValidationError("tensor data size mismatch");
}

Json train_config_to_json(const TrainConfig& c) {
    Json j;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["embed_dim"] = c.embed_dim;
    j["hidden_units"] = c.hidden_units;
    j["num_layers"] = c.num_layers;
    j["dropout_rate"] = c.dropout_rate;
    j["max_epochs"] = c.max_epochs;
    j["patience"] = c.patience;
    j["grad_clip"] = c.grad_clip;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_eps"] = c.adam_eps;
    j["bidirectional"] = c.bidirectional;
    j["use_crf"] = c.use_crf;
    j["constrain_bio"] = c.constrain_bio;
    j["seed"] = c.seed;
    return j;
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.hidden_units = j.at("hidden_units").get<std::size_t>();
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.grad_clip = j.at("grad_clip").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.bidirectional = j.at("bidirectional").get<bool>();
    c.use_crf = j.at("use_crf").get<bool>();
    c.constrain_bio = j.at("constrain_bio").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

Json Tagger::to_json() const {
    Json j = schema_header("tagger");
    j["config"] = train_config_to_json(config);
    j["vocab"] = vocab.to_json();
    j["entity_kinds"] = tags.kinds;
    Json tensors;
    params.for_each_tensor([&](const std::string& name, const Matrix& m) {
        tensors[name] = matrix_to_json(m);
    });
    j["tensors"] = std::move(tensors);
    return j;
}

Tagger Tagger::from_json(const Json& j) {
    check_schema(j, "tagger");
    Tagger t;
    t.config = train_config_from_json(j.at("config"));
    t.vocab = Vocabulary::from_json(j.at("vocab"));
    auto kinds = j.at("entity_kinds").get<std::vector<std::string>>();
    t.tags = TagSet::for_kinds(kinds);
    t.params = init_tagger_params(t.vocab.size(), t.tags.size(), t.config);
    const Json& tensors = j.at("tensors");
    t.params.for_each_tensor([&](const std::string& name, Matrix& m) {
        if (!tensors.contains(name)) throw ValidationError("missing tensor '" + name + "'");
        matrix_from_json(tensors.at(name), m);
    });
    return t;
}

TrainLog train_tagger(Tagger& tagger, std::span<const TaggedSentence> train,
                      std::span<const TaggedSentence> val) {
    tagger.config.validate();
    if (train.empty() || val.empty()) {
        throw ValidationError("train_tagger: train and validation sets must be non-empty");
    }
    const TrainConfig& config = tagger.config;

    std::vector<TaggedExample> train_ex, val_ex;
    train_ex.reserve(train.size());
    for (const auto& s : train) train_ex.push_back(encode_example(s, tagger.vocab, tagger.tags));
    val_ex.reserve(val.size());
    for (const auto& s : val) val_ex.push_back(encode_example(s, tagger.vocab, tagger.tags));

    Rng order_rng(derive_seed(config.seed, "tagger-order"));
    const std::uint64_t drop_root = derive_seed(config.seed, "tagger-dropout");

    AdamState state = make_adam_state(tagger.params);
    EarlyStopper stopper{config.patience};
    TaggerParams best = tagger.params;
    TrainLog log;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<std::size_t> order(train_ex.size());
        std::iota(order.begin(), order.end(), 0);
        order_rng.shuffle(order);
        // bucket by length so batches stay uniform; stable keeps the shuffle
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return train_ex[a].tokens.size() < train_ex[b].tokens.size();
        });
        std::vector<std::vector<TaggedExample>> batches;
        for (std::size_t i = 0; i < order.size(); i += config.batch_size) {
            std::vector<TaggedExample> batch;
            for (std::size_t j = i; j < std::min(order.size(), i + config.batch_size); ++j) {
                batch.push_back(train_ex[order[j]]);
            }
            batches.push_back(std::move(batch));
        }
        order_rng.shuffle(batches);

        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            std::uint64_t mask_seed =
                derive_seed(drop_root, std::to_string(epoch) + ":" + std::to_string(b));
            BatchGradients bg = gradients(tagger.params, batches[b], config, mask_seed, true);
            adam_step(tagger.params, bg.grads, state, config);
            loss_sum += bg.loss;
        }
        double train_loss = loss_sum / static_cast<double>(batches.size());
        double val_loss = batch_loss(tagger.params, val_ex, config, 0, false);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
        }

        log.epochs.push_back({epoch, train_loss, val_loss});
        bool stop = stopper.update(epoch, val_loss);
        if (stopper.best_epoch == epoch) best = tagger.params;
        log.stopped_epoch = epoch;
        if (stop) {
            log.early_stopped = true;
            break;
        }
    }

    log.best_epoch = stopper.best_epoch;
    tagger.params = std::move(best);
    return log;
}

} // namespace diabrisk
