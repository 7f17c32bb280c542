#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diabrisk/corpus.hpp"
#include "diabrisk/features.hpp"
#include "diabrisk/jsonio.hpp"
#include "diabrisk/matrix.hpp"

namespace diabrisk {

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 16;
    std::size_t embed_dim = 32;
    std::size_t hidden_units = 32;
    std::size_t num_layers = 1;
    double dropout_rate = 0.1;
    std::size_t max_epochs = 30;
    std::size_t patience = 5;
    double grad_clip = 5.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool bidirectional = true;
    bool use_crf = true;
    bool constrain_bio = true; // hard BIO transition mask at decode time
    std::uint64_t seed = 0;

    void validate() const;
};

// One recurrence direction: gate weights are h x (h + d_in), biases 1 x h.
struct GateParams {
    Matrix w_f, w_i, w_c, w_o;
    Matrix b_f, b_i, b_c, b_o;
};

struct LayerParams {
    GateParams fwd;
    GateParams bwd; // empty when unidirectional
};

// Every trainable tensor. Also reused shape-for-shape as the gradient and
// Adam moment containers.
struct TaggerParams {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 0;
    std::size_t hidden = 0;
    std::size_t tag_count = 0; // K
    bool bidirectional = true;

    Matrix embed;              // vocab x d
    std::vector<LayerParams> layers;
    Matrix proj;               // out_dim x K
    Matrix proj_b;             // 1 x K
    Matrix trans;              // (K+2) x (K+2); START = K, STOP = K+1

    std::size_t out_dim() const { return bidirectional ? 2 * hidden : hidden; }
    std::size_t start_state() const { return tag_count; }
    std::size_t stop_state() const { return tag_count + 1; }

    template <class F> void for_each_tensor(F&& f);
    template <class F> void for_each_tensor(F&& f) const;
};

// Uniform +/- 1/sqrt(fan_in) weights, zero biases except forget gate +1,
// zero transitions.
TaggerParams init_tagger_params(std::size_t vocab_size, std::size_t tag_count,
                                const TrainConfig& config);

TaggerParams zeros_like(const TaggerParams& params);

struct LstmState {
    Vec h;
    Vec c;
};

// Eqs of the standard gated cell: f,i,o sigmoid gates over [h_prev, x],
// candidate tanh, c = f*c_prev + i*cand, h = o*tanh(c).
LstmState lstm_step(const GateParams& gates, std::span<const double> x, const LstmState& prev);

// Rows are concat(h_t forward, h_t backward); layers stack; dropout only
// in train mode (inverted scaling), masks drawn from mask_seed.
Matrix bilstm_forward(const TaggerParams& params, std::span<const std::size_t> tokens,
                      bool train_mode, double dropout_rate, std::uint64_t mask_seed);

// Per-step affine projection of hidden rows to tag scores.
Matrix emissions(const Matrix& hidden, const Matrix& proj, const Matrix& proj_b);

// log Z over all K^T paths, log-domain forward recursion.
double crf_log_partition(const Matrix& em, const Matrix& trans);

// Path score: START transition + per-step emissions + pairwise transitions
// + STOP transition, summed left to right.
double crf_path_score(const Matrix& em, const Matrix& trans, std::span<const std::size_t> path);

// -log P(gold | X) = log Z - score(gold).
double crf_nll(const Matrix& em, const Matrix& trans, std::span<const std::size_t> gold);

// Highest-scoring path; ties resolve to the smaller tag index at each
// backpointer and at the final state.
std::vector<std::size_t> viterbi(const Matrix& em, const Matrix& trans);

// Additive mask forbidding START->I-X and J->I-X unless J is B-X or I-X.
Matrix bio_transition_mask(const TagSet& tag_set);

struct TaggedExample {
    std::vector<std::size_t> tokens; // vocabulary ids
    std::vector<std::size_t> tags;   // tag ids
};

struct BatchGradients {
    TaggerParams grads; // mean over the batch
    double loss = 0.0;  // mean per-sentence nll
};

// Exact analytic gradient of the mean sentence nll: CRF forward-backward
// marginals into emission/transition gradients, then backprop through the
// projection, dropout masks and both recurrence directions, down to the
// embedding rows. mask_seed must match batch_loss for the same batch.
BatchGradients gradients(const TaggerParams& params, std::span<const TaggedExample> batch,
                         const TrainConfig& config, std::uint64_t mask_seed, bool train_mode);

// Same forward pass (identical dropout masks for the same mask_seed);
// used by the finite-difference tests.
double batch_loss(const TaggerParams& params, std::span<const TaggedExample> batch,
                  const TrainConfig& config, std::uint64_t mask_seed, bool train_mode);

struct AdamState {
    TaggerParams m;
    TaggerParams v;
    std::size_t step = 0;
};

AdamState make_adam_state(const TaggerParams& params);

// Global-norm clipping, then the bias-corrected Adam update.
void adam_step(TaggerParams& params, const TaggerParams& grads, AdamState& state,
               const TrainConfig& config);

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;
    std::size_t stopped_epoch = 0;
    bool early_stopped = false;
};

// Stop after `patience` consecutive epochs without a new best.
struct EarlyStopper {
    std::size_t patience = 1;
    double best = 0.0;
    std::size_t best_epoch = 0;
    std::size_t bad = 0;
    bool started = false;

    bool update(std::size_t epoch, double val_loss);
};

struct Tagger {
    TrainConfig config;
    Vocabulary vocab;
    TagSet tags;
    TaggerParams params;

    std::vector<std::string> tag(std::span<const std::string> tokens) const;

    Json to_json() const;
    static Tagger from_json(const Json& j);
};

TaggedExample encode_example(const TaggedSentence& sentence, const Vocabulary& vocab,
                             const TagSet& tags);

// Minibatch Adam over the nll; keeps the best-validation parameters.
// Throws std::runtime_error naming the epoch if the loss goes non-finite.
TrainLog train_tagger(Tagger& tagger, std::span<const TaggedSentence> train,
                      std::span<const TaggedSentence> val);

template <class F>
void TaggerParams::for_each_tensor(F&& f) {
    f("embed", embed);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto dir = [&](const char* name, GateParams& g) {
            std::string p = "layer" + std::to_string(l) + "." + name + ".";
            f(p + "w_f", g.w_f);
            f(p + "w_i", g.w_i);
            f(p + "w_c", g.w_c);
            f(p + "w_o", g.w_o);
            f(p + "b_f", g.b_f);
            f(p + "b_i", g.b_i);
            f(p + "b_c", g.b_c);
            f(p + "b_o", g.b_o);
        };
        dir("fwd", layers[l].fwd);
        if (bidirectional) dir("bwd", layers[l].bwd);
    }
    f("proj", proj);
    f("proj_b", proj_b);
    f("trans", trans);
}

template <class F>
void TaggerParams::for_each_tensor(F&& f) const {
    const_cast<TaggerParams*>(this)->for_each_tensor(
        [&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
}

} // namespace diabrisk
