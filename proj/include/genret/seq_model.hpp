#pragma once
// Trainable autoregressive sequence model.
//
// Decoder-only conditioning: the model consumes
//   BOS  query-tokens  SEP  view-marker  target-tokens
// and emits a log-distribution over the vocabulary after every consumed
// token. Target tokens are scored teacher-forced. The context architecture
// of this build is a single-layer GRU; parameters live in one flat
// single-precision vector, all arithmetic runs in double, and gradients are
// exact (validated against central finite differences in the test suite).

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "genret/common.hpp"
#include "genret/identifiers.hpp"
#include "genret/vocab.hpp"

namespace genret {

struct ModelConfig {
    std::uint32_t vocab_size = 0;
    std::uint32_t embed_dim = 16;
    std::uint32_t hidden_dim = 64;
    std::string context_arch = "recurrent";  // this build implements the recurrent choice
    std::uint32_t max_seq_len = 512;
    std::uint64_t seed = 1;
};

class SeqModel {
public:
    SeqModel() = default;

    explicit SeqModel(const ModelConfig& cfg) : cfg_(cfg) {
        if (cfg.vocab_size <= NUM_SPECIALS)
            throw ConfigError("vocab_size must exceed the special-token count");
        if (cfg.embed_dim < 1 || cfg.hidden_dim < 1 || cfg.max_seq_len < 1)
            throw ConfigError("model dimensions must be >= 1");
        if (cfg.context_arch != "recurrent")
            throw ConfigError("this build supports context_arch 'recurrent', got '" + cfg.context_arch + "'");
        layout();
        params_.assign(total_, 0.0f);
        std::mt19937 rng(std::uint32_t(cfg.seed ^ 0x9e3779b97f4a7c15ull));
        std::normal_distribution<double> dist(0.0, 1.0);
        auto fill = [&](std::size_t off, std::size_t count, double scale) {
            for (std::size_t i = 0; i < count; ++i) params_[off + i] = float(dist(rng) * scale);
        };
        const double E = cfg.embed_dim, H = cfg.hidden_dim;
        fill(off_emb_, std::size_t(cfg.vocab_size) * cfg.embed_dim, 0.1);
        for (int g = 0; g < 3; ++g) {
            fill(gate_w(g), std::size_t(cfg.embed_dim) * cfg.hidden_dim, 0.1 / std::sqrt(E));
            fill(gate_u(g), std::size_t(cfg.hidden_dim) * cfg.hidden_dim, 0.1 / std::sqrt(H));
            // biases stay zero
        }
        fill(off_wo_, std::size_t(cfg.hidden_dim) * cfg.vocab_size, 0.1 / std::sqrt(H));
    }

    const ModelConfig& config() const { return cfg_; }
    std::size_t param_count() const { return params_.size(); }
    std::vector<float>& params() { return params_; }
    const std::vector<float>& params() const { return params_; }

    // --- incremental decoding ----------------------------------------------

    struct DecodeState {
        std::vector<double> h;
    };

    DecodeState decode_begin(std::span<const TokenId> query, TokenId marker) const {
        DecodeState st;
        st.h.assign(cfg_.hidden_dim, 0.0);
        step_hidden(st.h, BOS_ID);
        for (TokenId t : query) step_hidden(st.h, check_token(t));
        step_hidden(st.h, SEP_ID);
        step_hidden(st.h, check_token(marker));
        return st;
    }

    void decode_step(DecodeState& st, TokenId tok) const { step_hidden(st.h, check_token(tok)); }

    // Log-distribution over the vocabulary for the next token.
    std::vector<double> next_logprobs(const DecodeState& st) const {
        std::vector<double> logits(cfg_.vocab_size, 0.0);
        output_logits(st.h, logits);
        log_softmax_inplace(logits);
        return logits;
    }

    // --- teacher-forced scoring --------------------------------------------

    struct ScoreResult {
        double total = 0.0;
        std::vector<double> per_token;
    };

    // Sum of log p(target_j | query, marker, target_<j). Every entry <= 0.
    ScoreResult score_sequence(std::span<const TokenId> query, TokenId marker,
                               std::span<const TokenId> target) const {
        return run_scored(query, marker, target, 0.0, nullptr);
    }

    // As score_sequence, additionally accumulating weight * d(total)/dtheta
    // into `grad` (which must have param_count() entries).
    double score_sequence_grad(std::span<const TokenId> query, TokenId marker,
                               std::span<const TokenId> target, double weight,
                               std::vector<double>& grad) const {
        if (grad.size() != params_.size())
            throw ConfigError("gradient buffer size mismatch");
        return run_scored(query, marker, target, weight, &grad).total;
    }

    std::uint64_t params_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (float f : params_) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            h = fnv1a64_u64(bits, h);
        }
        return h;
    }

private:
    // Parameter layout: embeddings, then z/r/h gates (W: ExH, U: HxH, b: H),
    // then the output projection (W_o: HxV, b_o: V).
    void layout() {
        const std::size_t V = cfg_.vocab_size, E = cfg_.embed_dim, H = cfg_.hidden_dim;
        std::size_t off = 0;
        off_emb_ = off; off += V * E;
        for (int g = 0; g < 3; ++g) {
            gate_off_[g][0] = off; off += E * H;  // W
            gate_off_[g][1] = off; off += H * H;  // U
            gate_off_[g][2] = off; off += H;      // b
        }
        off_wo_ = off; off += H * V;
        off_bo_ = off; off += V;
        total_ = off;
    }

    std::size_t gate_w(int g) const { return gate_off_[g][0]; }
    std::size_t gate_u(int g) const { return gate_off_[g][1]; }
    std::size_t gate_b(int g) const { return gate_off_[g][2]; }

    TokenId check_token(TokenId t) const {
        if (t >= cfg_.vocab_size)
            throw DataError("token id " + std::to_string(t) + " out of vocabulary");
        return t;
    }

    static double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

    struct StepCache {
        TokenId tok;
        std::vector<double> h_prev, z, r, hc;
    };

    // One GRU step; fills the cache when given one.
    void gru_step(std::vector<double>& h, TokenId tok, StepCache* cache) const {
        const std::size_t E = cfg_.embed_dim, H = cfg_.hidden_dim;
        const float* emb = params_.data() + off_emb_ + std::size_t(tok) * E;
        std::vector<double> pre[3];
        for (int g = 0; g < 3; ++g) {
            pre[g].assign(H, 0.0);
            const float* b = params_.data() + gate_b(g);
            for (std::size_t j = 0; j < H; ++j) pre[g][j] = b[j];
            const float* W = params_.data() + gate_w(g);
            for (std::size_t i = 0; i < E; ++i) {
                double x = emb[i];
                const float* row = W + i * H;
                for (std::size_t j = 0; j < H; ++j) pre[g][j] += x * row[j];
            }
        }
        // z and r depend on h directly; the candidate uses r-gated h.
        auto add_u = [&](int g, const std::vector<double>& hin) {
            const float* U = params_.data() + gate_u(g);
            for (std::size_t i = 0; i < H; ++i) {
                double x = hin[i];
                if (x == 0.0) continue;
                const float* row = U + i * H;
                for (std::size_t j = 0; j < H; ++j) pre[g][j] += x * row[j];
            }
        };
        add_u(0, h);
        add_u(1, h);
        std::vector<double> z(H), r(H);
        for (std::size_t j = 0; j < H; ++j) z[j] = sigmoid(pre[0][j]);
        for (std::size_t j = 0; j < H; ++j) r[j] = sigmoid(pre[1][j]);
        std::vector<double> rh(H);
        for (std::size_t j = 0; j < H; ++j) rh[j] = r[j] * h[j];
        add_u(2, rh);
        std::vector<double> hc(H);
        for (std::size_t j = 0; j < H; ++j) hc[j] = std::tanh(pre[2][j]);
        if (cache) {
            cache->tok = tok;
            cache->h_prev = h;
            cache->z = z;
            cache->r = r;
            cache->hc = hc;
        }
        for (std::size_t j = 0; j < H; ++j) h[j] = (1.0 - z[j]) * h[j] + z[j] * hc[j];
    }

    void step_hidden(std::vector<double>& h, TokenId tok) const { gru_step(h, tok, nullptr); }

    void output_logits(const std::vector<double>& h, std::vector<double>& logits) const {
        const std::size_t H = cfg_.hidden_dim, V = cfg_.vocab_size;
        const float* bo = params_.data() + off_bo_;
        for (std::size_t v = 0; v < V; ++v) logits[v] = bo[v];
        const float* Wo = params_.data() + off_wo_;
        for (std::size_t i = 0; i < H; ++i) {
            double x = h[i];
            const float* row = Wo + i * V;
            for (std::size_t v = 0; v < V; ++v) logits[v] += x * row[v];
        }
    }

    // Double-precision accumulation keeps the normalization identity tight.
    static void log_softmax_inplace(std::vector<double>& logits) {
        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        double sum = 0.0;
        for (double v : logits) sum += std::exp(v - mx);
        double lse = mx + std::log(sum);
        for (double& v : logits) v -= lse;
    }

    ScoreResult run_scored(std::span<const TokenId> query, TokenId marker,
                           std::span<const TokenId> target, double weight,
                           std::vector<double>* grad) const {
        const std::size_t H = cfg_.hidden_dim, V = cfg_.vocab_size;
        std::vector<TokenId> input;
        input.reserve(query.size() + target.size() + 3);
        input.push_back(BOS_ID);
        for (TokenId t : query) input.push_back(check_token(t));
        input.push_back(SEP_ID);
        input.push_back(check_token(marker));
        const std::size_t prefix_len = input.size();
        for (TokenId t : target) input.push_back(check_token(t));
        if (input.size() > cfg_.max_seq_len)
            throw DataError("sequence length " + std::to_string(input.size()) +
                            " exceeds model max_seq_len " + std::to_string(cfg_.max_seq_len));

        ScoreResult res;
        res.per_token.reserve(target.size());
        if (target.empty()) return res;

        // Forward. Consuming input[j] for j in [0, n-2]; position j >= prefix_len-1
        // scores input[j+1].
        const std::size_t steps = input.size() - 1;
        std::vector<StepCache> caches;
        std::vector<std::vector<double>> probs_at;  // softmax at scored steps (backward only)
        if (grad) {
            caches.resize(steps);
            probs_at.resize(steps);
        }
        std::vector<double> h(H, 0.0), logits(V);
        for (std::size_t j = 0; j < steps; ++j) {
            gru_step(h, input[j], grad ? &caches[j] : nullptr);
            if (j + 1 >= prefix_len) {
                output_logits(h, logits);
                log_softmax_inplace(logits);
                res.per_token.push_back(logits[input[j + 1]]);
                res.total += logits[input[j + 1]];
                if (grad) {
                    auto& p = probs_at[j];
                    p.resize(V);
                    for (std::size_t v = 0; v < V; ++v) p[v] = std::exp(logits[v]);
                }
            }
        }
        if (!grad) return res;

        // Backward through time: d(total)/dlogits at a scored step is
        // onehot(next) - softmax, scaled by `weight`.
        std::vector<double>& g = *grad;
        const std::size_t E = cfg_.embed_dim;
        std::vector<double> dh(H, 0.0);
        std::vector<double> dlogits(V), dz(H), dr(H), dhc(H), dpre(H), drh(H);
        for (std::size_t j = steps; j-- > 0;) {
            if (j + 1 >= prefix_len) {
                const auto& p = probs_at[j];
                TokenId tgt = input[j + 1];
                for (std::size_t v = 0; v < V; ++v) dlogits[v] = -weight * p[v];
                dlogits[tgt] += weight;
                // output layer
                const StepCache& c = caches[j];
                std::vector<double> h_j(H);
                for (std::size_t i = 0; i < H; ++i)
                    h_j[i] = (1.0 - c.z[i]) * c.h_prev[i] + c.z[i] * c.hc[i];
                const float* Wo = params_.data() + off_wo_;
                for (std::size_t v = 0; v < V; ++v) g[off_bo_ + v] += dlogits[v];
                for (std::size_t i = 0; i < H; ++i) {
                    const float* row = Wo + i * V;
                    double acc = 0.0;
                    for (std::size_t v = 0; v < V; ++v) {
                        g[off_wo_ + i * V + v] += h_j[i] * dlogits[v];
                        acc += row[v] * dlogits[v];
                    }
                    dh[i] += acc;
                }
            }
            const StepCache& c = caches[j];
            // h = (1-z) h_prev + z hc
            for (std::size_t i = 0; i < H; ++i) {
                dz[i] = dh[i] * (c.hc[i] - c.h_prev[i]);
                dhc[i] = dh[i] * c.z[i];
            }
            std::vector<double> dh_prev(H);
            for (std::size_t i = 0; i < H; ++i) dh_prev[i] = dh[i] * (1.0 - c.z[i]);

            const float* emb = params_.data() + off_emb_ + std::size_t(c.tok) * E;
            std::vector<double> dx(E, 0.0);
            auto backprop_gate = [&](int gate, const std::vector<double>& dpre_g,
                                     const std::vector<double>& hin, std::vector<double>& dhin) {
                const float* W = params_.data() + gate_w(gate);
                const float* U = params_.data() + gate_u(gate);
                for (std::size_t i = 0; i < H; ++i) g[gate_b(gate) + i] += dpre_g[i];
                for (std::size_t i = 0; i < E; ++i) {
                    const float* row = W + i * H;
                    double acc = 0.0;
                    for (std::size_t jj = 0; jj < H; ++jj) {
                        g[gate_w(gate) + i * H + jj] += emb[i] * dpre_g[jj];
                        acc += row[jj] * dpre_g[jj];
                    }
                    dx[i] += acc;
                }
                for (std::size_t i = 0; i < H; ++i) {
                    const float* row = U + i * H;
                    double acc = 0.0;
                    for (std::size_t jj = 0; jj < H; ++jj) {
                        g[gate_u(gate) + i * H + jj] += hin[i] * dpre_g[jj];
                        acc += row[jj] * dpre_g[jj];
                    }
                    dhin[i] += acc;
                }
            };

            // candidate gate (tanh), input h is r .* h_prev
            for (std::size_t i = 0; i < H; ++i) dpre[i] = dhc[i] * (1.0 - c.hc[i] * c.hc[i]);
            std::vector<double> rh(H), drh_local(H, 0.0);
            for (std::size_t i = 0; i < H; ++i) rh[i] = c.r[i] * c.h_prev[i];
            backprop_gate(2, dpre, rh, drh_local);
            for (std::size_t i = 0; i < H; ++i) {
                dr[i] = drh_local[i] * c.h_prev[i];
                dh_prev[i] += drh_local[i] * c.r[i];
            }
            // update gate (sigmoid)
            for (std::size_t i = 0; i < H; ++i) dpre[i] = dz[i] * c.z[i] * (1.0 - c.z[i]);
            backprop_gate(0, dpre, c.h_prev, dh_prev);
            // reset gate (sigmoid)
            for (std::size_t i = 0; i < H; ++i) dpre[i] = dr[i] * c.r[i] * (1.0 - c.r[i]);
            backprop_gate(1, dpre, c.h_prev, dh_prev);

            for (std::size_t i = 0; i < E; ++i) g[off_emb_ + std::size_t(c.tok) * E + i] += dx[i];
            dh = std::move(dh_prev);
        }
        return res;
    }

    ModelConfig cfg_;
    std::vector<float> params_;
    std::size_t off_emb_ = 0, off_wo_ = 0, off_bo_ = 0, total_ = 0;
    std::size_t gate_off_[3][3] = {};
};

inline SeqModel init_model(const ModelConfig& cfg) { return SeqModel(cfg); }

struct GenLossResult {
    double loss = 0.0;
    std::vector<double> grad;
};

// Mean over the batch of the summed per-token negative log-likelihood.
inline GenLossResult gen_loss_and_grad(const SeqModel& model, const std::vector<GenSample>& batch) {
    if (batch.empty()) throw ConfigError("gen_loss_and_grad: empty batch");
    GenLossResult res;
    res.grad.assign(model.param_count(), 0.0);
    const double w = -1.0 / double(batch.size());
    for (const auto& s : batch) {
        double total = model.score_sequence_grad(s.query_tokens, s.prefix, s.target_tokens, w, res.grad);
        res.loss -= total / double(batch.size());
    }
    return res;
}

inline double gen_loss_value(const SeqModel& model, const std::vector<GenSample>& batch) {
    if (batch.empty()) throw ConfigError("gen_loss_value: empty batch");
    double loss = 0.0;
    for (const auto& s : batch)
        loss -= model.score_sequence(s.query_tokens, s.prefix, s.target_tokens).total / double(batch.size());
    return loss;
}

}  // namespace genret
