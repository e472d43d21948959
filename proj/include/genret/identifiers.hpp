#pragma once
// Multiview identifier extraction and generation-phase training samples.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "genret/corpus.hpp"
#include "genret/vocab.hpp"

namespace genret {

struct Identifier {
    View view;
    std::string text;
    std::vector<TokenId> tokens;  // encode(text)
};

struct GenSample {
    std::vector<TokenId> query_tokens;
    TokenId prefix;                      // view marker token
    std::vector<TokenId> target_tokens;  // identifier tokens, EOS-terminated
};

struct IdentifierConfig {
    std::size_t substring_min_len = 10;  // span length bounds, in tokens
    std::size_t substring_max_len = 40;
    bool pseudo_query_fallback = false;  // use first body sentence when none stored
};

namespace detail {

// Span units for substring sampling: char mode works on bytes, word mode on words.
inline std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

inline std::string first_sentence(const std::string& body) {
    auto end = body.find_first_of(".!?");
    if (end == std::string::npos) return body;
    return body.substr(0, end + 1);
}

}  // namespace detail

inline Identifier make_identifier(View view, std::string text, const Vocab& vocab) {
    Identifier id;
    id.view = view;
    id.tokens = vocab.encode(text);
    id.text = std::move(text);
    return id;
}

// Title view yields the single title (k ignored). Substring view samples k
// spans uniformly from the body with length drawn from [min,max]; a body
// shorter than the minimum yields one identifier equal to the whole body.
// PseudoQuery view yields up to k stored pseudo-queries.
inline std::vector<Identifier> extract_identifiers(const Passage& p, View view, std::size_t k,
                                                   std::mt19937& rng, const IdentifierConfig& cfg,
                                                   const Vocab& vocab) {
    if (k < 1) throw ConfigError("extract_identifiers: k must be >= 1");
    std::vector<Identifier> out;
    switch (view) {
        case View::Title: {
            if (!p.title.empty()) out.push_back(make_identifier(View::Title, p.title, vocab));
            break;
        }
        case View::Substring: {
            if (vocab.mode() == TokenMode::Char) {
                const std::string& body = p.body;
                if (body.size() < cfg.substring_min_len) {
                    out.push_back(make_identifier(View::Substring, body, vocab));
                    break;
                }
                for (std::size_t i = 0; i < k; ++i) {
                    std::size_t max_len = std::min(cfg.substring_max_len, body.size());
                    std::uniform_int_distribution<std::size_t> len_d(cfg.substring_min_len, max_len);
                    std::size_t len = len_d(rng);
                    std::uniform_int_distribution<std::size_t> start_d(0, body.size() - len);
                    out.push_back(make_identifier(View::Substring, body.substr(start_d(rng), len), vocab));
                }
            } else {
                auto words = detail::split_words(p.body);
                auto join = [&](std::size_t start, std::size_t len) {
                    std::string s;
                    for (std::size_t i = 0; i < len; ++i) {
                        if (i) s += ' ';
                        s += words[start + i];
                    }
                    return s;
                };
                if (words.size() < cfg.substring_min_len) {
                    out.push_back(make_identifier(View::Substring, join(0, words.size()), vocab));
                    break;
                }
                for (std::size_t i = 0; i < k; ++i) {
                    std::size_t max_len = std::min(cfg.substring_max_len, words.size());
                    std::uniform_int_distribution<std::size_t> len_d(cfg.substring_min_len, max_len);
                    std::size_t len = len_d(rng);
                    std::uniform_int_distribution<std::size_t> start_d(0, words.size() - len);
                    out.push_back(make_identifier(View::Substring, join(start_d(rng), len), vocab));
                }
            }
            break;
        }
        case View::PseudoQuery: {
            std::vector<std::string> pool = p.pseudo_queries;
            if (pool.empty() && cfg.pseudo_query_fallback)
                pool.push_back(detail::first_sentence(p.body));
            if (pool.size() <= k) {
                for (auto& t : pool) out.push_back(make_identifier(View::PseudoQuery, t, vocab));
            } else {
                std::vector<std::size_t> idx(pool.size());
                for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                std::shuffle(idx.begin(), idx.end(), rng);
                idx.resize(k);
                std::sort(idx.begin(), idx.end());
                for (std::size_t i : idx) out.push_back(make_identifier(View::PseudoQuery, pool[i], vocab));
            }
            break;
        }
    }
    return out;
}

// One sample per available view (views with no source text are skipped),
// shuffled; each target is EOS-terminated and carries its view marker.
inline std::vector<GenSample> make_gen_samples(const std::string& query, const Passage& positive,
                                               std::mt19937& rng, const IdentifierConfig& cfg,
                                               const Vocab& vocab) {
    std::vector<GenSample> samples;
    auto query_tokens = vocab.encode(query);
    auto add = [&](View view) {
        auto ids = extract_identifiers(positive, view, 1, rng, cfg, vocab);
        if (ids.empty() || ids.front().tokens.empty()) return;
        GenSample s;
        s.query_tokens = query_tokens;
        s.prefix = view_marker(view);
        s.target_tokens = ids.front().tokens;
        s.target_tokens.push_back(EOS_ID);
        samples.push_back(std::move(s));
    };
    add(View::Title);
    add(View::Substring);
    add(View::PseudoQuery);
    std::shuffle(samples.begin(), samples.end(), rng);
    return samples;
}

}  // namespace genret
