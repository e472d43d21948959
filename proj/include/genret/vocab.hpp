#pragma once
// Token vocabulary shared by the corpus index and the sequence model.
//
// Special tokens occupy fixed ids [0, NUM_SPECIALS); content tokens follow.
// Character mode maps each byte of corpus text to a token; word mode maps
// whitespace-separated words (decode joins with single spaces, so only
// space-normalized text round-trips).

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "genret/common.hpp"
#include "genret/corpus.hpp"

namespace genret {

constexpr TokenId BOS_ID = 0;
constexpr TokenId EOS_ID = 1;
constexpr TokenId SEP_ID = 2;
constexpr TokenId UNK_ID = 3;
constexpr TokenId TITLE_MARK_ID = 4;
constexpr TokenId SUBSTR_MARK_ID = 5;
constexpr TokenId PSEUDOQ_MARK_ID = 6;
constexpr TokenId NUM_SPECIALS = 7;

inline TokenId view_marker(View v) {
    switch (v) {
        case View::Title: return TITLE_MARK_ID;
        case View::Substring: return SUBSTR_MARK_ID;
        case View::PseudoQuery: return PSEUDOQ_MARK_ID;
    }
    return SUBSTR_MARK_ID;
}

inline bool is_special(TokenId t) { return t < NUM_SPECIALS; }

enum class TokenMode : std::uint8_t { Char = 0, Word = 1 };

struct VocabConfig {
    TokenMode mode = TokenMode::Char;
};

class Vocab {
public:
    Vocab() = default;
    Vocab(TokenMode mode, std::vector<std::string> content_tokens)
        : mode_(mode), content_(std::move(content_tokens)) {
        for (std::size_t i = 0; i < content_.size(); ++i)
            content_ids_[content_[i]] = NUM_SPECIALS + TokenId(i);
    }

    TokenMode mode() const { return mode_; }
    std::size_t size() const { return NUM_SPECIALS + content_.size(); }

    TokenId token_id(const std::string& tok) const {
        auto it = content_ids_.find(tok);
        return it == content_ids_.end() ? UNK_ID : it->second;
    }

    const std::string& token_text(TokenId id) const {
        static const std::string specials[NUM_SPECIALS] = {
            "<bos>", "<eos>", "<sep>", "<unk>", "<title>", "<substring>", "<pseudo_query>"};
        if (id < NUM_SPECIALS) return specials[id];
        return content_.at(id - NUM_SPECIALS);
    }

    std::vector<TokenId> encode(const std::string& text) const {
        std::vector<TokenId> out;
        if (mode_ == TokenMode::Char) {
            out.reserve(text.size());
            for (char c : text) out.push_back(token_id(std::string(1, c)));
        } else {
            std::istringstream ss(text);
            std::string w;
            while (ss >> w) out.push_back(token_id(w));
        }
        return out;
    }

    std::string decode(const std::vector<TokenId>& tokens) const {
        std::string out;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (mode_ == TokenMode::Word && i > 0) out += ' ';
            out += token_text(tokens[i]);
        }
        return out;
    }

    // Hash over mode and the ordered content token list; ties index and
    // checkpoint files to the vocabulary they were built with.
    std::uint64_t hash() const {
        std::uint64_t h = fnv1a64_u64(static_cast<std::uint64_t>(mode_), 0xcbf29ce484222325ull);
        for (const auto& t : content_) {
            h = fnv1a64(t, h);
            h = fnv1a64("\x1f", h);
        }
        return h;
    }

private:
    TokenMode mode_ = TokenMode::Char;
    std::vector<std::string> content_;
    std::map<std::string, TokenId> content_ids_;
};

inline Vocab build_vocab(const CorpusStore& store, const VocabConfig& cfg = {}) {
    if (store.empty()) throw DataError("cannot build vocabulary from an empty corpus");
    std::set<std::string> seen;
    auto absorb = [&](const std::string& text) {
        if (cfg.mode == TokenMode::Char) {
            for (char c : text) seen.insert(std::string(1, c));
        } else {
            std::istringstream ss(text);
            std::string w;
            while (ss >> w) seen.insert(w);
        }
    };
    for (const auto& p : store.passages()) {
        absorb(p.title);
        absorb(p.body);
        for (const auto& pq : p.pseudo_queries) absorb(pq);
    }
    return Vocab(cfg.mode, std::vector<std::string>(seen.begin(), seen.end()));
}

}  // namespace genret
