#pragma once
// FM-index over the identifier corpus.
//
// Indexed text layout (forward coordinates): for each passage in store order,
// one unit per identifier source -- title (if any), body, then each
// pseudo-query -- where a unit is  [view marker] content-tokens [SEP].
// SEP never occurs inside a unit and every position belongs to exactly one
// unit, so unit membership of a match is a range check.
//
// The suffix array and BWT are built over the *reversed* token stream plus a
// terminal sentinel. A backward-search step on the reversed text extends a
// pattern by one token on the right, which is exactly the operation
// autoregressive decoding needs; the distinct symbols in the BWT range of a
// pattern are its valid successor tokens.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "genret/binio.hpp"
#include "genret/common.hpp"
#include "genret/corpus.hpp"
#include "genret/vocab.hpp"

namespace genret {

// Half-open row range [lo, hi) in the suffix array.
struct FmRange {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    bool empty() const { return lo >= hi; }
    std::uint64_t size() const { return empty() ? 0 : hi - lo; }
};

namespace detail {

// Prefix-doubling suffix array construction (Manber-Myers with counting
// sorts, O(n log n)). `text` must already be mapped so that 0 is a unique
// smallest sentinel at the last position.
inline std::vector<std::uint32_t> build_suffix_array(const std::vector<std::uint32_t>& text,
                                                     std::uint32_t alphabet) {
    const std::size_t n = text.size();
    std::vector<std::uint32_t> order(n), order2(n), rnk(n), rnk2(n);
    std::vector<std::uint64_t> bucket(std::max<std::size_t>(alphabet, n) + 2);

    auto counting_sort = [&](const std::vector<std::uint32_t>& in, std::vector<std::uint32_t>& out,
                             auto key, std::size_t max_key) {
        std::fill(bucket.begin(), bucket.begin() + std::ptrdiff_t(max_key + 2), 0);
        for (std::size_t i = 0; i < n; ++i) bucket[key(in[i]) + 1]++;
        for (std::size_t i = 1; i <= max_key + 1; ++i) bucket[i] += bucket[i - 1];
        for (std::size_t i = 0; i < n; ++i) out[bucket[key(in[i])]++] = in[i];
    };

    for (std::size_t i = 0; i < n; ++i) {
        order[i] = std::uint32_t(i);
        rnk[i] = text[i];
    }
    counting_sort(order, order2, [&](std::uint32_t i) { return rnk[i]; }, alphabet);
    std::swap(order, order2);
    {
        std::uint32_t r = 0;
        rnk2[order[0]] = 0;
        for (std::size_t j = 1; j < n; ++j) {
            if (text[order[j]] != text[order[j - 1]]) ++r;
            rnk2[order[j]] = r;
        }
        std::swap(rnk, rnk2);
    }

    for (std::size_t k = 1; k < n; k <<= 1) {
        auto second_key = [&](std::uint32_t i) -> std::uint32_t {
            return i + k < n ? rnk[i + k] + 1 : 0;
        };
        // Stable order by second key: suffixes with no second key first, then
        // suffixes i-k as i walks the previous order (already rank-sorted).
        std::size_t p = 0;
        for (std::size_t i = n - k; i < n; ++i) order2[p++] = std::uint32_t(i);
        for (std::size_t j = 0; j < n; ++j)
            if (order[j] >= k) order2[p++] = order[j] - std::uint32_t(k);
        counting_sort(order2, order, [&](std::uint32_t i) { return rnk[i]; }, n);

        std::uint32_t r = 0;
        rnk2[order[0]] = 0;
        for (std::size_t j = 1; j < n; ++j) {
            std::uint32_t a = order[j - 1], b = order[j];
            if (rnk[a] != rnk[b] || second_key(a) != second_key(b)) ++r;
            rnk2[b] = r;
        }
        std::swap(rnk, rnk2);
        if (r == n - 1) break;
    }
    return order;
}

}  // namespace detail

class FmIndex {
public:
    struct Location {
        std::uint32_t passage_ord;
        View view;
        std::string passage_id;
    };

    static constexpr char MAGIC[4] = {'G', 'R', 'I', 'X'};
    static constexpr std::uint32_t FORMAT_VERSION = 1;

    FmIndex() = default;

    static FmIndex build(const CorpusStore& store, const Vocab& vocab, std::uint32_t sa_rate = 32) {
        if (store.empty()) throw DataError("cannot index an empty corpus");
        if (sa_rate < 1) throw ConfigError("suffix-array sampling rate must be >= 1");

        FmIndex ix;
        ix.vocab_size_ = std::uint32_t(vocab.size());
        ix.vocab_hash_ = vocab.hash();
        ix.sa_rate_ = sa_rate;

        // Forward indexed text: units of every passage in store order.
        std::vector<TokenId> text;
        auto add_unit = [&](std::uint32_t ord, View view, const std::string& content) {
            auto tokens = vocab.encode(content);
            if (tokens.empty()) return;
            ix.unit_starts_.push_back(text.size());
            ix.unit_views_.push_back(std::uint8_t(view));
            ix.unit_passage_.push_back(ord);
            text.push_back(view_marker(view));
            text.insert(text.end(), tokens.begin(), tokens.end());
            text.push_back(SEP_ID);
        };
        for (std::uint32_t ord = 0; ord < store.size(); ++ord) {
            const Passage& p = store.at(ord);
            if (!p.title.empty()) add_unit(ord, View::Title, p.title);
            add_unit(ord, View::Substring, p.body);
            for (const auto& pq : p.pseudo_queries)
                if (!pq.empty()) add_unit(ord, View::PseudoQuery, pq);
            ix.passage_ids_.push_back(p.id);
        }
        ix.text_len_ = text.size();

        // Reversed text + sentinel, mapped to sort order (sentinel smallest).
        const std::uint64_t n = ix.text_len_ + 1;
        std::vector<std::uint32_t> mapped(n);
        for (std::uint64_t i = 0; i < ix.text_len_; ++i)
            mapped[i] = text[ix.text_len_ - 1 - i] + 1;
        mapped[n - 1] = 0;
        auto sa = detail::build_suffix_array(mapped, ix.vocab_size_ + 1);

        const std::uint32_t sentinel = ix.vocab_size_;
        ix.bwt_.resize(n);
        for (std::uint64_t row = 0; row < n; ++row) {
            std::uint64_t pos = sa[row];
            std::uint32_t m = mapped[(pos + n - 1) % n];
            ix.bwt_[row] = m == 0 ? sentinel : m - 1;
            if (pos % sa_rate == 0) {
                ix.sample_rows_.push_back(std::uint32_t(row));
                ix.sample_vals_.push_back(std::uint32_t(pos));
            }
        }
        // sample_rows_ must be sorted for lookup; rows were visited in order.
        ix.finish_build();
        return ix;
    }

    std::uint64_t text_length() const { return text_len_; }
    std::size_t unit_count() const { return unit_starts_.size(); }
    std::uint32_t vocab_size() const { return vocab_size_; }
    std::uint64_t vocab_hash() const { return vocab_hash_; }
    std::uint32_t sa_rate() const { return sa_rate_; }

    FmRange full_range() const { return {0, bwt_.size()}; }

    // One backward-search step on the reversed text == append `tok` to the
    // pattern in forward coordinates.
    FmRange extend(FmRange range, TokenId tok) const {
        if (range.empty() || tok >= vocab_size_) return {0, 0};
        std::uint64_t base = C_[tok + 1];
        return {base + occ(tok, range.lo), base + occ(tok, range.hi)};
    }

    FmRange range_of(const std::vector<TokenId>& pattern) const {
        FmRange r = full_range();
        for (TokenId t : pattern) {
            r = extend(r, t);
            if (r.empty()) break;
        }
        return r;
    }

    // Exact occurrence count; the empty pattern counts the whole text.
    std::uint64_t count(const std::vector<TokenId>& pattern) const {
        if (pattern.empty()) return text_len_;
        return range_of(pattern).size();
    }

    // Distinct tokens that can follow the pattern, with occurrence counts,
    // ascending token id. The sentinel is never reported.
    std::vector<std::pair<TokenId, std::uint64_t>> successors_in_range(FmRange range) const {
        std::vector<std::pair<TokenId, std::uint64_t>> out;
        if (range.empty()) return out;
        if (range.size() <= 2ull * occ_block_) {
            std::map<TokenId, std::uint64_t> counts;
            for (std::uint64_t row = range.lo; row < range.hi; ++row)
                if (bwt_[row] != vocab_size_) counts[bwt_[row]]++;
            out.assign(counts.begin(), counts.end());
        } else {
            for (TokenId t = 0; t < vocab_size_; ++t) {
                std::uint64_t c = occ(t, range.hi) - occ(t, range.lo);
                if (c) out.emplace_back(t, c);
            }
        }
        return out;
    }

    std::vector<std::pair<TokenId, std::uint64_t>> successors(const std::vector<TokenId>& prefix) const {
        return successors_in_range(range_of(prefix));
    }

    // Units containing at least one occurrence of the pattern wholly inside
    // the unit, deduplicated, ordered by (passage ordinal, view). Occurrences
    // spanning a unit boundary are dropped; the empty pattern locates nothing.
    std::vector<Location> locate(const std::vector<TokenId>& pattern) const {
        std::vector<Location> out;
        if (pattern.empty()) return out;
        FmRange r = range_of(pattern);
        if (r.empty()) return out;
        const std::uint64_t m = pattern.size();
        std::set<std::pair<std::uint32_t, std::uint8_t>> units;
        for (std::uint64_t row = r.lo; row < r.hi; ++row) {
            std::uint64_t rev_pos = resolve_position(row);
            std::uint64_t fwd = text_len_ - rev_pos - m;  // rev_pos <= text_len_ - m
            std::size_t u = unit_of(fwd);
            std::uint64_t unit_end = u + 1 < unit_starts_.size() ? unit_starts_[u + 1] : text_len_;
            if (fwd + m <= unit_end) units.emplace(unit_passage_[u], unit_views_[u]);
        }
        for (auto [ord, view] : units)
            out.push_back({ord, View(view), passage_ids_[ord]});
        return out;
    }

    // Inverse BWT; returns the forward indexed text. The walk starts at row 0
    // (the sentinel-only suffix of the reversed text), whose BWT symbol is the
    // last reversed symbol, i.e. the first forward one.
    std::vector<TokenId> reconstruct_text() const {
        std::vector<TokenId> out;
        out.reserve(text_len_);
        std::uint64_t row = 0;
        for (std::uint64_t i = 0; i < text_len_; ++i) {
            out.push_back(bwt_[row]);
            row = lf(row);
        }
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw DataError("cannot write index file: " + path);
        os.write(MAGIC, 4);
        binio::write_pod<std::uint32_t>(os, FORMAT_VERSION);
        binio::write_pod<std::uint64_t>(os, vocab_hash_);
        binio::write_pod<std::uint32_t>(os, vocab_size_);
        binio::write_pod<std::uint64_t>(os, text_len_);
        binio::write_pod<std::uint32_t>(os, sa_rate_);
        binio::write_pod<std::uint32_t>(os, occ_block_);
        binio::write_vec(os, bwt_);
        binio::write_vec(os, occ_ckpt_);
        binio::write_vec(os, C_);
        binio::write_vec(os, sample_rows_);
        binio::write_vec(os, sample_vals_);
        binio::write_vec(os, unit_starts_);
        binio::write_vec(os, unit_views_);
        binio::write_vec(os, unit_passage_);
        binio::write_pod<std::uint64_t>(os, passage_ids_.size());
        for (const auto& id : passage_ids_) binio::write_string(os, id);
        if (!os) throw DataError("failed writing index file: " + path);
    }

    static FmIndex load(const std::string& path, const Vocab& vocab) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw DataError("cannot open index file: " + path);
        char magic[4];
        is.read(magic, 4);
        if (!is || std::memcmp(magic, MAGIC, 4) != 0)
            throw DataError("not an index file: " + path);
        auto version = binio::read_pod<std::uint32_t>(is);
        if (version != FORMAT_VERSION)
            throw DataError("unsupported index version " + std::to_string(version));
        FmIndex ix;
        ix.vocab_hash_ = binio::read_pod<std::uint64_t>(is);
        if (ix.vocab_hash_ != vocab.hash())
            throw DataError("index vocabulary hash mismatch: " + path);
        ix.vocab_size_ = binio::read_pod<std::uint32_t>(is);
        ix.text_len_ = binio::read_pod<std::uint64_t>(is);
        ix.sa_rate_ = binio::read_pod<std::uint32_t>(is);
        ix.occ_block_ = binio::read_pod<std::uint32_t>(is);
        ix.bwt_ = binio::read_vec<std::uint32_t>(is);
        ix.occ_ckpt_ = binio::read_vec<std::uint64_t>(is);
        ix.C_ = binio::read_vec<std::uint64_t>(is);
        ix.sample_rows_ = binio::read_vec<std::uint32_t>(is);
        ix.sample_vals_ = binio::read_vec<std::uint32_t>(is);
        ix.unit_starts_ = binio::read_vec<std::uint64_t>(is);
        ix.unit_views_ = binio::read_vec<std::uint8_t>(is);
        ix.unit_passage_ = binio::read_vec<std::uint32_t>(is);
        auto n_ids = binio::read_pod<std::uint64_t>(is);
        ix.passage_ids_.reserve(n_ids);
        for (std::uint64_t i = 0; i < n_ids; ++i) ix.passage_ids_.push_back(binio::read_string(is));
        return ix;
    }

private:
    void finish_build() {
        const std::uint64_t n = bwt_.size();
        // Occ checkpoint block: 64 rows unless the alphabet would blow the
        // table past ~32M entries.
        occ_block_ = 64;
        while ((n / occ_block_ + 1) * (std::uint64_t(vocab_size_) + 1) > (32ull << 20))
            occ_block_ *= 2;
        const std::uint64_t stride = vocab_size_ + 1;
        occ_ckpt_.assign((n / occ_block_ + 1) * stride, 0);
        std::vector<std::uint64_t> running(stride, 0);
        for (std::uint64_t row = 0; row < n; ++row) {
            if (row % occ_block_ == 0)
                std::copy(running.begin(), running.end(), occ_ckpt_.begin() + std::ptrdiff_t(row / occ_block_ * stride));
            running[bwt_[row]]++;
        }
        if (n % occ_block_ == 0)
            std::copy(running.begin(), running.end(), occ_ckpt_.begin() + std::ptrdiff_t(n / occ_block_ * stride));
        // C_[k] = number of symbols whose sort order < k; order 0 is the
        // sentinel, order c+1 is token c.
        C_.assign(vocab_size_ + 2, 0);
        C_[1] = 1;  // one sentinel
        for (TokenId t = 0; t < vocab_size_; ++t) C_[t + 2] = running[t];
        for (std::size_t k = 1; k < C_.size(); ++k) C_[k] += C_[k - 1];
    }

    // Count of symbol `tok` in bwt[0, row).
    std::uint64_t occ(std::uint32_t tok, std::uint64_t row) const {
        const std::uint64_t stride = vocab_size_ + 1;
        std::uint64_t block = row / occ_block_;
        std::uint64_t c = occ_ckpt_[block * stride + tok];
        for (std::uint64_t i = block * occ_block_; i < row; ++i)
            if (bwt_[i] == tok) ++c;
        return c;
    }

    std::uint64_t lf(std::uint64_t row) const {
        std::uint32_t sym = bwt_[row];
        std::uint64_t base = sym == vocab_size_ ? C_[0] : C_[sym + 1];
        return base + occ(sym, row);
    }

    // Text position (in reversed coordinates) of the suffix at `row`:
    // LF-walk until a sampled row, each step moving one position left.
    std::uint64_t resolve_position(std::uint64_t row) const {
        std::uint64_t steps = 0;
        for (;;) {
            auto it = std::lower_bound(sample_rows_.begin(), sample_rows_.end(), std::uint32_t(row));
            if (it != sample_rows_.end() && *it == row)
                return sample_vals_[std::size_t(it - sample_rows_.begin())] + steps;
            row = lf(row);
            ++steps;
        }
    }

    std::size_t unit_of(std::uint64_t fwd_pos) const {
        auto it = std::upper_bound(unit_starts_.begin(), unit_starts_.end(), fwd_pos);
        return std::size_t(it - unit_starts_.begin()) - 1;
    }

    std::uint64_t text_len_ = 0;   // forward text length, sentinel excluded
    std::uint32_t vocab_size_ = 0; // sentinel symbol value == vocab_size_
    std::uint64_t vocab_hash_ = 0;
    std::uint32_t sa_rate_ = 32;
    std::uint32_t occ_block_ = 64;
    std::vector<std::uint32_t> bwt_;
    std::vector<std::uint64_t> occ_ckpt_;
    std::vector<std::uint64_t> C_;
    std::vector<std::uint32_t> sample_rows_;
    std::vector<std::uint32_t> sample_vals_;
    std::vector<std::uint64_t> unit_starts_;   // forward unit start offsets
    std::vector<std::uint8_t> unit_views_;
    std::vector<std::uint32_t> unit_passage_;
    std::vector<std::string> passage_ids_;
};

}  // namespace genret
