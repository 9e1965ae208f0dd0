#include "fragmem/lexical.hpp"

#include <cmath>

#include "fragmem/error.hpp"
#include "fragmem/text.hpp"

namespace fragmem {

Bm25Index::Bm25Index(std::vector<std::map<std::string, std::size_t>> term_freqs, Bm25Params params)
    : term_freqs_(std::move(term_freqs)), params_(params) {
    if (params_.k1 < 0.0 || params_.b < 0.0 || params_.b > 1.0) {
        throw ConfigError("BM25 requires k1 >= 0 and 0 <= b <= 1");
    }
    doc_lengths_.reserve(term_freqs_.size());
    std::size_t total = 0;
    for (std::size_t doc = 0; doc < term_freqs_.size(); ++doc) {
        std::size_t len = 0;
        for (const auto& [term, tf] : term_freqs_[doc]) {
            len += tf;
            ++df_[term];
            postings_[term].push_back({doc, tf});
        }
        doc_lengths_.push_back(len);
        total += len;
    }
    avg_len_ = term_freqs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(term_freqs_.size());
}

std::size_t Bm25Index::document_frequency(const std::string& term) const {
    const auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
}

double Bm25Index::idf(const std::string& term) const {
    const double n = static_cast<double>(size());
    const double df = static_cast<double>(document_frequency(term));
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

std::vector<double> Bm25Index::scores(const std::string& query) const {
    std::vector<double> out(size(), 0.0);
    const double avg = avg_len_ > 0.0 ? avg_len_ : 1.0;
    for (const auto& term : code_tokens(query)) {
        const auto it = postings_.find(term);
        if (it == postings_.end()) {
            continue;
        }
        const double w = idf(term);
        for (const auto& p : it->second) {
            const double tf = static_cast<double>(p.tf);
            const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_lengths_[p.doc]) / avg;
            out[p.doc] += w * tf * (params_.k1 + 1.0) / (tf + params_.k1 * norm);
        }
    }
    return out;
}

Bm25Index build_bm25(std::span<const Fragment> fragments, Bm25Params params) {
    if (fragments.empty()) {
        throw EmptyContextError("cannot build a BM25 index over zero fragments");
    }
    std::vector<std::map<std::string, std::size_t>> tfs;
    tfs.reserve(fragments.size());
    for (const auto& frag : fragments) {
        std::map<std::string, std::size_t> counts;
        for (auto& tok : code_tokens(frag.text)) {
            ++counts[std::move(tok)];
        }
        tfs.push_back(std::move(counts));
    }
    return Bm25Index(std::move(tfs), params);
}

} // namespace fragmem
