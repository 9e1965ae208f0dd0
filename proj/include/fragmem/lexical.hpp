#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fragmem/fragments.hpp"

namespace fragmem {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 statistics over a fragment store. Term frequencies are kept per
/// fragment (the persisted form); postings are derived from them.
class Bm25Index {
public:
    Bm25Index() = default;
    Bm25Index(std::vector<std::map<std::string, std::size_t>> term_freqs, Bm25Params params);

    std::size_t size() const { return doc_lengths_.size(); }
    double average_length() const { return avg_len_; }
    const Bm25Params& params() const { return params_; }
    std::size_t document_frequency(const std::string& term) const;
    std::size_t length(std::size_t doc) const { return doc_lengths_.at(doc); }
    const std::vector<std::map<std::string, std::size_t>>& term_freqs() const { return term_freqs_; }
    const std::map<std::string, std::size_t>& document_frequencies() const { return df_; }

    /// ln((N - df + 0.5) / (df + 0.5) + 1)
    double idf(const std::string& term) const;

    /// One score per fragment; fragments sharing no query token score exactly 0.
    std::vector<double> scores(const std::string& query) const;

    friend bool operator==(const Bm25Index& a, const Bm25Index& b) {
        return a.term_freqs_ == b.term_freqs_ && a.params_.k1 == b.params_.k1 && a.params_.b == b.params_.b;
    }

private:
    struct Posting {
        std::size_t doc;
        std::size_t tf;
    };

    std::vector<std::map<std::string, std::size_t>> term_freqs_;
    Bm25Params params_;
    std::vector<std::size_t> doc_lengths_;
    std::map<std::string, std::size_t> df_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_len_ = 0.0;
};

Bm25Index build_bm25(std::span<const Fragment> fragments, Bm25Params params = {});

inline std::vector<double> bm25_scores(const std::string& query, const Bm25Index& index) {
    return index.scores(query);
}

} // namespace fragmem
