#include "fragmem/scoring.hpp"

#include <algorithm>
#include <numeric>

#include "fragmem/error.hpp"

namespace fragmem {

std::vector<double> environment_scores(std::span<const double> s_ind, const RelationMatrix& w) {
    if (s_ind.size() != w.n()) {
        throw ConfigError("environment_scores: " + std::to_string(s_ind.size()) + " scores for a " +
                          std::to_string(w.n()) + "-fragment relation matrix");
    }
    std::vector<double> env(s_ind.size(), 0.0);
    for (std::size_t i = 0; i < s_ind.size(); ++i) {
        double num = 0.0;
        double den = 0.0;
        for (const auto& [j, weight] : w.row(i)) {
            if (weight < 0.0) {
                throw MatrixContractError("negative relation weight at (" + std::to_string(i) + ", " +
                                          std::to_string(j) + ")");
            }
            num += weight * s_ind[j];
            den += weight;
        }
        env[i] = den > 0.0 ? num / den : 0.0;
    }
    return env;
}

std::vector<double> relation_aware_scores(std::span<const double> s_ind, std::span<const double> s_env, double alpha) {
    if (s_ind.size() != s_env.size()) {
        throw ConfigError("relation_aware_scores: length mismatch");
    }
    if (!(alpha >= 0.0)) {
        throw ConfigError("alpha must be >= 0");
    }
    std::vector<double> out(s_ind.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = s_ind[i] + alpha * s_env[i];
    }
    return out;
}

ScoreSet score_all(std::vector<double> s_ind, const RelationMatrix& w, double alpha) {
    ScoreSet set;
    set.alpha = alpha;
    set.s_env = environment_scores(s_ind, w);
    set.s_rel = relation_aware_scores(s_ind, set.s_env, alpha);
    set.s_ind = std::move(s_ind);
    return set;
}

TopKSelection top_k(std::span<const double> scores, std::size_t k) {
    if (k == 0) {
        throw ConfigError("K must be >= 1");
    }
    TopKSelection sel;
    if (k > scores.size()) {
        sel.clamped = true;
        k = scores.size();
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
    idx.resize(k);
    sel.indices = std::move(idx);
    sel.scores.reserve(k);
    for (const auto i : sel.indices) sel.scores.push_back(scores[i]);
    return sel;
}

} // namespace fragmem
