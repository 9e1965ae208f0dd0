#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fragmem/relations.hpp"

namespace fragmem {

struct ScoreSet {
    std::vector<double> s_ind;
    std::vector<double> s_env;
    std::vector<double> s_rel;
    double alpha = 0.0;
};

struct TopKSelection {
    std::vector<std::size_t> indices;  // rank order
    std::vector<double> scores;        // s_rel at selection
    bool clamped = false;              // requested K exceeded N
};

/// s_env[i] = sum_j w_ij s_ind[j] / sum_j w_ij over stored neighbours j != i;
/// 0 when fragment i has no stored neighbours.
std::vector<double> environment_scores(std::span<const double> s_ind, const RelationMatrix& w);

/// s_ind + alpha * s_env, elementwise.
std::vector<double> relation_aware_scores(std::span<const double> s_ind, std::span<const double> s_env, double alpha);

ScoreSet score_all(std::vector<double> s_ind, const RelationMatrix& w, double alpha);

/// Largest scores first; ties go to the smaller index. K > N is clamped.
TopKSelection top_k(std::span<const double> scores, std::size_t k);

} // namespace fragmem
