#include "reportminer/rng.hpp"

#include <cmath>

namespace reportminer {

AliasSampler::AliasSampler(const std::vector<double>& probs)
    : prob_(probs.size()), alias_(probs.size()) {
    if (probs.empty()) {
        throw std::invalid_argument("AliasSampler: empty distribution");
    }
    const std::size_t n = probs.size();
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("AliasSampler: invalid probability");
        }
        total += p;
    }
    if (total <= 0.0) {
        throw std::invalid_argument("AliasSampler: zero total mass");
    }
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = probs[i] / total * n;

    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        std::size_t s = small.back();
        small.pop_back();
        std::size_t l = large.back();
        prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (std::size_t i : large) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
    for (std::size_t i : small) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
}

}  // namespace reportminer
