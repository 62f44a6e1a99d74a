#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "kge/error.hpp"

namespace kge {

struct LossGrad {
    double loss = 0.0;
    double d_positive = 0.0;
    std::vector<double> d_negatives;
};

namespace detail {

inline double log_sigmoid(double x) {
    return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace detail

// Softmax cross-entropy of the positive against the group formed by itself
// and its negatives:  loss = -f(t+) + log(exp f(t+) + sum_j exp f(t_j-)).
// Gradients over (positive, negatives) sum to zero.
inline LossGrad loss_multiclass_nll(double positive_score, std::span<const double> negative_scores) {
    if (negative_scores.empty()) throw DataError("multiclass NLL needs at least one negative");
    double m = positive_score;
    for (double s : negative_scores) m = std::max(m, s);
    double sum = std::exp(positive_score - m);
    for (double s : negative_scores) sum += std::exp(s - m);
    const double lse = m + std::log(sum);

    LossGrad out;
    out.loss = lse - positive_score;
    out.d_positive = std::exp(positive_score - lse) - 1.0;
    out.d_negatives.resize(negative_scores.size());
    for (std::size_t j = 0; j < negative_scores.size(); ++j)
        out.d_negatives[j] = std::exp(negative_scores[j] - lse);
    return out;
}

// Negative log-sigmoid loss with margin, each negative weighted by a softmax
// over the model's own scores of the negatives:
//   loss = -log sig(margin + f(t+)) - sum_j w_j log sig(-margin - f(t_j-)),
//   w_j = softmax(temperature * f(t_j-)).
// The weights are treated as constants; no gradient flows through them.
inline LossGrad loss_self_adversarial(double positive_score, std::span<const double> negative_scores,
                                      double temperature, double margin) {
    if (negative_scores.empty()) throw DataError("self-adversarial loss needs at least one negative");
    if (temperature < 0.0) throw ConfigError("adversarial temperature must be >= 0");

    std::vector<double> weights(negative_scores.size());
    double m = -std::numeric_limits<double>::infinity();
    for (double s : negative_scores) m = std::max(m, temperature * s);
    double sum = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        weights[j] = std::exp(temperature * negative_scores[j] - m);
        sum += weights[j];
    }
    for (auto& w : weights) w /= sum;

    LossGrad out;
    out.loss = -detail::log_sigmoid(margin + positive_score);
    out.d_positive = detail::sigmoid(margin + positive_score) - 1.0;
    out.d_negatives.resize(negative_scores.size());
    for (std::size_t j = 0; j < weights.size(); ++j) {
        out.loss -= weights[j] * detail::log_sigmoid(-margin - negative_scores[j]);
        out.d_negatives[j] = weights[j] * detail::sigmoid(margin + negative_scores[j]);
    }
    return out;
}

inline std::vector<double> self_adversarial_weights(std::span<const double> negative_scores,
                                                    double temperature) {
    std::vector<double> weights(negative_scores.size());
    double m = -std::numeric_limits<double>::infinity();
    for (double s : negative_scores) m = std::max(m, temperature * s);
    double sum = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        weights[j] = std::exp(temperature * negative_scores[j] - m);
        sum += weights[j];
    }
    for (auto& w : weights) w /= sum;
    return weights;
}

}  // namespace kge
