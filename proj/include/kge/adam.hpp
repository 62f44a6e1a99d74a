#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kge/error.hpp"
#include "kge/model.hpp"

namespace kge {

// Sparse Adam over the two embedding tables. Moments cover the full tables
// but only rows present in the gradient accumulators are advanced; untouched
// rows and their moments are left as-is. Bias correction uses the global step
// counter.
class AdamState {
public:
    explicit AdamState(const ModelState& s)
        : m_entity_(s.entity_table().size(), 0.0),
          v_entity_(s.entity_table().size(), 0.0),
          m_relation_(s.relation_table().size(), 0.0),
          v_relation_(s.relation_table().size(), 0.0) {}

    std::int64_t steps() const { return step_; }

    void step(ModelState& s, const GradAccum& entity_grads, const GradAccum& relation_grads,
              double lr) {
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
        apply(entity_grads, s.entity_table(), m_entity_, v_entity_, lr, bc1, bc2);
        apply(relation_grads, s.relation_table(), m_relation_, v_relation_, lr, bc1, bc2);
    }

    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

private:
    void apply(const GradAccum& grads, std::vector<double>& table, std::vector<double>& m,
               std::vector<double>& v, double lr, double bc1, double bc2) {
        const auto width = static_cast<std::size_t>(grads.width());
        for (std::size_t i = 0; i < grads.size(); ++i) {
            const auto row = static_cast<std::size_t>(grads.row_id(i));
            const auto g = grads.row_values(i);
            const std::size_t base = row * width;
            for (std::size_t j = 0; j < width; ++j) {
                if (!std::isfinite(g[j]))
                    throw NumericError("non-finite gradient at row " + std::to_string(row) +
                                       " coordinate " + std::to_string(j));
                double& mj = m[base + j];
                double& vj = v[base + j];
                mj = beta1 * mj + (1.0 - beta1) * g[j];
                vj = beta2 * vj + (1.0 - beta2) * g[j] * g[j];
                table[base + j] -= lr * (mj / bc1) / (std::sqrt(vj / bc2) + eps);
            }
        }
    }

    std::int64_t step_ = 0;
    std::vector<double> m_entity_;
    std::vector<double> v_entity_;
    std::vector<double> m_relation_;
    std::vector<double> v_relation_;
};

}  // namespace kge
