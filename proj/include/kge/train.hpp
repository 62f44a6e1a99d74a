#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kge/adam.hpp"
#include "kge/classes.hpp"
#include "kge/error.hpp"
#include "kge/eval.hpp"
#include "kge/kg.hpp"
#include "kge/loss.hpp"
#include "kge/model.hpp"
#include "kge/rng.hpp"
#include "kge/sampler.hpp"

namespace kge {

enum class LossKind : std::uint8_t { multiclass_nll, self_adversarial };

inline const char* to_string(LossKind k) {
    return k == LossKind::multiclass_nll ? "multiclass_nll" : "self_adversarial";
}

inline LossKind loss_kind_from_string(const std::string& name) {
    if (name == "multiclass_nll") return LossKind::multiclass_nll;
    if (name == "self_adversarial") return LossKind::self_adversarial;
    throw ConfigError("unknown loss '" + name + "' (multiclass_nll|self_adversarial)");
}

struct TrainConfig {
    LossKind loss = LossKind::multiclass_nll;
    double adversarial_temperature = 1.0;
    double margin = 6.0;
    double lr = 1e-3;
    int batch_size = 512;
    int epochs = 100;
    int reg_p = 3;
    double reg_lambda = 0.0;
    int patience = 10;               // non-improving validation rounds before stopping
    int validation_frequency = 25;   // epochs between validation rounds
    SamplerConfig sampler;
    std::uint64_t seed = 42;
    bool log_timing = false;         // timing column breaks bit-identical logs
    EvalConfig eval;
    std::function<void(const std::string&)> on_log;  // called per log line when set

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("training.lr must be > 0");
        if (batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("training.epochs must be >= 1");
        if (reg_p != 2 && reg_p != 3) throw ConfigError("training.reg_p must be 2 or 3");
        if (reg_lambda < 0.0) throw ConfigError("training.reg_lambda must be >= 0");
        if (patience < 1) throw ConfigError("training.patience must be >= 1");
        if (validation_frequency < 1) throw ConfigError("training.validation_frequency must be >= 1");
        if (adversarial_temperature < 0.0)
            throw ConfigError("training.adversarial_temperature must be >= 0");
        sampler.validate();
        eval.validate();
    }
};

struct TrainResult {
    ModelState best_state;      // float32-quantized snapshot from the best validation round
    double best_valid_mrr = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
    bool stopped_early = false;
    std::int64_t steps = 0;
    double mean_ms_per_step = 0.0;
    std::vector<double> epoch_losses;       // per-example objective per epoch
    std::vector<std::string> log;           // header plus one line per epoch
};

namespace detail {

inline std::string log_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

// Minibatch training with mixed negative sampling and early stopping on
// filtered validation MRR. Validation runs on a float32-quantized snapshot,
// so checkpoints written from best_state reproduce the logged metrics. Every
// random choice flows from config.seed and config.sampler.seed, and negatives
// are keyed per positive, so results do not depend on batch boundaries and
// reruns are bit-identical.
inline TrainResult train(const KnowledgeGraph& graph, const ClassIndex& classes, ModelKind kind,
                         int dim, const TrainConfig& config) {
    config.validate();
    if (graph.train().empty()) throw DataError("training requires a non-empty train split");
    if (graph.valid().empty()) throw DataError("training requires a non-empty validation split");

    ModelState state = ModelState::init(kind, dim, graph.num_entities(), graph.num_relations(),
                                        config.seed);
    AdamState adam(state);
    GradAccum entity_grads, relation_grads;

    TrainResult result;
    auto emit = [&](const std::string& line) {
        result.log.push_back(line);
        if (config.on_log) config.on_log(line);
    };
    emit("epoch\ttrain_loss\tvalid_mrr\thits@1\thits@3\thits@10\tms_per_step");

    const auto& train_split = graph.train();
    std::vector<std::size_t> order(train_split.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Triple> batch;
    std::vector<double> neg_scores;

    double best = -std::numeric_limits<double>::infinity();
    int rounds_without_improvement = 0;
    bool validated_ever = false;
    double total_ms = 0.0;

    auto run_validation = [&](int epoch) {
        const ModelState snapshot = state.quantized();
        const EvalReport report = evaluate(snapshot, graph.valid(), graph, config.eval);
        validated_ever = true;
        if (report.overall.mrr > best) {
            best = report.overall.mrr;
            result.best_state = snapshot;
            result.best_valid_mrr = report.overall.mrr;
            result.best_epoch = epoch;
            rounds_without_improvement = 0;
        } else {
            ++rounds_without_improvement;
        }
        return report;
    };

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(derive_seed(config.seed, 0x53485546ULL),  // "SHUF"
                                    static_cast<std::uint64_t>(epoch)));
        shuffle(order, shuffle_rng);
        SamplerConfig epoch_sampler = config.sampler;
        epoch_sampler.seed = derive_seed(derive_seed(config.sampler.seed, 0x45504F43ULL),  // "EPOC"
                                         static_cast<std::uint64_t>(epoch));

        double epoch_objective = 0.0;
        std::int64_t epoch_steps = 0;
        const auto epoch_start = std::chrono::steady_clock::now();
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t i = begin; i < end; ++i) batch.push_back(train_split[order[i]]);
            const auto b = static_cast<double>(batch.size());

            const NegativeBatch negatives =
                sample_batch(batch, epoch_sampler, graph, classes, begin);

            entity_grads.reset(static_cast<int>(state.ewidth()));
            relation_grads.reset(static_cast<int>(state.rwidth()));
            double batch_loss = 0.0;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const double pos_score = score(state, batch[i]);
                const auto negs = negatives.for_positive(i);
                neg_scores.resize(negs.size());
                for (std::size_t j = 0; j < negs.size(); ++j)
                    neg_scores[j] = score(state, negs[j].triple);

                const LossGrad lg =
                    config.loss == LossKind::multiclass_nll
                        ? loss_multiclass_nll(pos_score, neg_scores)
                        : loss_self_adversarial(pos_score, neg_scores,
                                                config.adversarial_temperature, config.margin);
                batch_loss += lg.loss;
                score_gradient(state, batch[i], lg.d_positive / b, entity_grads, relation_grads);
                for (std::size_t j = 0; j < negs.size(); ++j)
                    score_gradient(state, negs[j].triple, lg.d_negatives[j] / b, entity_grads,
                                   relation_grads);
            }
            batch_loss /= b;
            const double penalty =
                regularize(state, config.reg_p, config.reg_lambda, entity_grads, relation_grads);
            try {
                adam.step(state, entity_grads, relation_grads, config.lr);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(begin / config.batch_size) + ": " + e.what());
            }
            epoch_objective += (batch_loss + penalty) * b;
            ++epoch_steps;
        }
        const auto epoch_end = std::chrono::steady_clock::now();
        const double epoch_ms =
            std::chrono::duration<double, std::milli>(epoch_end - epoch_start).count();
        total_ms += epoch_ms;
        result.steps += epoch_steps;
        epoch_objective /= static_cast<double>(order.size());
        result.epoch_losses.push_back(epoch_objective);
        result.epochs_run = epoch;

        std::string line = std::to_string(epoch) + '\t' + detail::log_value(epoch_objective);
        const bool validate_now = epoch % config.validation_frequency == 0;
        if (validate_now) {
            const EvalReport report = run_validation(epoch);
            line += '\t' + detail::log_value(report.overall.mrr) + '\t' +
                    detail::log_value(report.overall.hits1) + '\t' +
                    detail::log_value(report.overall.hits3) + '\t' +
                    detail::log_value(report.overall.hits10);
        } else {
            line += "\t-\t-\t-\t-";
        }
        if (config.log_timing && epoch_steps > 0)
            line += '\t' + detail::log_value(epoch_ms / static_cast<double>(epoch_steps));
        else
            line += "\t-";
        emit(line);

        if (validate_now && rounds_without_improvement >= config.patience) {
            result.stopped_early = true;
            break;
        }
    }

    if (!validated_ever) {
        const EvalReport report = run_validation(result.epochs_run);
        std::string line = "final\t-\t" + detail::log_value(report.overall.mrr) + '\t' +
                           detail::log_value(report.overall.hits1) + '\t' +
                           detail::log_value(report.overall.hits3) + '\t' +
                           detail::log_value(report.overall.hits10) + "\t-";
        emit(line);
    }
    result.mean_ms_per_step =
        result.steps > 0 ? total_ms / static_cast<double>(result.steps) : 0.0;
    return result;
}

}  // namespace kge
