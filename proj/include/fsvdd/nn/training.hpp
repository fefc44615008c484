#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/nn/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fsvdd::nn {

enum class Optimizer { adam, sgd };

inline std::string_view to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

inline Optimizer optimizer_from_string(std::string_view s) {
    if (s == "adam") return Optimizer::adam;
    if (s == "sgd") return Optimizer::sgd;
    throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::adam;
};

inline void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw ConfigError("train: learning_rate must be finite and >= 0");
}

/// Losses are mean-per-sample values over the whole training set; the
/// optimizer itself descends the summed batch loss.
struct TrainReport {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> epoch_loss;  // mean of the batch losses seen in each epoch
};

namespace detail {

class AdamState {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    template <Field T>
    explicit AdamState(Autoencoder<T>& ae) {
        for_each_parameter_block(ae, [&](std::span<double> s) {
            m_.emplace_back(s.size(), 0.0);
            v_.emplace_back(s.size(), 0.0);
        });
    }

    void begin_step() {
        ++t_;
        c1_ = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        c2_ = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    }

    void update(size_t block, std::span<double> p, std::span<const double> g, double lr) {
        auto& m = m_[block];
        auto& v = v_[block];
        for (size_t k = 0; k < p.size(); ++k) {
            m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
            v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k] * g[k];
            p[k] -= lr * (m[k] / c1_) / (std::sqrt(v[k] / c2_) + kEps);
        }
    }

private:
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
    double c1_ = 1.0, c2_ = 1.0;
};

}  // namespace detail

/// Trains `ae` in place on `dataset`. Deterministic for a given seed.
template <Field T>
TrainReport train(Autoencoder<T>& ae, std::span<const Vector<T>> dataset, const TrainConfig& cfg) {
    validate(cfg);
    if (dataset.empty()) throw DataError("train: empty dataset");
    validate(ae);
    const Matrix<T> all = stack_columns(dataset);
    if (all.rows() != ae.input_dim) throw DataError("train: input dimension mismatch");
    const auto n = static_cast<double>(dataset.size());

    TrainReport report;
    report.initial_loss = reconstruction_loss(ae, all) / n;
    if (!std::isfinite(report.initial_loss)) throw NumericalError("train: initial loss is not finite");

    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(dataset.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    detail::AdamState adam(ae);
    Gradient<T> grad;
    const auto batch = static_cast<size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t stop = std::min(order.size(), start + batch);
            Matrix<T> x(all.rows(), static_cast<Eigen::Index>(stop - start));
            for (size_t k = start; k < stop; ++k) x.col(static_cast<Eigen::Index>(k - start)) = all.col(order[k]);
            const double loss = loss_and_gradient(ae, x, grad);
            if (!std::isfinite(loss)) throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
            epoch_sum += loss;

            std::vector<std::span<double>> gblocks;
            for_each_gradient_block(ae, grad, [&](std::span<double> s) { gblocks.push_back(s); });
            size_t block = 0;
            if (cfg.optimizer == Optimizer::adam) {
                adam.begin_step();
                for_each_parameter_block(ae, [&](std::span<double> p) {
                    adam.update(block, p, gblocks[block], cfg.learning_rate);
                    ++block;
                });
            } else {
                for_each_parameter_block(ae, [&](std::span<double> p) {
                    const auto& g = gblocks[block++];
                    for (size_t k = 0; k < p.size(); ++k) p[k] -= cfg.learning_rate * g[k];
                });
            }
        }
        report.epoch_loss.push_back(epoch_sum / n);
    }
    report.final_loss = reconstruction_loss(ae, all) / n;
    if (!std::isfinite(report.final_loss)) throw NumericalError("train: final loss is not finite");
    return report;
}

template <Field T>
TrainReport train(Autoencoder<T>& ae, const std::vector<Vector<T>>& dataset, const TrainConfig& cfg) {
    return train(ae, std::span<const Vector<T>>(dataset), cfg);
}

}  // namespace fsvdd::nn
