#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/signal_repr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fsvdd::synth {

/// One reflector: amplitude (reflectivity weight), angular frequency in
/// rad/sample (encodes the round-trip delay) and phase.
struct Target {
    double a = 1.0;
    double w = 0.1;
    double phi = 0.0;
};

/// An operating condition: nominal targets plus per-draw jitter scales.
struct Cluster {
    std::vector<Target> targets;
    double sigma_a = 0.0;
    double sigma_w = 0.0;
    double sigma_phi = 0.0;
};

enum class DefectMode { reflectivity, delay };

/// Perturbation applied to abnormal samples: the designated target's
/// amplitude (or, in delay mode, its frequency) is multiplied by a factor
/// drawn uniformly from [factor_min, factor_max].
struct DefectSpec {
    size_t target_index = 0;
    double factor_min = 1.5;
    double factor_max = 2.0;
    DefectMode mode = DefectMode::reflectivity;
};

struct Counts {
    size_t train = 318;
    size_t val = 106;
    size_t test_healthy = 106;
    size_t test_abnormal = 362;

    [[nodiscard]] size_t healthy() const { return train + val + test_healthy; }
};

struct GeneratorConfig {
    Eigen::Index length = 1501;
    std::vector<Cluster> clusters;
    DefectSpec defect;
    double noise_sigma = 0.0;
    Counts counts;
    std::uint64_t seed = 0;
    size_t n_folds = 5;
};

/// Three operating conditions sharing a dominant surface return, a weaker
/// subsurface interface (the defect site) and position-dependent clutter.
/// Frequency jitter is kept small: 2e-5 rad/sample drifts the phase by about
/// 0.03 rad over a sweep, so the defect stays above the healthy spread.
inline GeneratorConfig default_generator_config() {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto w = [](double cycles) { return two_pi * cycles / 1501.0; };
    GeneratorConfig cfg;
    cfg.clusters = {
        Cluster{{{1.00, w(40.0), 0.3}, {0.25, w(52.0), 1.1}, {0.30, w(75.0), -0.7}, {0.15, w(120.0), 2.0}},
                0.03, 2e-5, 0.25},
        Cluster{{{1.10, w(44.0), -1.2}, {0.25, w(56.0), 0.4}, {0.20, w(90.0), 1.7}, {0.20, w(18.0), -2.4}},
                0.03, 2e-5, 0.25},
        Cluster{{{0.90, w(36.0), 2.2}, {0.25, w(48.0), -0.5}, {0.35, w(66.0), 0.9}, {0.10, w(140.0), -1.5}},
                0.03, 2e-5, 0.25},
    };
    cfg.defect = DefectSpec{1, 1.5, 2.0, DefectMode::reflectivity};
    cfg.noise_sigma = 0.05;
    return cfg;
}

inline void validate(const GeneratorConfig& cfg) {
    if (cfg.length < 2) throw ConfigError("generator: length must be >= 2");
    if (cfg.clusters.empty()) throw ConfigError("generator: need at least one cluster");
    if (!(cfg.noise_sigma >= 0.0)) throw ConfigError("generator: noise_sigma must be >= 0");
    if (cfg.counts.healthy() == 0) throw ConfigError("generator: zero healthy counts");
    if (cfg.n_folds < 1) throw ConfigError("generator: n_folds must be >= 1");
    for (const auto& c : cfg.clusters) {
        if (c.targets.empty()) throw ConfigError("generator: cluster without targets");
        if (!(c.sigma_a >= 0.0 && c.sigma_w >= 0.0 && c.sigma_phi >= 0.0))
            throw ConfigError("generator: jitter scales must be >= 0");
        for (const auto& t : c.targets) {
            if (!(t.a >= 0.0)) throw ConfigError("generator: target amplitude must be >= 0");
            if (!(t.w > 0.0 && t.w < std::numbers::pi)) throw ConfigError("generator: target frequency must be in (0, pi)");
        }
        if (cfg.counts.test_abnormal > 0 && cfg.defect.target_index >= c.targets.size())
            throw ConfigError("generator: defect target index out of range");
    }
    if (!(cfg.defect.factor_min <= cfg.defect.factor_max) || !(cfg.defect.factor_min >= 0.0))
        throw ConfigError("generator: bad defect factor range");
}

/// x(t) = sum_n a_n cos(w_n t + phi_n) + noise, t = 0 .. length-1.
template <class Rng>
IFSignal synth_signal(std::span<const Target> targets, Eigen::Index length, double noise_sigma, Rng& rng) {
    if (targets.empty()) throw ConfigError("synth_signal: no targets");
    IFSignal out;
    out.samples = RealVector::Zero(length);
    for (const auto& t : targets)
        for (Eigen::Index i = 0; i < length; ++i)
            out.samples[i] += t.a * std::cos(t.w * static_cast<double>(i) + t.phi);
    if (noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (Eigen::Index i = 0; i < length; ++i) out.samples[i] += noise(rng);
    }
    return out;
}

/// One healthy realisation of a cluster's targets.
template <class Rng>
std::vector<Target> draw_targets(const Cluster& cluster, Rng& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<Target> out = cluster.targets;
    for (auto& t : out) {
        t.a = std::max(0.0, t.a + cluster.sigma_a * unit(rng));
        t.w = std::clamp(t.w + cluster.sigma_w * unit(rng), 1e-6, std::numbers::pi - 1e-6);
        t.phi = t.phi + cluster.sigma_phi * unit(rng);
    }
    return out;
}

/// Returns the targets with the defect applied to the designated reflector.
template <class Rng>
std::vector<Target> apply_defect(std::vector<Target> targets, const DefectSpec& defect, Rng& rng) {
    if (defect.target_index >= targets.size()) throw ConfigError("apply_defect: target index out of range");
    std::uniform_real_distribution<double> factor(defect.factor_min, defect.factor_max);
    const double f = defect.factor_min == defect.factor_max ? defect.factor_min : factor(rng);
    auto& t = targets[defect.target_index];
    if (defect.mode == DefectMode::reflectivity) {
        t.a *= f;
    } else {
        t.w = std::clamp(t.w * f, 1e-6, std::numbers::pi - 1e-6);
    }
    return targets;
}

/// Generated samples in order: train, val, test-healthy, test-abnormal.
/// Each signal's meta carries id, split ("train", "val", "test"), cluster and
/// fold (the k-fold block of a healthy sample, -1 for abnormal ones).
struct SyntheticDataset {
    std::vector<IFSignal> signals;
};

inline std::vector<int> contiguous_blocks(size_t n, size_t n_folds) {
    std::vector<int> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = static_cast<int>(i * n_folds / n);
    return out;
}

inline SyntheticDataset generate(const GeneratorConfig& cfg) {
    validate(cfg);
    // Independent substreams for healthy and abnormal draws.
    std::seed_seq healthy_seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 1u};
    std::seed_seq abnormal_seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 2u};
    std::mt19937_64 healthy_rng(healthy_seq);
    std::mt19937_64 abnormal_rng(abnormal_seq);

    SyntheticDataset ds;
    const size_t n_healthy = cfg.counts.healthy();
    const auto blocks = contiguous_blocks(n_healthy, cfg.n_folds);
    const size_t n_clusters = cfg.clusters.size();
    for (size_t i = 0; i < n_healthy; ++i) {
        const size_t c = i % n_clusters;
        const auto targets = draw_targets(cfg.clusters[c], healthy_rng);
        IFSignal s = synth_signal(std::span<const Target>(targets), cfg.length, cfg.noise_sigma, healthy_rng);
        s.label = Label::healthy;
        const char* split = i < cfg.counts.train ? "train" : i < cfg.counts.train + cfg.counts.val ? "val" : "test";
        s.meta = {{"id", "h" + std::to_string(i)},
                  {"split", split},
                  {"cluster", std::to_string(c)},
                  {"fold", std::to_string(blocks[i])}};
        ds.signals.push_back(std::move(s));
    }
    for (size_t i = 0; i < cfg.counts.test_abnormal; ++i) {
        const size_t c = i % n_clusters;
        const auto targets = apply_defect(draw_targets(cfg.clusters[c], abnormal_rng), cfg.defect, abnormal_rng);
        IFSignal s = synth_signal(std::span<const Target>(targets), cfg.length, cfg.noise_sigma, abnormal_rng);
        s.label = Label::abnormal;
        s.meta = {{"id", "a" + std::to_string(i)}, {"split", "test"}, {"cluster", std::to_string(c)}, {"fold", "-1"}};
        ds.signals.push_back(std::move(s));
    }
    return ds;
}

}  // namespace fsvdd::synth
