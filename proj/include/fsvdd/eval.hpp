#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/focus_svdd.hpp"
#include "fsvdd/nn/autoencoder.hpp"
#include "fsvdd/nn/training.hpp"
#include "fsvdd/signal_repr.hpp"
#include "fsvdd/svdd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace fsvdd::eval {

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
    double f1 = 0.0;
    double accuracy = 0.0;
    std::optional<double> auc;
    double precision = 0.0;
    double recall = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Area under the ROC curve with midranks for tied scores (Mann-Whitney U).
/// Positives are label 1; higher scores mean more abnormal. Empty when only
/// one class is present.
inline std::optional<double> roc_auc(std::span<const int> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) throw DataError("auc: length mismatch");
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    for (size_t i = 0; i < n;) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double pos = 0.0, rank_sum = 0.0;
    for (size_t i = 0; i < n; ++i)
        if (y_true[i] == 1) {
            pos += 1.0;
            rank_sum += rank[i];
        }
    const double neg = static_cast<double>(n) - pos;
    if (pos == 0.0 || neg == 0.0) return std::nullopt;
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

/// Abnormal (1) is the positive class. Precision is 0 when nothing is
/// flagged, F1 is 0 when precision + recall is 0.
inline Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::span<const double> scores) {
    if (y_true.empty() || y_true.size() != y_pred.size() || y_true.size() != scores.size())
        throw DataError("compute_metrics: inputs must be nonempty and of equal length");
    Metrics m;
    for (size_t i = 0; i < y_true.size(); ++i) {
        const bool t = y_true[i] == 1, p = y_pred[i] == 1;
        if (t && p) ++m.tp;
        else if (!t && p) ++m.fp;
        else if (!t && !p) ++m.tn;
        else ++m.fn;
    }
    const auto n = static_cast<double>(y_true.size());
    m.accuracy = static_cast<double>(m.tp + m.tn) / n;
    m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.auc = roc_auc(y_true, scores);
    return m;
}

// ---------------------------------------------------------------------------
// Fold plan

struct Fold {
    std::vector<size_t> train;
    std::vector<size_t> val;
    std::vector<size_t> test_healthy;
};

/// Healthy samples are split into n_folds blocks. Fold f tests on block
/// (f + n - 1) mod n, validates on block (f + n - 2) mod n and trains on the
/// rest. The abnormal samples form one test set shared by every fold.
struct FoldPlan {
    size_t n_folds = 5;
    std::vector<Fold> folds;
    std::vector<size_t> abnormal;
};

/// `healthy_blocks[i]` is the block of healthy sample `healthy[i]`.
inline FoldPlan make_fold_plan(std::span<const size_t> healthy, std::span<const int> healthy_blocks,
                               std::span<const size_t> abnormal, size_t n_folds) {
    if (n_folds < 3) throw ConfigError("fold plan: need at least 3 folds");
    if (healthy.size() != healthy_blocks.size()) throw DataError("fold plan: block ids misaligned");
    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.abnormal.assign(abnormal.begin(), abnormal.end());
    for (size_t f = 0; f < n_folds; ++f) {
        Fold fold;
        const auto test_block = static_cast<int>((f + n_folds - 1) % n_folds);
        const auto val_block = static_cast<int>((f + n_folds - 2) % n_folds);
        for (size_t i = 0; i < healthy.size(); ++i) {
            const int b = healthy_blocks[i];
            if (b < 0 || b >= static_cast<int>(n_folds)) throw DataError("fold plan: block id out of range");
            if (b == test_block) fold.test_healthy.push_back(healthy[i]);
            else if (b == val_block) fold.val.push_back(healthy[i]);
            else fold.train.push_back(healthy[i]);
        }
        if (fold.train.empty() || fold.val.empty() || fold.test_healthy.empty())
            throw DataError("fold plan: empty split in fold " + std::to_string(f));
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

/// Builds the plan from a labelled dataset. Healthy signals use their "fold"
/// meta entry when every one has it, contiguous blocks otherwise.
inline FoldPlan make_fold_plan(std::span<const IFSignal> data, size_t n_folds) {
    std::vector<size_t> healthy, abnormal;
    std::vector<int> blocks;
    bool have_blocks = true;
    for (size_t i = 0; i < data.size(); ++i) {
        if (data[i].label == Label::healthy) {
            healthy.push_back(i);
            auto it = data[i].meta.find("fold");
            if (it == data[i].meta.end()) {
                have_blocks = false;
                blocks.push_back(0);
            } else {
                blocks.push_back(std::stoi(it->second));
            }
        } else if (data[i].label == Label::abnormal) {
            abnormal.push_back(i);
        }
    }
    for (int b : blocks)
        if (b < 0 || b >= static_cast<int>(n_folds)) have_blocks = false;
    if (!have_blocks)
        for (size_t i = 0; i < healthy.size(); ++i) blocks[i] = static_cast<int>(i * n_folds / healthy.size());
    return make_fold_plan(healthy, blocks, abnormal, n_folds);
}

// ---------------------------------------------------------------------------
// Ablation

/// Input representation and, for the analytic one, the complex activation.
enum class Variant { x, x_amplitude, xh_crelu, xh_modrelu, xh_ead };

/// Decision functions: residual norm, plain SVDD with D or D_m on the raw
/// representation, focus-SVDD with D or D_m on the residuals.
enum class Decision { norm, svdd, svdd_dm, focus_r, focus_m };

inline constexpr Variant kAllVariants[] = {Variant::x, Variant::x_amplitude, Variant::xh_crelu, Variant::xh_modrelu,
                                           Variant::xh_ead};
inline constexpr Decision kAllDecisions[] = {Decision::norm, Decision::svdd, Decision::svdd_dm, Decision::focus_r,
                                             Decision::focus_m};

inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::x: return "x";
        case Variant::x_amplitude: return "xA";
        case Variant::xh_crelu: return "xH_crelu";
        case Variant::xh_modrelu: return "xH_modrelu";
        case Variant::xh_ead: return "xH_ead";
    }
    return "x";
}

inline Variant variant_from_string(std::string_view s) {
    for (auto v : kAllVariants)
        if (to_string(v) == s) return v;
    throw ConfigError("unknown representation variant '" + std::string(s) + "'");
}

inline std::string_view to_string(Decision d) {
    switch (d) {
        case Decision::norm: return "norm";
        case Decision::svdd: return "svdd";
        case Decision::svdd_dm: return "svdd_dm";
        case Decision::focus_r: return "focus_r";
        case Decision::focus_m: return "focus_m";
    }
    return "norm";
}

inline Decision decision_from_string(std::string_view s) {
    for (auto d : kAllDecisions)
        if (to_string(d) == s) return d;
    throw ConfigError("unknown decision '" + std::string(s) + "'");
}

inline Representation representation_of(Variant v) {
    switch (v) {
        case Variant::x: return Representation::real;
        case Variant::x_amplitude: return Representation::amplitude;
        default: return Representation::analytic;
    }
}

inline nn::Activation activation_of(Variant v) {
    switch (v) {
        case Variant::xh_crelu: return nn::Activation::crelu;
        case Variant::xh_modrelu: return nn::Activation::modrelu;
        case Variant::xh_ead: return nn::Activation::ead;
        default: return nn::Activation::real_relu;
    }
}

struct AblationSpec {
    std::vector<Variant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
    std::vector<Decision> decisions{std::begin(kAllDecisions), std::end(kAllDecisions)};
    nn::TrainConfig train;
    std::vector<Eigen::Index> hidden = {64, 64, 32, 64, 64};
    bool per_node_b = false;
    bool binwise_standardization = false;
    double epsilon = 0.05;
    double C = 1.0;
    std::vector<double> gamma_grid = svdd::default_gamma_grid();
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct FoldResult {
    size_t fold = 0;
    Metrics metrics;
    std::optional<double> gamma;  // absent for the norm baseline
    bool gamma_fallback = false;
    double final_train_loss = 0.0;
};

struct CellResult {
    Variant variant = Variant::x;
    Decision decision = Decision::norm;
    std::vector<FoldResult> folds;
    bool failed = false;
    std::string error;

    Metrics mean;
    Metrics stddev;
};

struct EvalReport {
    std::vector<CellResult> cells;
    size_t n_folds = 0;
    std::map<std::string, std::string> metadata;

    [[nodiscard]] const CellResult* find(Variant v, Decision d) const {
        for (const auto& c : cells)
            if (c.variant == v && c.decision == d) return &c;
        return nullptr;
    }
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over a combined key
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Kernel width calibration for one training/validation pair. Pairwise
/// distances are computed once and each grid value is fitted at most once.
/// The limit is either the plain D or the corrected D - m_T + m_V.
class GammaSearch {
public:
    template <Field T>
    GammaSearch(std::span<const Vector<T>> train, std::span<const Vector<T>> val, double C)
        : d2_tt_(svdd::squared_distances(train)),
          d2_vt_(svdd::squared_distances(val, train)),
          placeholders_(train.size(), Vector<double>::Zero(1)),
          C_(C) {
        if (train.empty()) throw DataError("gamma search: empty training set");
        if (val.empty()) throw DataError("gamma search: empty validation set");
    }

    /// Fit at `gamma`; support_indices point into the training set, the
    /// stored support vectors are placeholders.
    const svdd::FitResult<double>& fit_at(double gamma) {
        auto it = fits_.find(gamma);
        if (it == fits_.end()) {
            auto fit = svdd::fit_from_kernel(std::span<const Vector<double>>(placeholders_),
                                             svdd::kernel_from_distances(d2_tt_, gamma), gamma, C_);
            it = fits_.emplace(gamma, std::move(fit)).first;
        }
        return it->second;
    }

    /// Densities of query points given their squared distances to the
    /// training set (rows = queries).
    Eigen::VectorXd densities(const Eigen::MatrixXd& d2_query_train, double gamma) {
        const auto& fit = fit_at(gamma);
        Eigen::VectorXd d = Eigen::VectorXd::Zero(d2_query_train.rows());
        for (Eigen::Index q = 0; q < d2_query_train.rows(); ++q) {
            double s = 0.0;
            for (size_t k = 0; k < fit.support_indices.size(); ++k)
                s += fit.model.alpha[static_cast<Eigen::Index>(k)] *
                     std::exp(-gamma * d2_query_train(q, fit.support_indices[k]));
            d[q] = s;
        }
        return d;
    }

    Eigen::VectorXd train_densities(double gamma) { return densities(d2_tt_, gamma); }
    Eigen::VectorXd val_densities(double gamma) { return densities(d2_vt_, gamma); }

    double limit(double gamma, bool corrected) {
        const auto& fit = fit_at(gamma);
        if (!corrected) return fit.model.density_limit;
        return focus::corrected_limit(fit.model, train_densities(gamma).mean(), val_densities(gamma).mean());
    }

    /// Largest grid value at which the chosen rule flags at most epsilon of
    /// the validation set.
    svdd::GammaSelection select(bool corrected, double epsilon, std::span<const double> grid) {
        std::vector<Eigen::Index> idx(static_cast<size_t>(d2_vt_.rows()));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        return svdd::select_gamma<Eigen::Index>(
            [&](double gamma) {
                const Eigen::VectorXd val_d = val_densities(gamma);
                const double lim = limit(gamma, corrected);
                auto decider = [val_d, lim](Eigen::Index i) { return svdd::decide_density(val_d[i], lim); };
                return svdd::limit_is_resolvable(lim) ? std::optional(decider) : std::nullopt;
            },
            std::span<const Eigen::Index>(idx), epsilon, grid);
    }

private:
    Eigen::MatrixXd d2_tt_;
    Eigen::MatrixXd d2_vt_;
    std::vector<Vector<double>> placeholders_;
    double C_;
    std::map<double, svdd::FitResult<double>> fits_;
};

namespace detail {

struct DecisionOutcome {
    Metrics metrics;
    std::optional<double> gamma;
    bool fallback = false;
};

/// SVDD with the plain limit D and/or the corrected limit D_m on one
/// representation (raw vectors or residuals). The kernel width is chosen
/// for each limit separately, by the same rule that is then evaluated.
template <Field T>
std::map<bool, DecisionOutcome> svdd_decisions(std::span<const Vector<T>> train, std::span<const Vector<T>> val,
                                               std::span<const Vector<T>> test, std::span<const int> y_test,
                                               bool want_plain, bool want_corrected, const AblationSpec& spec) {
    GammaSearch search(train, val, spec.C);
    const Eigen::MatrixXd d2_qt = svdd::squared_distances(test, train);
    std::map<bool, DecisionOutcome> out;
    for (bool corrected : {false, true}) {
        if ((corrected && !want_corrected) || (!corrected && !want_plain)) continue;
        const auto sel = search.select(corrected, spec.epsilon, spec.gamma_grid);
        const double limit = search.limit(sel.gamma, corrected);
        const Eigen::VectorXd test_d = search.densities(d2_qt, sel.gamma);
        std::vector<int> pred(test.size());
        std::vector<double> score(test.size());
        for (size_t i = 0; i < test.size(); ++i) {
            pred[i] = svdd::decide_density(test_d[static_cast<Eigen::Index>(i)], limit);
            score[i] = -test_d[static_cast<Eigen::Index>(i)];
        }
        out[corrected] = {compute_metrics(y_test, pred, score), sel.gamma, sel.fallback};
    }
    return out;
}

struct FoldData {
    std::vector<const IFSignal*> train, val, test;
    std::vector<int> y_test;
};

template <Field T>
std::vector<Vector<T>> represent(const std::vector<const IFSignal*>& signals, const Standardizer& s, Representation r) {
    std::vector<Vector<T>> out;
    out.reserve(signals.size());
    for (const auto* sig : signals) {
        if constexpr (is_complex_v<T>) {
            out.push_back(to_analytic_representation(*sig, s));
        } else {
            out.push_back(to_real_representation(*sig, s, r));
        }
    }
    return out;
}

/// All requested decisions for one (variant, fold) job.
template <Field T>
std::map<Decision, DecisionOutcome> run_job(Variant variant, const FoldData& fd, size_t fold_index,
                                            const AblationSpec& spec, double& final_loss) {
    const auto wants = [&](Decision d) {
        return std::find(spec.decisions.begin(), spec.decisions.end(), d) != spec.decisions.end();
    };
    std::vector<IFSignal> train_raw;
    for (const auto* s : fd.train) train_raw.push_back(*s);
    const Standardizer st = spec.binwise_standardization ? fit_binwise_standardizer(train_raw)
                                                         : fit_standardizer(train_raw);
    const Representation rep = representation_of(variant);
    const auto x_train = represent<T>(fd.train, st, rep);
    const auto x_val = represent<T>(fd.val, st, rep);
    const auto x_test = represent<T>(fd.test, st, rep);

    std::map<Decision, DecisionOutcome> out;
    if (wants(Decision::svdd) || wants(Decision::svdd_dm)) {
        auto res = svdd_decisions<T>(x_train, x_val, x_test, fd.y_test, wants(Decision::svdd), wants(Decision::svdd_dm),
                                     spec);
        if (res.contains(false)) out[Decision::svdd] = res[false];
        if (res.contains(true)) out[Decision::svdd_dm] = res[true];
    }
    if (wants(Decision::norm) || wants(Decision::focus_r) || wants(Decision::focus_m)) {
        nn::ArchitectureConfig arch;
        arch.input_dim = x_train.front().size();
        arch.hidden = spec.hidden;
        arch.activation = activation_of(variant);
        arch.per_node_b = spec.per_node_b;
        arch.seed = mix_seed(spec.seed, 1000 * static_cast<std::uint64_t>(variant) + fold_index);
        auto ae = nn::make_autoencoder<T>(arch);
        nn::TrainConfig tc = spec.train;
        tc.seed = mix_seed(arch.seed, 7);
        final_loss = nn::train(ae, x_train, tc).final_loss;

        const auto r_train = focus::residuals<T>(x_train, ae);
        const auto r_val = focus::residuals<T>(x_val, ae);
        const auto r_test = focus::residuals<T>(x_test, ae);
        if (wants(Decision::norm)) {
            const double thr = focus::norm_threshold<T>(ae, x_val, spec.epsilon);
            std::vector<int> pred;
            std::vector<double> score;
            for (const auto& r : r_test) {
                score.push_back(r.norm());
                pred.push_back(focus::decide_norm(score.back(), thr));
            }
            out[Decision::norm] = {compute_metrics(fd.y_test, pred, score), std::nullopt, false};
        }
        if (wants(Decision::focus_r) || wants(Decision::focus_m)) {
            focus::require_nondegenerate<T>(r_train);
            auto res = svdd_decisions<T>(r_train, r_val, r_test, fd.y_test, wants(Decision::focus_r),
                                         wants(Decision::focus_m), spec);
            if (res.contains(false)) out[Decision::focus_r] = res[false];
            if (res.contains(true)) out[Decision::focus_m] = res[true];
        }
    }
    return out;
}

inline void summarize(CellResult& cell) {
    if (cell.folds.empty()) return;
    const auto n = static_cast<double>(cell.folds.size());
    auto stat = [&](auto get, double& mean, double& sd) {
        double s = 0.0;
        for (const auto& f : cell.folds) s += get(f.metrics);
        mean = s / n;
        double ss = 0.0;
        for (const auto& f : cell.folds) ss += (get(f.metrics) - mean) * (get(f.metrics) - mean);
        sd = std::sqrt(ss / n);
    };
    stat([](const Metrics& m) { return m.f1; }, cell.mean.f1, cell.stddev.f1);
    stat([](const Metrics& m) { return m.accuracy; }, cell.mean.accuracy, cell.stddev.accuracy);
    stat([](const Metrics& m) { return m.precision; }, cell.mean.precision, cell.stddev.precision);
    stat([](const Metrics& m) { return m.recall; }, cell.mean.recall, cell.stddev.recall);
    std::vector<double> aucs;
    for (const auto& f : cell.folds)
        if (f.metrics.auc) aucs.push_back(*f.metrics.auc);
    if (!aucs.empty()) {
        const double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
        double ss = 0.0;
        for (double a : aucs) ss += (a - mean) * (a - mean);
        cell.mean.auc = mean;
        cell.stddev.auc = std::sqrt(ss / static_cast<double>(aucs.size()));
    }
}

}  // namespace detail

/// Runs every requested (variant, decision) cell over every fold. Failures
/// of a (variant, fold) job mark the affected cells failed and leave the
/// others untouched. Results do not depend on `spec.jobs`.
inline EvalReport run_ablation(std::span<const IFSignal> data, const FoldPlan& plan, const AblationSpec& spec) {
    if (spec.variants.empty() || spec.decisions.empty()) throw ConfigError("ablation: nothing to evaluate");
    nn::validate(spec.train);
    for (const auto& f : plan.folds)
        for (auto idx : f.train)
            if (idx >= data.size()) throw DataError("ablation: fold index out of range");

    struct Job {
        Variant variant;
        size_t fold;
        std::map<Decision, detail::DecisionOutcome> result;
        double final_loss = 0.0;
        std::string error;
    };
    std::vector<Job> jobs;
    for (auto v : spec.variants)
        for (size_t f = 0; f < plan.folds.size(); ++f) jobs.push_back({v, f, {}, 0.0, {}});

    std::vector<detail::FoldData> fold_data(plan.folds.size());
    for (size_t f = 0; f < plan.folds.size(); ++f) {
        auto& fd = fold_data[f];
        for (auto i : plan.folds[f].train) fd.train.push_back(&data[i]);
        for (auto i : plan.folds[f].val) fd.val.push_back(&data[i]);
        for (auto i : plan.folds[f].test_healthy) {
            fd.test.push_back(&data[i]);
            fd.y_test.push_back(0);
        }
        for (auto i : plan.abnormal) {
            fd.test.push_back(&data[i]);
            fd.y_test.push_back(1);
        }
    }

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t j = next++; j < jobs.size(); j = next++) {
            auto& job = jobs[j];
            try {
                if (representation_of(job.variant) == Representation::analytic) {
                    job.result = detail::run_job<Complex>(job.variant, fold_data[job.fold], job.fold, spec, job.final_loss);
                } else {
                    job.result = detail::run_job<double>(job.variant, fold_data[job.fold], job.fold, spec, job.final_loss);
                }
            } catch (const std::exception& e) {
                job.error = e.what();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(spec.jobs, static_cast<int>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    EvalReport report;
    report.n_folds = plan.folds.size();
    report.metadata["auc_score"] = "svdd decisions: -density; norm: residual norm";
    report.metadata["positive_class"] = "abnormal";
    report.metadata["epsilon"] = std::to_string(spec.epsilon);
    report.metadata["C"] = std::to_string(spec.C);
    for (auto v : spec.variants) {
        for (auto d : spec.decisions) {
            CellResult cell;
            cell.variant = v;
            cell.decision = d;
            for (const auto& job : jobs) {
                if (job.variant != v) continue;
                if (!job.error.empty()) {
                    cell.failed = true;
                    cell.error = "fold " + std::to_string(job.fold) + ": " + job.error;
                    break;
                }
                const auto& o = job.result.at(d);
                cell.folds.push_back({job.fold, o.metrics, o.gamma, o.fallback, job.final_loss});
            }
            if (cell.failed) cell.folds.clear();
            detail::summarize(cell);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

}  // namespace fsvdd::eval
