#include "fsvdd/focus_svdd.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace fsvdd;
using namespace fsvdd::focus;

namespace {

std::vector<RealVector> gaussian(size_t n, Eigen::Index dim, std::uint64_t seed, double scale = 1.0, double offset = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(offset, scale);
    std::vector<RealVector> out;
    for (size_t i = 0; i < n; ++i) out.push_back(RealVector::NullaryExpr(dim, [&] { return g(rng); }));
    return out;
}

/// Single linear layer y = s x: residual (1 - s) x.
nn::Autoencoder<double> scaling_ae(Eigen::Index dim, double s) {
    nn::Autoencoder<double> ae;
    ae.input_dim = dim;
    ae.layers.push_back({Matrix<double>::Identity(dim, dim) * s, Vector<double>::Zero(dim), nn::Activation::linear, {}});
    return ae;
}

nn::Autoencoder<Complex> random_complex_ae(Eigen::Index dim, std::uint64_t seed) {
    nn::ArchitectureConfig cfg;
    cfg.input_dim = dim;
    cfg.hidden = {4, 2, 4};
    cfg.activation = nn::Activation::ead;
    cfg.seed = seed;
    return nn::make_autoencoder<Complex>(cfg);
}

}  // namespace

TEST(Residual, PerfectReconstructionIsZero) {
    const auto ae = scaling_ae(4, 1.0);
    EXPECT_EQ(residual(RealVector{{1, 2, 3, 4}}, ae), RealVector::Zero(4));
}

TEST(Residual, ZeroOutputAeReturnsInput) {
    const auto ae = scaling_ae(3, 0.0);
    const RealVector x{{1.5, -2.0, 0.25}};
    EXPECT_EQ(residual(x, ae), x);
}

TEST(Residual, MatchesForwardThenSubtract) {
    const auto ae = random_complex_ae(6, 3);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    const ComplexVector x = ComplexVector::NullaryExpr(6, [&] { return Complex(g(rng), g(rng)); });
    const ComplexVector y = nn::forward(ae, x);
    const ComplexVector r = residual(x, ae);
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_EQ(r[i], x[i] - y[i]);
    const std::vector<ComplexVector> xs{x, x};
    const auto rs = residuals<Complex>(xs, ae);
    ASSERT_EQ(rs.size(), 2u);
    EXPECT_LT((rs[1] - r).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FitFocus, IdenticalValidationLeavesLimitUnchanged) {
    const auto x = gaussian(25, 3, 2);
    const auto fm = fit_focus(x, x, scaling_ae(3, 0.5), 0.5, 1.0);
    EXPECT_EQ(fm.m_train, fm.m_val);
    EXPECT_EQ(*fm.svdd.corrected_limit, fm.svdd.density_limit);
}

TEST(FitFocus, CorrectionIdentity) {
    const auto xt = gaussian(25, 3, 3);
    const auto xv = gaussian(20, 3, 4, 1.3);
    const auto fm = fit_focus(xt, xv, scaling_ae(3, 0.2), 0.3, 1.0);
    EXPECT_NEAR(*fm.svdd.corrected_limit - fm.svdd.density_limit, fm.m_val - fm.m_train, 1e-15);
}

TEST(FitFocus, ShiftedValidationRelaxesLimit) {
    const auto xt = gaussian(30, 2, 5);
    const auto xv = gaussian(30, 2, 6, 1.0, 2.0);
    const auto fm = fit_focus(xt, xv, scaling_ae(2, 0.0), 0.5, 1.0);
    EXPECT_LT(fm.m_val, fm.m_train);
    EXPECT_LT(*fm.svdd.corrected_limit, fm.svdd.density_limit);
}

TEST(FitFocus, DegenerateResidualsRejected) {
    const auto x = gaussian(10, 3, 7);
    EXPECT_THROW(fit_focus(x, x, scaling_ae(3, 1.0), 0.5, 1.0), NumericalError);
    EXPECT_THROW(fit_focus(x, std::vector<RealVector>{}, scaling_ae(3, 0.5), 0.5, 1.0), DataError);
}

TEST(DecideR, TrainingSamplesAreHealthyAndFarOnesAbnormal) {
    const auto xt = gaussian(20, 3, 8);
    const auto fm = fit_focus(xt, gaussian(10, 3, 9), scaling_ae(3, 0.5), 0.5, 1.0);
    for (const auto& x : xt) EXPECT_EQ(decide_r(fm, x), 0);
    EXPECT_EQ(decide_r(fm, RealVector(RealVector::Constant(3, 50.0))), 1);
}

TEST(DecideR, EqualsSvddDecisionOnResidual) {
    const auto ae = random_complex_ae(5, 10);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    auto draw = [&](size_t n, double s) {
        std::vector<ComplexVector> out;
        for (size_t i = 0; i < n; ++i) out.push_back(ComplexVector::NullaryExpr(5, [&] { return Complex(s * g(rng), s * g(rng)); }));
        return out;
    };
    const auto xt = draw(20, 1.0), xv = draw(10, 1.0), q = draw(100, 1.5);
    const auto fm = fit_focus(xt, xv, ae, 0.4, 1.0, Representation::analytic);
    for (const auto& x : q) EXPECT_EQ(decide_r(fm, x), svdd::decide(fm.svdd, residual(x, ae)));
}

TEST(DecideM, ThresholdMonotonicity) {
    const auto xt = gaussian(30, 2, 11);
    const auto q = gaussian(200, 2, 12, 1.5);
    auto fm = fit_focus(xt, xt, scaling_ae(2, 0.3), 1.0, 1.0);
    for (const auto& x : q) EXPECT_EQ(decide_m(fm, x), decide_r(fm, x));

    const double D = fm.svdd.density_limit;
    auto flags = [&](double limit) {
        fm.svdd.corrected_limit = limit;
        std::vector<int> out;
        for (const auto& x : q) out.push_back(decide_m(fm, x));
        return out;
    };
    const auto base = flags(D), lower = flags(0.7 * D), higher = flags(std::min(1.0, 1.3 * D));
    int n_lower = 0, n_base = 0, n_higher = 0;
    for (size_t i = 0; i < q.size(); ++i) {
        EXPECT_LE(lower[i], base[i]);   // healthy set grows as the limit drops
        EXPECT_GE(higher[i], base[i]);  // and shrinks as it rises
        n_lower += lower[i];
        n_base += base[i];
        n_higher += higher[i];
    }
    EXPECT_LE(n_lower, n_base);
    EXPECT_LE(n_base, n_higher);
}

TEST(DecideM, RequiresCorrectedLimit) {
    const auto xt = gaussian(10, 2, 13);
    auto fm = fit_focus(xt, xt, scaling_ae(2, 0.3), 1.0, 1.0);
    fm.svdd.corrected_limit.reset();
    EXPECT_THROW(decide_m(fm, xt[0]), DataError);
}

TEST(NormBaseline, ZeroEpsilonUsesMaximum) {
    const auto xv = gaussian(20, 3, 14);
    const auto ae = scaling_ae(3, 0.5);
    double max_norm = 0.0;
    for (const auto& x : xv) max_norm = std::max(max_norm, residual(x, ae).norm());
    EXPECT_EQ(norm_threshold<double>(ae, xv, 0.0), max_norm);
    const auto d = norm_baseline<double>(ae, xv, xv, 0.0);
    for (int v : d) EXPECT_EQ(v, 0);
}

TEST(NormBaseline, QuantilePointIsHealthy) {
    std::vector<RealVector> xv;
    for (int i = 1; i <= 20; ++i) xv.push_back(RealVector::Constant(1, static_cast<double>(i)));
    const auto ae = scaling_ae(1, 0.0);
    // nearest rank ceil(0.95 * 20) = 19
    EXPECT_EQ(norm_threshold<double>(ae, xv, 0.05), 19.0);
    const std::vector<RealVector> q{RealVector::Constant(1, 19.0), RealVector::Constant(1, 19.5)};
    const auto d = norm_baseline<double>(ae, xv, q, 0.05);
    EXPECT_EQ(d[0], 0);
    EXPECT_EQ(d[1], 1);
}

TEST(NormBaseline, RecallGrowsWithEpsilon) {
    const auto ae = scaling_ae(4, 0.0);
    const auto xv = gaussian(200, 4, 15);
    const auto abnormal = gaussian(200, 4, 16, 1.0, 0.7);
    double prev = -1.0;
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.4}) {
        const auto d = norm_baseline<double>(ae, xv, abnormal, eps);
        const double recall = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
        EXPECT_GE(recall, prev);
        prev = recall;
    }
    EXPECT_GT(prev, 0.5);
}

TEST(NormBaseline, Preconditions) {
    const auto ae = scaling_ae(2, 0.0);
    EXPECT_THROW(norm_threshold<double>(ae, gaussian(3, 2, 1), 1.0), ConfigError);
    EXPECT_THROW(norm_threshold<double>(ae, std::vector<RealVector>{}, 0.1), DataError);
}
