#include "fsvdd/svdd.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <functional>
#include <random>

using namespace fsvdd;
using namespace fsvdd::svdd;

namespace {

std::vector<RealVector> random_points(size_t n, Eigen::Index dim, std::uint64_t seed, double scale = 1.0,
                                      double offset = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(offset, scale);
    std::vector<RealVector> out;
    for (size_t i = 0; i < n; ++i) out.push_back(RealVector::NullaryExpr(dim, [&] { return g(rng); }));
    return out;
}

std::vector<std::vector<double>> to_nested(const Eigen::MatrixXd& K) {
    std::vector<std::vector<double>> out(static_cast<size_t>(K.rows()), std::vector<double>(static_cast<size_t>(K.cols())));
    for (Eigen::Index i = 0; i < K.rows(); ++i)
        for (Eigen::Index j = 0; j < K.cols(); ++j) out[static_cast<size_t>(i)][static_cast<size_t>(j)] = K(i, j);
    return out;
}

}  // namespace

TEST(Kernel, Examples) {
    const RealVector x{{1.0, 0.0}}, y{{0.0, 0.0}};
    EXPECT_EQ(rbf_kernel(x, x, 3.0), 1.0);
    EXPECT_NEAR(rbf_kernel(x, y, 1.0), 0.36787944117144233, 1e-15);
    const ComplexVector zi{{Complex(0, 1)}}, z0{{Complex(0, 0)}};
    EXPECT_NEAR(rbf_kernel(zi, z0, 1.0), std::exp(-1.0), 1e-15);
    EXPECT_THROW(rbf_kernel(x, RealVector(RealVector::Zero(3)), 1.0), DataError);
}

TEST(Gram, Examples) {
    const std::vector<RealVector> one{RealVector::Ones(3)};
    EXPECT_EQ(gram(one, 1.0), Eigen::MatrixXd::Ones(1, 1));
    const std::vector<RealVector> two{RealVector::Ones(3), RealVector::Ones(3)};
    EXPECT_EQ(gram(two, 1.0), Eigen::MatrixXd::Ones(2, 2));
    const auto K = gram(random_points(5, 4, 1), 0.3);
    EXPECT_TRUE(K.isApprox(K.transpose()));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().minCoeff(), -1e-10);
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(K(i, i), 1.0);
    EXPECT_THROW(gram(std::vector<RealVector>{RealVector::Ones(2), RealVector::Ones(3)}, 1.0), DataError);
}

TEST(Fit, MinimalCapGivesUniformWeights) {
    const auto pts = random_points(7, 3, 2);
    const auto r = fit(pts, 0.5, 1.0 / 7.0);
    ASSERT_EQ(r.model.alpha.size(), 7);
    for (Eigen::Index k = 0; k < 7; ++k) EXPECT_EQ(r.model.alpha[k], 1.0 / 7.0);
}

TEST(Fit, TwoPointsAreSymmetric) {
    const std::vector<RealVector> pts{RealVector{{0.0, 1.0}}, RealVector{{1.0, -1.0}}};
    const auto r = fit(pts, 1.0, 1.0);
    ASSERT_EQ(r.model.alpha.size(), 2);
    EXPECT_NEAR(r.model.alpha[0], 0.5, 1e-12);
    EXPECT_NEAR(r.model.alpha[1], 0.5, 1e-12);
}

TEST(Fit, MatchesGridOracle) {
    const auto pts = random_points(5, 2, 3);
    const auto r = fit(pts, 0.7, 1.0);
    const double grid = oracle::simplex_grid_minimum(to_nested(gram(pts, 0.7)), 0.01);
    EXPECT_LE(r.model.density_limit, grid + 1e-3);
    EXPECT_LT(r.report.kkt_violation, 1e-6);
}

TEST(Fit, FeasibilityOnRandomInstances) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto pts = random_points(12, 3, 100 + s);
        const double C = 0.1 + 0.05 * static_cast<double>(s % 10);
        const auto r = fit(pts, 0.2 + 0.1 * static_cast<double>(s), C);
        EXPECT_NEAR(r.model.alpha.sum(), 1.0, 1e-8);
        EXPECT_GE(r.model.alpha.minCoeff(), -1e-12);
        EXPECT_LE(r.model.alpha.maxCoeff(), C + 1e-12);
        EXPECT_GT(r.model.density_limit, 0.0);
        EXPECT_LE(r.model.density_limit, 1.0);
        validate(r.model);
    }
}

TEST(Fit, RejectsInfeasibleCap) { EXPECT_THROW(fit(random_points(4, 2, 1), 1.0, 0.1), ConfigError); }

TEST(Fit, RejectsBadGammaAndEmptySet) {
    EXPECT_THROW(fit(random_points(4, 2, 1), 0.0, 1.0), ConfigError);
    EXPECT_THROW(fit(std::vector<RealVector>{}, 1.0, 1.0), DataError);
}

TEST(Density, Examples) {
    SvddModel<double> m;
    m.support_vectors = {RealVector{{1.0, 2.0}}};
    m.alpha = Eigen::VectorXd::Ones(1);
    EXPECT_EQ(density(m, RealVector{{1.0, 2.0}}), 1.0);
    EXPECT_LT(density(m, RealVector{{100.0, 2.0}}), 1e-300);
    m.support_vectors = {RealVector{{0.0}}, RealVector{{1.0}}};
    m.alpha = Eigen::VectorXd::Constant(2, 0.5);
    EXPECT_NEAR(density(m, RealVector{{0.0}}), 0.68393972058572117, 1e-15);
    EXPECT_THROW(density(m, RealVector(RealVector::Zero(2))), DataError);
}

TEST(Decide, SinglePoint) {
    const std::vector<RealVector> pts{RealVector{{0.5, -0.5}}};
    const auto m = fit(pts, 1.0, 1.0).model;
    EXPECT_EQ(decide(m, pts[0]), 0);
    EXPECT_EQ(decide(m, RealVector{{5.0, 5.0}}), 1);
}

TEST(Decide, AllTrainingPointsInsideWithUnitCap) {
    const auto pts = random_points(20, 4, 5);
    for (double gamma : {0.01, 0.1, 1.0, 10.0}) {
        const auto m = fit(pts, gamma, 1.0).model;
        for (const auto& p : pts) EXPECT_EQ(decide(m, p), 0) << "gamma " << gamma;
    }
}

TEST(Decide, TieIsHealthy) {
    EXPECT_EQ(decide_density(0.5, 0.5), 0);
    EXPECT_EQ(decide_density(0.5 - 0.5e-9, 0.5), 0);
    EXPECT_EQ(decide_density(0.49, 0.5), 1);
}

TEST(Invariance, Permutation) {
    auto pts = random_points(8, 3, 6);
    const auto a = fit(pts, 0.4, 1.0);
    std::vector<RealVector> rev(pts.rbegin(), pts.rend());
    const auto b = fit(rev, 0.4, 1.0);
    EXPECT_NEAR(a.model.density_limit, b.model.density_limit, 1e-10);
    const auto q = random_points(10, 3, 7);
    for (const auto& x : q) EXPECT_NEAR(density(a.model, x), density(b.model, x), 1e-8);
}

TEST(Invariance, Translation) {
    auto pts = random_points(8, 3, 8);
    const auto q = random_points(10, 3, 9);
    const RealVector shift = RealVector::Constant(3, 4.25);
    std::vector<RealVector> pts_s, q_s;
    for (const auto& p : pts) pts_s.push_back(p + shift);
    for (const auto& p : q) q_s.push_back(p + shift);
    const auto a = fit(pts, 0.5, 1.0).model;
    const auto b = fit(pts_s, 0.5, 1.0).model;
    for (size_t i = 0; i < q.size(); ++i) {
        EXPECT_NEAR(density(a, q[i]), density(b, q_s[i]), 1e-10);
        EXPECT_EQ(decide(a, q[i]), decide(b, q_s[i]));
    }
}

TEST(Monotonicity, LimitDecreasesWithGamma) {
    const auto pts = random_points(15, 3, 10);
    double prev = 2.0;
    for (double gamma = 1e-3; gamma < 100.0; gamma *= 2.0) {
        const double d = fit(pts, gamma, 1.0).model.density_limit;
        EXPECT_LE(d, prev + 1e-9);
        prev = d;
    }
}

TEST(SelectGamma, TrainingAsValidationReturnsGridMax) {
    const auto pts = random_points(15, 3, 11);
    const auto grid = default_gamma_grid();
    auto fit_at = [&](double gamma) {
        auto m = fit(pts, gamma, 1.0).model;
        return [m](const RealVector& x) { return decide(m, x); };
    };
    const auto sel = select_gamma<RealVector>(fit_at, pts, 0.05, grid);
    EXPECT_EQ(sel.gamma, grid.back());
    EXPECT_FALSE(sel.fallback);
    // One far outlier among the training points stays within a 10% budget.
    auto with_outlier = pts;
    with_outlier.push_back(RealVector::Constant(3, 50.0));
    const auto tolerant = select_gamma<RealVector>(fit_at, with_outlier, 0.1, grid);
    EXPECT_EQ(tolerant.gamma, grid.back());
    EXPECT_FALSE(tolerant.fallback);
}

TEST(SelectGamma, OffsetValidationLowersGamma) {
    const auto train = random_points(30, 2, 13);
    const auto grid = default_gamma_grid();
    auto fit_at = [&](double gamma) {
        auto m = fit(train, gamma, 1.0).model;
        return [m](const RealVector& x) { return decide(m, x); };
    };
    double prev = grid.back() * 2;
    for (double offset : {0.5, 2.0, 6.0}) {
        const auto val = random_points(30, 2, 14, 1.0, offset);
        const auto sel = select_gamma<RealVector>(fit_at, val, 0.05, grid);
        EXPECT_LE(sel.gamma, prev);
        prev = sel.gamma;
    }
    EXPECT_LT(prev, grid.back());
}

TEST(SelectGamma, FallbackAndDegenerateFits) {
    const std::vector<double> grid{1.0, 2.0, 4.0};
    const std::vector<int> val{0, 1, 2, 3};
    // Everything flagged at every gamma: smallest returned with a warning.
    const auto all = select_gamma<int>([](double) { return [](int) { return 1; }; }, val, 0.05, grid);
    EXPECT_TRUE(all.fallback);
    EXPECT_EQ(all.gamma, 1.0);
    // Degenerate fits are skipped even when they flag nothing.
    auto fit_at = [](double gamma) -> std::optional<std::function<int(int)>> {
        if (gamma > 2.0) return std::nullopt;
        return std::function<int(int)>([](int) { return 0; });
    };
    const auto sel = select_gamma<int>(fit_at, val, 0.05, grid);
    EXPECT_EQ(sel.gamma, 2.0);
    EXPECT_FALSE(sel.fallback);
}

TEST(SelectGamma, Preconditions) {
    const std::vector<int> val{0};
    auto f = [](double) { return [](int) { return 0; }; };
    EXPECT_THROW(select_gamma<int>(f, val, 0.05, std::vector<double>{}), ConfigError);
    EXPECT_THROW(select_gamma<int>(f, val, 0.05, std::vector<double>{2.0, 1.0}), ConfigError);
    EXPECT_THROW(select_gamma<int>(f, val, 1.0, std::vector<double>{1.0}), ConfigError);
    EXPECT_THROW(select_gamma<int>(f, std::vector<int>{}, 0.05, std::vector<double>{1.0}), DataError);
}

TEST(Solver, KktViolationIsNonNegative) {
    const auto K = gram(random_points(10, 2, 15), 0.8);
    const auto sol = solve_capped_simplex(K, 0.3);
    EXPECT_GE(sol.report.kkt_violation, 0.0);
    EXPECT_LT(sol.report.kkt_violation, 1e-6);
}
