#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "polylearn/ensembles.hpp"
#include "polylearn/error.hpp"
#include "polylearn/learner.hpp"
#include "polylearn/linalg.hpp"

using namespace polylearn;

namespace {

GroupedParameterVector random_theta(const std::vector<int>& counts, int player, std::uint64_t seed, double scale = 1.0) {
    FeatureLayout layout(counts, player);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::VectorXd v(static_cast<Eigen::Index>(layout.dimension()));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = normal(rng);
    return GroupedParameterVector(layout, v);
}

const std::vector<int> kCounts{3, 2, 3};

// Reference loss straight from the definition, without max subtraction, in long double.
double naive_loss(const GroupedParameterVector& theta, const Dataset& data) {
    const int i = theta.owner();
    long double total = 0;
    for (std::size_t l = 0; l < data.size(); ++l) {
        const ProfileView x = data.row(l);
        std::vector<double> z;
        for (int a = 0; a < theta.layout().owner_strategies(); ++a)
            z.push_back(dot(theta, featurize(data.strategy_counts(), i, a, x)));
        long double s = 0;
        for (double v : z) s += std::exp(static_cast<long double>(v));
        total += -z[static_cast<std::size_t>(x[static_cast<std::size_t>(i)])] + std::log(s);
    }
    return static_cast<double>(total / static_cast<long double>(data.size()));
}

LearnerConfig tight(double lambda) {
    LearnerConfig c;
    c.lambda = lambda;
    c.tolerance = 1e-10;
    c.max_iterations = 200000;
    return c;
}

}  // namespace

// --- softmax and per-sample loss ----------------------------------------------------

TEST(Softmax, MatchesNaiveAndSumsToOne) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto theta = random_theta(kCounts, 1, seed, 2.0);
        for (const Profile& x : oracle::all_profiles(kCounts)) {
            const auto s = softmax_all(theta, x);
            std::vector<double> z;
            for (int a = 0; a < 2; ++a) z.push_back(theta.score(a, x));
            const auto ref = oracle::naive_softmax(z);
            double sum = 0;
            for (int a = 0; a < 2; ++a) {
                EXPECT_NEAR(s[static_cast<std::size_t>(a)], ref[static_cast<std::size_t>(a)], 1e-14);
                EXPECT_NEAR(softmax_sigma(theta, x, a), ref[static_cast<std::size_t>(a)], 1e-14);
                sum += s[static_cast<std::size_t>(a)];
            }
            EXPECT_NEAR(sum, 1.0, 1e-14);
        }
    }
}

TEST(Softmax, StableForHugeScores) {
    FeatureLayout layout({2, 2}, 0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.dimension()));
    v(0) = 1000.0;
    v(1) = 999.0;
    GroupedParameterVector theta(layout, v);
    const auto s = softmax_all(theta, Profile{0, 0});
    EXPECT_NEAR(s[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-14);
    EXPECT_TRUE(std::isfinite(sample_loss(theta, Profile{1, 0})));
    EXPECT_NEAR(sample_loss(theta, Profile{1, 0}), 1.0 + std::log1p(std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(sample_loss(theta, Profile{0, 0}), std::log1p(std::exp(-1.0)), 1e-12);
}

TEST(SampleLoss, ZeroParametersGiveLogM) {
    const GroupedParameterVector theta(FeatureLayout(kCounts, 2));
    EXPECT_NEAR(sample_loss(theta, Profile{0, 1, 2}), std::log(3.0), 1e-15);
}

TEST(SampleLoss, NonNegativeAndMatchesNaive) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto theta = random_theta(kCounts, 0, seed + 10, 3.0);
        const Dataset data = oracle::random_dataset(seed, kCounts, 40);
        EXPECT_NEAR(empirical_loss(theta, data), naive_loss(theta, data), 1e-12);
        for (std::size_t l = 0; l < data.size(); ++l) EXPECT_GE(sample_loss(theta, data.row(l)), 0.0);
    }
}

TEST(SampleGradient, MatchesFiniteDifferencesAndGroupNormBound) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int player = static_cast<int>(seed % 3);
        const auto theta = random_theta(kCounts, player, seed + 30);
        const Dataset data = oracle::random_dataset(seed + 1, kCounts, 15);
        const Eigen::VectorXd fd = oracle::fd_gradient(
            [&](const Eigen::VectorXd& v) { return empirical_loss(GroupedParameterVector(theta.layout(), v), data); },
            theta.values());
        EXPECT_LT((gradient(theta, data).values() - fd).norm(), 1e-7);
        for (std::size_t l = 0; l < data.size(); ++l) {
            const auto g = sample_gradient(theta, data.row(l));
            for (int k = 0; k < g.layout().num_groups(); ++k) EXPECT_LE(g.group_norm(k), std::sqrt(2.0) + 1e-12);
        }
    }
}

TEST(Hessian, MatchesFiniteDifferencesAndIsPsd) {
    const auto theta = random_theta(kCounts, 0, 5);
    const Dataset data = oracle::random_dataset(6, kCounts, 25);
    const Eigen::MatrixXd h = hessian(theta, data);
    const Eigen::Index n = h.rows();
    Eigen::MatrixXd fd(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd a = theta.values(), b = theta.values();
        a(k) += 1e-5;
        b(k) -= 1e-5;
        fd.col(k) = (gradient(GroupedParameterVector(theta.layout(), a), data).values() -
                     gradient(GroupedParameterVector(theta.layout(), b), data).values()) /
                    2e-5;
    }
    EXPECT_LT((h - fd).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GE(linalg::min_eigenvalue(h), -1e-12);
    // every diagonal block is itself PSD
    for (int g = 0; g < 3; ++g) {
        const auto off = static_cast<Eigen::Index>(theta.layout().group_offset(g));
        const auto sz = static_cast<Eigen::Index>(theta.layout().group_size(g));
        EXPECT_GE(linalg::min_eigenvalue(h.block(off, off, sz, sz)), -1e-12);
    }
    EXPECT_THROW(hessian(theta, data, HessianOptions{4}), CapacityError);
}

TEST(Hessian, GaugeDirectionsAreNull) {
    const auto theta = random_theta(kCounts, 1, 8);
    const Dataset data = oracle::random_dataset(9, kCounts, 30);
    const Eigen::MatrixXd h = hessian(theta, data);
    const FeatureLayout& layout = theta.layout();
    Eigen::VectorXd ones = Eigen::VectorXd::Zero(h.rows());
    ones.head(2).setOnes();
    EXPECT_LT((h * ones).norm(), 1e-12);
    // adding a constant to column b of an opponent block shifts every score equally
    for (int g = 1; g < 3; ++g) {
        const int j = layout.player_of_group(g);
        for (int b = 0; b < kCounts[static_cast<std::size_t>(j)]; ++b) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(h.rows());
            for (int a = 0; a < 2; ++a) v(static_cast<Eigen::Index>(layout.pair_index(j, a, b))) = 1.0;
            EXPECT_LT((h * v).norm(), 1e-12);
        }
    }
}

TEST(Loss, ConvexAlongRandomLines) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = random_theta(kCounts, 2, seed, 2.0);
        const auto b = random_theta(kCounts, 2, seed + 100, 2.0);
        const Dataset data = oracle::random_dataset(seed + 200, kCounts, 30);
        for (int k = 0; k < 10; ++k) {
            const double t = u(rng);
            const GroupedParameterVector mid(a.layout(), t * a.values() + (1 - t) * b.values());
            EXPECT_LE(empirical_loss(mid, data), t * empirical_loss(a, data) + (1 - t) * empirical_loss(b, data) + 1e-12);
        }
    }
}

// --- compressed objective ----------------------------------------------------------------

TEST(PlayerObjective, AgreesWithPerSampleFormulas) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const int player = static_cast<int>(seed % 3);
        const Dataset data = oracle::random_dataset(seed + 40, kCounts, 200);
        const PlayerObjective obj(WeightedProfiles::from_dataset(data), player);
        EXPECT_LE(obj.num_contexts(), 9u);
        EXPECT_EQ(obj.total_weight(), 200.0);
        const auto theta = random_theta(kCounts, player, seed + 50, 1.5);
        Eigen::VectorXd grad;
        const double loss = obj.loss_and_gradient(theta.values(), grad);
        EXPECT_NEAR(loss, empirical_loss(theta, data), 1e-12);
        EXPECT_NEAR(obj.loss(theta.values()), loss, 1e-14);
        EXPECT_LT((grad - gradient(theta, data).values()).norm(), 1e-12);
        EXPECT_LT((obj.hessian(theta.values()) - hessian(theta, data)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(WeightedProfiles, ConstructionAndErrors) {
    const ProfileSpace space({2, 2});
    const auto w = WeightedProfiles::from_counts(space, std::vector<std::uint64_t>{3, 0, 1, 0});
    EXPECT_EQ(w.size(), 2u);
    EXPECT_EQ(w.total_weight(), 4.0);
    EXPECT_THROW(WeightedProfiles::from_counts(space, std::vector<std::uint64_t>{1, 2}), InvalidInput);
    EXPECT_THROW(WeightedProfiles::from_counts(space, std::vector<std::uint64_t>{0, 0, 0, 0}), InvalidInput);
    EXPECT_THROW(WeightedProfiles::from_pmf(space, std::vector<double>{0.5, 0.5, 0.1, -0.1}), InvalidDistribution);
    EXPECT_THROW(WeightedProfiles::from_dataset(Dataset({2, 2})), InvalidInput);
    Dataset d({2, 2});
    d.push_back(Profile{1, 0});
    d.push_back(Profile{1, 0});
    d.push_back(Profile{0, 1});
    const auto c = WeightedProfiles::from_dataset(d);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(Profile(c.profile(0).begin(), c.profile(0).end()), (Profile{0, 1}));
    EXPECT_EQ(c.weight(1), 2.0);
}

// --- proximal operator ---------------------------------------------------------------------

TEST(GroupProx, MatchesNumericMinimizer) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    const FeatureLayout layout(kCounts, 0);
    for (int trial = 0; trial < 30; ++trial) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(layout.dimension()));
        for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = n(rng);
        const double t = std::abs(n(rng)) * 1.5;
        const auto out = group_prox(GroupedParameterVector(layout, v), t);
        for (int g = 0; g < 3; ++g) {
            const Eigen::VectorXd vg = GroupedParameterVector(layout, v).group(g);
            const Eigen::VectorXd ref = oracle::prox_numeric(vg, t);
            EXPECT_LT((out.group(g) - ref).norm(), 1e-8);
            // optimality: v - u lies in t * subdifferential of ||.|| at u
            const Eigen::VectorXd u = out.group(g);
            if (u.norm() > 0) {
                EXPECT_LT((vg - u - t * u / u.norm()).norm(), 1e-12);
            } else {
                EXPECT_LE(vg.norm(), t + 1e-12);
            }
        }
    }
}

TEST(GroupProx, EdgeCases) {
    const FeatureLayout layout({2, 2}, 0);
    Eigen::VectorXd v(6);
    v << 3, 4, 0, 0, 0, 0;
    const auto shrunk = group_prox(GroupedParameterVector(layout, v), 2.5);
    EXPECT_NEAR(shrunk.values()(0), 1.5, 1e-15);
    EXPECT_NEAR(shrunk.values()(1), 2.0, 1e-15);
    EXPECT_EQ(group_prox(GroupedParameterVector(layout, v), 5.0).values().norm(), 0.0);
    EXPECT_EQ(group_prox(GroupedParameterVector(layout, v), 0.0).values(), v);
    EXPECT_EQ(group_prox(GroupedParameterVector(layout, v), 10.0, false).values(), v);
    EXPECT_THROW(group_prox(GroupedParameterVector(layout, v), -1.0), InvalidParameter);
}

// --- solver ---------------------------------------------------------------------------------

TEST(Solver, KktConditionsAtSolution) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const int player = static_cast<int>(seed % 3);
        const Dataset data = oracle::random_dataset(seed + 60, kCounts, 300);
        const double lambda = 0.01 + 0.02 * static_cast<double>(seed);
        const PlayerObjective obj(WeightedProfiles::from_dataset(data), player);
        const FitResult fit = fit_player(obj, tight(lambda));
        ASSERT_TRUE(fit.converged);
        Eigen::VectorXd grad;
        obj.loss_and_gradient(fit.theta.values(), grad);
        const GroupedParameterVector g(obj.layout(), grad);
        for (int k = 0; k < obj.layout().num_groups(); ++k) {
            const Eigen::VectorXd th = fit.theta.group(k);
            if (th.norm() > 0) {
                EXPECT_LT((g.group(k) + lambda * th / th.norm()).norm(), 1e-6);
            } else {
                EXPECT_LE(g.group(k).norm(), lambda + 1e-6);
            }
        }
        EXPECT_NEAR(fit.objective, regularized_objective(obj, fit.theta.values(), tight(lambda)), 1e-12);
    }
}

TEST(Solver, ObjectiveBeatsZeroAndMonotoneInLambda) {
    const Dataset data = oracle::random_dataset(70, kCounts, 300);
    const PlayerObjective obj(WeightedProfiles::from_dataset(data), 1);
    double prev = -1.0;
    for (double lambda : {0.0, 0.01, 0.05, 0.2, 1.0}) {
        const FitResult fit = fit_player(obj, tight(lambda));
        EXPECT_LE(fit.objective, regularized_objective(obj, Eigen::VectorXd::Zero(fit.theta.values().size()), tight(lambda)) + 1e-12);
        EXPECT_GE(fit.objective, prev - 1e-9);
        prev = fit.objective;
    }
}

TEST(Solver, LargeLambdaGivesZero) {
    const Dataset data = oracle::random_dataset(71, kCounts, 100);
    // every group's gradient at zero has norm at most sqrt(2)
    const FitResult fit = fit_player(data, 0, tight(2.0));
    EXPECT_EQ(fit.theta.values().norm(), 0.0);
    EXPECT_TRUE(fit.converged);
}

TEST(Solver, FixedStepAgreesWithBacktracking) {
    const Dataset data = oracle::random_dataset(72, kCounts, 200);
    LearnerConfig fixed = tight(0.05);
    fixed.step_rule = StepRule::fixed_lipschitz;
    const FitResult a = fit_player(data, 2, tight(0.05));
    const FitResult b = fit_player(data, 2, fixed);
    ASSERT_TRUE(a.converged && b.converged);
    EXPECT_NEAR(a.objective, b.objective, 1e-9);
}

TEST(Solver, IterationLimitAndDeadline) {
    const Dataset data = oracle::random_dataset(73, kCounts, 200);
    LearnerConfig c = tight(0.001);
    c.max_iterations = 2;
    const FitResult short_fit = fit_player(data, 0, c);
    EXPECT_FALSE(short_fit.converged);
    EXPECT_EQ(short_fit.iterations, 2);
    c = tight(0.001);
    c.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
    const FitResult late = fit_player(data, 0, c);
    EXPECT_TRUE(late.timed_out);
    EXPECT_FALSE(late.converged);
}

TEST(Solver, ConfigValidation) {
    LearnerConfig c;
    c.lambda = -1;
    EXPECT_THROW(validate(c), InvalidParameter);
    c = LearnerConfig{};
    c.delta = 1.0;
    EXPECT_THROW(validate(c), InvalidParameter);
    c = LearnerConfig{};
    c.tolerance = 0;
    EXPECT_THROW(validate(c), InvalidParameter);
    c = LearnerConfig{};
    c.edge_threshold = std::numeric_limits<double>::infinity();
    EXPECT_NO_THROW(validate(c));
}

TEST(EdgeCutoff, RelativeAbsoluteAndInfinite) {
    const FeatureLayout layout({2, 2, 2}, 0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(10);
    v(2) = 2.0;   // group 1 norm 2
    v(6) = 1e-7;  // group 2 norm 1e-7
    const GroupedParameterVector theta(layout, v);
    LearnerConfig c;
    EXPECT_NEAR(edge_cutoff(theta, c), 2e-6, 1e-20);
    c.edge_threshold_relative = false;
    EXPECT_EQ(edge_cutoff(theta, c), 1e-6);
    c.edge_threshold = std::numeric_limits<double>::infinity();
    EXPECT_TRUE(std::isinf(edge_cutoff(theta, c)));
    c.edge_threshold_relative = true;
    EXPECT_TRUE(std::isinf(edge_cutoff(GroupedParameterVector(layout), c)));
}

TEST(FitGame, ParallelMatchesSerialAndEdgesFollowThreshold) {
    const PolymatrixGame g = random_game(RandomGameSpec{4, 1, 3, std::sqrt(2.0), 3});
    const Dataset data = oracle::random_dataset(74, g.strategy_counts(), 500);
    LearnerConfig c;
    c.lambda = 0.03;
    const auto w = WeightedProfiles::from_dataset(data);
    const LearnedModel a = fit_game(w, c);
    const LearnedModel b = serial::fit_game(w, c);
    EXPECT_EQ(a.game, b.game);
    EXPECT_EQ(a.edges, b.edges);
    for (std::size_t i = 0; i < a.fits.size(); ++i) EXPECT_EQ(a.fits[i].theta.values(), b.fits[i].theta.values());
    for (const auto& [i, j] : a.edges) {
        const auto& theta = a.fits[static_cast<std::size_t>(i)].theta;
        EXPECT_GT(theta.group_norm(theta.layout().group_of_player(j)), edge_cutoff(theta, c));
    }
    EXPECT_EQ(a.edges, a.game.edges());
    c.edge_threshold = std::numeric_limits<double>::infinity();
    EXPECT_EQ(fit_game(w, c).game.num_edges(), 0u);
}

TEST(FitGame, RecoversHardEnsembleFromPopulationScaleSample) {
    const HardEnsemble e = hard_ensemble(HardEnsembleSpec{4, 2, 2, std::nullopt, std::nullopt, 5});
    const ObservationModel model(e.game, NoiseModel::local_uniform(4, 0.9));
    const std::uint64_t n = 10'000'000;
    const auto w = WeightedProfiles::from_counts(model.space(), model.sample_counts(n, 1));
    LearnerConfig c;
    c.lambda = lambda_schedule(n, 4, 2, c);
    const LearnedModel fit = fit_game(w, c);
    for (const auto& f : fit.fits) EXPECT_TRUE(f.converged);
    EXPECT_TRUE(enumerate_psne(fit.game).same_profiles(enumerate_psne(e.game)));
}

// --- schedules ---------------------------------------------------------------------------------

TEST(Schedules, LambdaMatchesFormula) {
    LearnerConfig c;
    for (std::uint64_t n : {1ULL, 100ULL, 123456ULL}) {
        for (int d : {0, 1, 4}) {
            c.nu_estimate = 0.0;
            EXPECT_NEAR(lambda_schedule(n, 7, d, c), oracle::lambda_schedule(static_cast<double>(n), 7, d, 0.0, 0.01), 1e-14);
            c.nu_estimate = 0.02;
            c.delta = 0.05;
            EXPECT_NEAR(lambda_schedule(n, 7, d, c), oracle::lambda_schedule(static_cast<double>(n), 7, d, 0.02, 0.05), 1e-14);
            c.delta = 0.01;
        }
    }
    // decreasing in n
    c.nu_estimate = 0;
    EXPECT_GT(lambda_schedule(10, 5, 1, c), lambda_schedule(1000, 5, 1, c));
    EXPECT_THROW(lambda_schedule(0, 5, 1, c), InvalidParameter);
    EXPECT_THROW(lambda_schedule(10, 5, 5, c), InvalidParameter);
}

TEST(Schedules, SampleScheduleRoundsUpAndRejectsInfeasible) {
    LearnerConfig c;
    for (double cmin : {0.05, 0.2, 1.0}) {
        const double real = oracle::sample_schedule_real(7, 1, 3, cmin, 0.0, 0.01);
        const std::uint64_t n = sample_schedule(7, 1, 3, cmin, c);
        EXPECT_GT(static_cast<double>(n), real);
        EXPECT_LE(static_cast<double>(n), real + 1.0);
    }
    EXPECT_THROW(sample_schedule(7, 1, 3, 0.0, c), ScheduleInfeasible);
    c.nu_estimate = 1.0 / (36.0 * 9 * 4);
    EXPECT_THROW(sample_schedule(7, 1, 3, 1.0, c), ScheduleInfeasible);
    EXPECT_NEAR(theory_epsilon(2, 0.01, 0.5), 48.0 * 3 * 0.01 / 0.5, 1e-15);
    EXPECT_THROW(theory_epsilon(2, 0.01, 0.0), ScheduleInfeasible);
}

// --- diagnostics -----------------------------------------------------------------------------------

TEST(Diagnostics, SupportAndEigenvalues) {
    const HardEnsemble e = hard_ensemble(HardEnsembleSpec{3, 2, 2, std::vector<int>{0, 1}, std::vector<int>{0, 1}, 0});
    const ObservationModel model(e.game, NoiseModel::local_uniform(3, 0.8));
    const auto pop = WeightedProfiles::from_pmf(model.space(), model.pmf_table());
    const GroupedParameterVector theta = pack_parameters(e.game, 2);
    EXPECT_EQ(support_groups(theta), (std::vector<int>{0, 1, 2}));
    const GroupedParameterVector lone = pack_parameters(e.game, 0);
    EXPECT_EQ(support_groups(lone), (std::vector<int>{0}));
    EXPECT_EQ(support_indices(lone.layout(), std::vector<int>{2}), (std::vector<std::size_t>{0, 1, 6, 7, 8, 9}));
    // the full Hessian carries exact null directions; the identifiable part is positive
    EXPECT_NEAR(diagnostics_min_eigen(theta, pop, true), 0.0, 1e-12);
    EXPECT_GT(diagnostics_min_eigen(theta, pop, true, HessianSubspace::identifiable), 1e-3);
    EXPECT_GT(diagnostics_min_eigen(theta, pop, false, HessianSubspace::identifiable), 1e-3);
    EXPECT_LE(diagnostics_max_eigen(theta, pop, false), lipschitz_bound(theta.layout()) + 1e-12);
}
