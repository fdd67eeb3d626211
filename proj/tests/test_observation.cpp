#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "polylearn/ensembles.hpp"
#include "polylearn/error.hpp"
#include "polylearn/observation.hpp"

using namespace polylearn;

namespace {

// Three-player game with exactly two equilibria: (0,0,0) and (1,1,1) of a
// coordination game where player 2 has a third dominated strategy.
PolymatrixGame coordination_game() {
    GameBuilder b({2, 2, 3});
    Eigen::MatrixXd m22 = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd m23 = Eigen::MatrixXd::Zero(2, 3);
    m23(0, 0) = 1;
    m23(1, 1) = 1;
    Eigen::MatrixXd m32 = Eigen::MatrixXd::Zero(3, 2);
    m32(0, 0) = 1;
    m32(1, 1) = 1;
    b.set_edge(0, 1, m22).set_edge(1, 0, m22).set_edge(1, 2, m23).set_edge(2, 0, m32).set_edge(2, 1, m32);
    b.set_individual(2, Eigen::Vector3d(0, 0, -0.5));
    return b.build();
}

void expect_frequencies_match(const std::vector<double>& pmf, const std::vector<std::uint64_t>& counts, std::uint64_t n) {
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        const double expect = pmf[k] * static_cast<double>(n);
        const double sd = std::sqrt(static_cast<double>(n) * pmf[k] * (1.0 - pmf[k]));
        EXPECT_NEAR(static_cast<double>(counts[k]), expect, 5.0 * sd + 1.0) << "profile index " << k;
    }
}

std::vector<std::uint64_t> histogram(const Dataset& d) {
    std::vector<std::uint64_t> h(d.space().size_saturated(), 0);
    for (std::size_t l = 0; l < d.size(); ++l) ++h[d.space().index_of(d.row(l))];
    return h;
}

}  // namespace

TEST(Observation, CoordinationGameHasTwoEquilibria) {
    const PolymatrixGame g = coordination_game();
    EXPECT_EQ(enumerate_psne(g).profiles(), (std::vector<Profile>{{0, 0, 0}, {1, 1, 1}}));
}

TEST(GlobalNoise, PmfMatchesOracleAndSumsToOne) {
    const PolymatrixGame g = coordination_game();
    for (double q : {2.0 / 12.0, 0.3, 0.75, 1.0}) {
        const ObservationModel model(g, NoiseModel::global(q));
        const auto table = model.pmf_table();
        EXPECT_NEAR(std::accumulate(table.begin(), table.end(), 0.0), 1.0, 1e-12);
        for (const Profile& x : oracle::all_profiles(g.strategy_counts())) {
            EXPECT_NEAR(model.pmf(x), oracle::global_pmf(g, q, x), 1e-15);
            EXPECT_NEAR(global_noise_pmf(g, NoiseModel::global(q), x), oracle::global_pmf(g, q, x), 1e-15);
        }
    }
}

TEST(GlobalNoise, QOneGivesUniformOverEquilibria) {
    const PolymatrixGame g = coordination_game();
    const ObservationModel model(g, NoiseModel::global(1.0));
    EXPECT_EQ(model.pmf(Profile{0, 0, 0}), 0.5);
    EXPECT_EQ(model.pmf(Profile{0, 1, 2}), 0.0);
    const Dataset d = model.sample(1000, 3);
    for (std::size_t l = 0; l < d.size(); ++l) EXPECT_TRUE(model.equilibria().contains(d.row(l)));
}

TEST(GlobalNoise, ObservationConditionAroundBoundary) {
    const PolymatrixGame g = coordination_game();
    const ObservationModel at(g, NoiseModel::global(2.0 / 12.0));
    EXPECT_FALSE(check_observation_condition(at.pmf_table(), at.equilibria()));
    const ObservationModel above(g, NoiseModel::global(0.2));
    EXPECT_TRUE(check_observation_condition(above.pmf_table(), above.equilibria()));
    EXPECT_THROW(ObservationModel(g, NoiseModel::global(0.1)), InvalidParameter);
    EXPECT_THROW(ObservationModel(g, NoiseModel::global(1.2)), InvalidParameter);
}

TEST(GlobalNoise, UndefinedCases) {
    GameBuilder pennies({2, 2});
    Eigen::MatrixXd m(2, 2);
    m << 1, -1, -1, 1;
    pennies.set_edge(0, 1, m).set_edge(1, 0, -m);
    EXPECT_THROW(ObservationModel(pennies.build(), NoiseModel::global(0.9)), ModelUndefined);
    const PolymatrixGame zero = GameBuilder({2, 2}).build();
    EXPECT_THROW(ObservationModel(zero, NoiseModel::global(0.9)), ModelUndefined);
    EXPECT_NO_THROW(ObservationModel(zero, NoiseModel::global(1.0)));
}

TEST(LocalNoise, PmfMatchesOracle) {
    const PolymatrixGame g = coordination_game();
    const std::vector<double> qi{0.6, 0.9, 0.75};
    const ObservationModel model(g, NoiseModel::local(qi));
    const auto table = model.pmf_table();
    EXPECT_NEAR(std::accumulate(table.begin(), table.end(), 0.0), 1.0, 1e-12);
    for (const Profile& x : oracle::all_profiles(g.strategy_counts())) {
        EXPECT_NEAR(model.pmf(x), oracle::local_pmf(g, qi, x), 1e-15);
        EXPECT_NEAR(local_noise_pmf(g, NoiseModel::local(qi), x), oracle::local_pmf(g, qi, x), 1e-15);
    }
    EXPECT_TRUE(check_observation_condition(table, model.equilibria()));
}

TEST(LocalNoise, ParameterChecks) {
    const PolymatrixGame g = coordination_game();
    EXPECT_THROW(ObservationModel(g, NoiseModel::local({0.6, 0.6})), InvalidParameter);
    EXPECT_THROW(ObservationModel(g, NoiseModel::local({0.6, 0.5, 0.6})), InvalidParameter);
    EXPECT_THROW(ObservationModel(g, NoiseModel::local({0.6, 1.01, 0.6})), InvalidParameter);
    const PolymatrixGame single = GameBuilder({1, 2}).build();
    EXPECT_THROW(ObservationModel(single, NoiseModel::local_uniform(2, 0.7)), ModelUndefined);
}

TEST(LocalNoise, HardEnsembleMarginals) {
    // one equilibrium: each coordinate is kept with probability q_i
    const HardEnsemble e = hard_ensemble(HardEnsembleSpec{4, 2, 3, std::nullopt, std::nullopt, 9});
    const ObservationModel model(e.game, NoiseModel::local_uniform(4, 0.8));
    const Dataset d = model.sample(40000, 17);
    for (int i = 0; i < 4; ++i) {
        std::size_t hit = 0;
        for (std::size_t l = 0; l < d.size(); ++l) hit += d.row(l)[static_cast<std::size_t>(i)] == e.equilibrium[static_cast<std::size_t>(i)];
        EXPECT_NEAR(static_cast<double>(hit) / 40000.0, 0.8, 5.0 * std::sqrt(0.16 / 40000.0));
    }
}

TEST(Sampling, FrequenciesMatchPmf) {
    const PolymatrixGame g = coordination_game();
    for (const NoiseModel& noise : {NoiseModel::global(0.4), NoiseModel::local({0.7, 0.8, 0.6})}) {
        const ObservationModel model(g, noise);
        const std::uint64_t n = 60000;
        expect_frequencies_match(model.pmf_table(), histogram(model.sample(n, 5)), n);
        expect_frequencies_match(model.pmf_table(), model.sample_counts(n, 6), n);
    }
}

TEST(Sampling, CountsSumToNAndScaleToHugeN) {
    const PolymatrixGame g = coordination_game();
    const ObservationModel model(g, NoiseModel::local({0.7, 0.8, 0.6}));
    const std::uint64_t n = 1'000'000'000'000ULL;
    const auto counts = model.sample_counts(n, 1);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}), n);
    const auto table = model.pmf_table();
    for (std::size_t k = 0; k < table.size(); ++k)
        EXPECT_NEAR(static_cast<double>(counts[k]) / static_cast<double>(n), table[k], 1e-5);
}

TEST(Sampling, DeterministicAndSerialEquivalent) {
    const PolymatrixGame g = random_game(RandomGameSpec{5, 2, 3, std::sqrt(2.0), 12});
    if (enumerate_psne(g).empty()) GTEST_SKIP() << "drawn game has no equilibrium";
    const ObservationModel model(g, NoiseModel::local_uniform(5, 0.6));
    const std::size_t n = 3 * kSampleChunk + 17;
    const Dataset a = model.sample(n, 42);
    EXPECT_EQ(a, model.sample(n, 42));
    EXPECT_EQ(a, model.sample_serial(n, 42));
    EXPECT_FALSE(a == model.sample(n, 43));
    EXPECT_EQ(a.size(), n);
    EXPECT_EQ(model.sample_counts(1000, 8), model.sample_counts(1000, 8));
    EXPECT_THROW(model.sample(0, 1), InvalidInput);
}

TEST(Sampling, FromTable) {
    const ProfileSpace space({2, 3});
    const std::vector<double> pmf{0.1, 0.0, 0.2, 0.3, 0.4, 0.0};
    const Dataset d = sample_from_table(space, pmf, 50000, 4);
    const auto h = histogram(d);
    EXPECT_EQ(h[1], 0u);
    EXPECT_EQ(h[5], 0u);
    expect_frequencies_match(pmf, h, 50000);
    EXPECT_THROW(sample_from_table(space, std::vector<double>{0.5, 0.5}, 10, 1), InvalidDistribution);
    EXPECT_THROW(sample_from_table(space, std::vector<double>{0.5, 0.6, 0, 0, 0, -0.1}, 10, 1), InvalidDistribution);
    EXPECT_THROW(sample_from_table(space, std::vector<double>{0.5, 0.4, 0, 0, 0, 0}, 10, 1), InvalidDistribution);
}

TEST(Dataset, PushBackValidates) {
    Dataset d({2, 3});
    d.push_back(Profile{1, 2});
    EXPECT_THROW(d.push_back(Profile{2, 0}), InvalidInput);
    EXPECT_THROW(d.push_back(Profile{0}), InvalidInput);
    EXPECT_EQ(d.size(), 1u);
}
