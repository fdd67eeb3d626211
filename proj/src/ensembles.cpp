#include "polylearn/ensembles.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "polylearn/error.hpp"
#include "polylearn/rng.hpp"

namespace polylearn {

void validate(const RandomGameSpec& s) {
    if (s.p < 2) throw InvalidSpec("random game needs at least 2 players, got p = " + std::to_string(s.p));
    if (s.d < 1 || s.d > s.p - 1) {
        throw InvalidSpec("degree must satisfy 1 <= d <= p-1, got d = " + std::to_string(s.d) + " with p = " +
                          std::to_string(s.p));
    }
    if (s.m < 2) throw InvalidSpec("random game needs m >= 2, got " + std::to_string(s.m));
    if (!(s.payoff_std >= 0.0) || !std::isfinite(s.payoff_std)) {
        throw InvalidSpec("payoff standard deviation must be finite and non-negative");
    }
}

PolymatrixGame random_game(const RandomGameSpec& s) {
    validate(s);
    Rng rng = make_rng(s.seed);
    std::normal_distribution<double> normal(0.0, s.payoff_std);
    GameBuilder builder(std::vector<int>(static_cast<std::size_t>(s.p), s.m));
    std::vector<int> others;
    for (int i = 0; i < s.p; ++i) {
        others.clear();
        for (int j = 0; j < s.p; ++j)
            if (j != i) others.push_back(j);
        std::vector<int> chosen;
        std::sample(others.begin(), others.end(), std::back_inserter(chosen), s.d, rng);
        for (int j : chosen) {
            Eigen::MatrixXd u = Eigen::MatrixXd::Zero(s.m, s.m);
            for (int a = 0; a < s.m - 1; ++a)
                for (int b = 0; b < s.m; ++b) u(a, b) = normal(rng);
            // a draw of exactly zero everywhere would drop the edge; keep the graph regular
            if ((u.array() == 0.0).all()) u(0, 0) = std::numeric_limits<double>::min();
            builder.set_edge(i, j, std::move(u));
        }
    }
    return builder.build();
}

Strategy maj(std::span<const Strategy> a) {
    if (a.empty()) throw InvalidInput("majority of an empty vector");
    const Strategy top = *std::max_element(a.begin(), a.end());
    if (*std::min_element(a.begin(), a.end()) < 0) throw InvalidInput("majority of a negative strategy");
    std::vector<int> counts(static_cast<std::size_t>(top) + 1, 0);
    for (Strategy s : a) ++counts[static_cast<std::size_t>(s)];
    // max_element returns the first maximum, i.e. the lowest strategy
    return static_cast<Strategy>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

namespace {

bool has_two_distinct(const std::vector<Strategy>& a) {
    return std::adjacent_find(a.begin(), a.end(), std::not_equal_to<>()) != a.end();
}

}  // namespace

void validate(const HardEnsembleSpec& s) {
    if (s.p < 3) throw InvalidSpec("hard ensemble needs at least 3 players, got p = " + std::to_string(s.p));
    if (s.d < 2 || s.d > s.p - 1) {
        throw InvalidSpec("hard ensemble needs 2 <= d <= p-1 (two influential players with distinct targets and one "
                          "follower), got d = " +
                          std::to_string(s.d));
    }
    if (s.m < 2) throw InvalidSpec("hard ensemble needs m >= 2, got " + std::to_string(s.m));
    if (s.influential) {
        std::vector<int> inf = *s.influential;
        std::sort(inf.begin(), inf.end());
        if (static_cast<int>(inf.size()) != s.d) {
            throw InvalidSpec("influential set has " + std::to_string(inf.size()) + " players, expected d = " +
                              std::to_string(s.d));
        }
        if (std::adjacent_find(inf.begin(), inf.end()) != inf.end()) throw InvalidSpec("influential set has duplicates");
        if (inf.front() < 0 || inf.back() >= s.p) throw InvalidSpec("influential player out of range");
    }
    if (s.target) {
        if (static_cast<int>(s.target->size()) != s.d) {
            throw InvalidSpec("target has " + std::to_string(s.target->size()) + " entries, expected d = " +
                              std::to_string(s.d));
        }
        for (Strategy a : *s.target)
            if (a < 0 || a >= s.m) throw InvalidSpec("target strategy out of range");
        if (!has_two_distinct(*s.target)) throw InvalidSpec("target must contain at least two distinct strategies");
    }
}

HardEnsemble hard_ensemble(const HardEnsembleSpec& s) {
    validate(s);
    Rng rng = make_rng(s.seed);
    HardEnsemble out;
    if (s.influential) {
        out.influential = *s.influential;
    } else {
        std::vector<int> all(static_cast<std::size_t>(s.p));
        std::iota(all.begin(), all.end(), 0);
        std::sample(all.begin(), all.end(), std::back_inserter(out.influential), s.d, rng);
    }
    if (s.target) {
        out.target = *s.target;
        std::vector<std::size_t> order(out.influential.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return out.influential[a] < out.influential[b]; });
        std::vector<int> inf;
        std::vector<Strategy> tgt;
        for (std::size_t k : order) {
            inf.push_back(out.influential[k]);
            tgt.push_back(out.target[k]);
        }
        out.influential = std::move(inf);
        out.target = std::move(tgt);
    } else {
        std::sort(out.influential.begin(), out.influential.end());
        std::uniform_int_distribution<Strategy> pick(0, s.m - 1);
        do {
            out.target.assign(static_cast<std::size_t>(s.d), 0);
            for (Strategy& a : out.target) a = pick(rng);
        } while (!has_two_distinct(out.target));
    }

    std::vector<bool> is_influential(static_cast<std::size_t>(s.p), false);
    for (int i : out.influential) is_influential[static_cast<std::size_t>(i)] = true;

    GameBuilder builder(std::vector<int>(static_cast<std::size_t>(s.p), s.m));
    for (std::size_t k = 0; k < out.influential.size(); ++k) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(s.m);
        u(out.target[k]) = 1.0;
        builder.set_individual(out.influential[k], u);
    }
    Eigen::VectorXd bonus(s.m);
    for (int x = 0; x < s.m; ++x) bonus(x) = 1.0 / (2.0 * (x + 1));
    const Eigen::MatrixXd match = Eigen::MatrixXd::Identity(s.m, s.m);
    for (int j = 0; j < s.p; ++j) {
        if (is_influential[static_cast<std::size_t>(j)]) continue;
        builder.set_individual(j, bonus);
        for (int i : out.influential) builder.set_edge(j, i, match);
    }
    out.game = builder.build();

    const Strategy follow = maj(out.target);
    out.equilibrium.assign(static_cast<std::size_t>(s.p), follow);
    for (std::size_t k = 0; k < out.influential.size(); ++k) {
        out.equilibrium[static_cast<std::size_t>(out.influential[k])] = out.target[k];
    }
    return out;
}

PolymatrixGame hard_game(const HardEnsembleSpec& spec) { return hard_ensemble(spec).game; }

}  // namespace polylearn
