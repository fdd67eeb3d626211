#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "polylearn/game.hpp"
#include "polylearn/profile.hpp"

namespace polylearn {

/// Group structure of player i's linear-form parameters.
///
/// Group 0 is the individual-payoff block (length m_i). Groups 1..p-1 are
/// the pairwise blocks for the other players in increasing player order
/// (length m_i * m_j). Inside a pairwise block entry (a, b) sits at a * m_j + b.
class FeatureLayout {
public:
    FeatureLayout() = default;
    FeatureLayout(std::vector<int> strategy_counts, int owner);

    int owner() const noexcept { return owner_; }
    int num_players() const noexcept { return static_cast<int>(counts_.size()); }
    const std::vector<int>& strategy_counts() const noexcept { return counts_; }
    int owner_strategies() const noexcept { return counts_[static_cast<std::size_t>(owner_)]; }

    int num_groups() const noexcept { return num_players(); }
    std::size_t dimension() const noexcept { return offsets_.back(); }
    std::size_t group_offset(int group) const { return offsets_.at(static_cast<std::size_t>(group)); }
    std::size_t group_size(int group) const {
        return offsets_.at(static_cast<std::size_t>(group) + 1) - offsets_.at(static_cast<std::size_t>(group));
    }

    /// Group holding u^{i,j}; the owner maps to group 0.
    int group_of_player(int player) const;
    /// Inverse of group_of_player (group 0 maps to the owner).
    int player_of_group(int group) const;

    std::size_t intercept_index(Strategy a) const { return static_cast<std::size_t>(a); }
    std::size_t pair_index(int player, Strategy a, Strategy b) const;

    /// Positions of the p ones in f^i(a, x_{-i}); x_i is ignored.
    void active_indices(Strategy a, ProfileView x, std::span<std::size_t> out) const;

    friend bool operator==(const FeatureLayout& a, const FeatureLayout& b) {
        return a.owner_ == b.owner_ && a.counts_ == b.counts_;
    }

private:
    std::vector<int> counts_;
    int owner_ = 0;
    std::vector<std::size_t> offsets_{0};
};

/// Indicator features f^i(a, x_{-i}), one block per group.
struct FeatureVector {
    std::vector<Eigen::VectorXd> blocks;

    Eigen::VectorXd flat() const;
};

/// Builds f^i(a, x_{-i}); x_i is ignored.
FeatureVector featurize(const std::vector<int>& strategy_counts, int player, Strategy a, ProfileView x);

/// Player i's parameter vector theta^i laid out by FeatureLayout.
class GroupedParameterVector {
public:
    GroupedParameterVector() = default;
    explicit GroupedParameterVector(FeatureLayout layout);
    GroupedParameterVector(FeatureLayout layout, Eigen::VectorXd values);

    const FeatureLayout& layout() const noexcept { return layout_; }
    int owner() const noexcept { return layout_.owner(); }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(values_.size()); }

    Eigen::VectorXd& values() noexcept { return values_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }

    auto group(int g) {
        return values_.segment(static_cast<Eigen::Index>(layout_.group_offset(g)),
                               static_cast<Eigen::Index>(layout_.group_size(g)));
    }
    auto group(int g) const {
        return values_.segment(static_cast<Eigen::Index>(layout_.group_offset(g)),
                               static_cast<Eigen::Index>(layout_.group_size(g)));
    }

    double group_norm(int g) const { return group(g).norm(); }
    std::vector<double> group_norms() const;
    /// sum_g ||theta_g||_2
    double norm_12() const;
    /// max_g ||theta_g||_2
    double norm_inf2() const;

    /// theta^T f^i(a, x_{-i}) evaluated sparsely; x_i is ignored.
    double score(Strategy a, ProfileView x) const;

    /// Indices of groups with a nonzero entry.
    std::vector<int> nonzero_groups() const;

    bool all_finite() const { return values_.allFinite(); }

private:
    FeatureLayout layout_;
    Eigen::VectorXd values_;
};

double dot(const GroupedParameterVector& theta, const FeatureVector& f);

/// theta^i packed from the game's matrices: group 0 = u^{i,i}, group j = u^{i,j} (zero if absent).
GroupedParameterVector pack_parameters(const PolymatrixGame& game, int player);

/// Writes theta's blocks into the builder as player i's payoffs. A pairwise
/// group is stored as an edge only when it is nonzero and keep(group) is true.
template <class KeepGroup>
void unpack_parameters(const GroupedParameterVector& theta, GameBuilder& builder, KeepGroup keep);
void unpack_parameters(const GroupedParameterVector& theta, GameBuilder& builder);

/// Rebuilds a game from one parameter vector per player.
PolymatrixGame unpack_game(std::span<const GroupedParameterVector> thetas);

// --- template implementation -------------------------------------------------

template <class KeepGroup>
void unpack_parameters(const GroupedParameterVector& theta, GameBuilder& builder, KeepGroup keep) {
    const FeatureLayout& layout = theta.layout();
    const int i = layout.owner();
    const int mi = layout.owner_strategies();
    builder.set_individual(i, theta.group(0));
    for (int g = 1; g < layout.num_groups(); ++g) {
        const int j = layout.player_of_group(g);
        const int mj = layout.strategy_counts()[static_cast<std::size_t>(j)];
        auto block = theta.group(g);
        if (!keep(g) || (block.array() == 0.0).all()) {
            builder.remove_edge(i, j);
            continue;
        }
        Eigen::MatrixXd u(mi, mj);
        for (int a = 0; a < mi; ++a)
            for (int b = 0; b < mj; ++b) u(a, b) = block(a * mj + b);
        builder.set_edge(i, j, std::move(u));
    }
}

}  // namespace polylearn
