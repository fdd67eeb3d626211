#include "polylearn/features.hpp"

#include <algorithm>

#include "polylearn/error.hpp"

namespace polylearn {

FeatureLayout::FeatureLayout(std::vector<int> strategy_counts, int owner)
    : counts_(std::move(strategy_counts)), owner_(owner) {
    ProfileSpace(counts_).validate_player(owner);
    const auto mi = static_cast<std::size_t>(counts_[static_cast<std::size_t>(owner_)]);
    offsets_.assign(1, 0);
    offsets_.push_back(mi);
    for (int j = 0; j < num_players(); ++j) {
        if (j == owner_) continue;
        offsets_.push_back(offsets_.back() + mi * static_cast<std::size_t>(counts_[static_cast<std::size_t>(j)]));
    }
}

int FeatureLayout::group_of_player(int player) const {
    if (player < 0 || player >= num_players()) throw InvalidInput("player index out of range");
    if (player == owner_) return 0;
    return player < owner_ ? player + 1 : player;
}

int FeatureLayout::player_of_group(int group) const {
    if (group < 0 || group >= num_groups()) throw InvalidInput("group index out of range");
    if (group == 0) return owner_;
    return group - 1 < owner_ ? group - 1 : group;
}

std::size_t FeatureLayout::pair_index(int player, Strategy a, Strategy b) const {
    const int g = group_of_player(player);
    if (g == 0) throw InvalidInput("pair index requested for the owner itself");
    const int mj = counts_[static_cast<std::size_t>(player)];
    return offsets_[static_cast<std::size_t>(g)] + static_cast<std::size_t>(a) * static_cast<std::size_t>(mj) +
           static_cast<std::size_t>(b);
}

void FeatureLayout::active_indices(Strategy a, ProfileView x, std::span<std::size_t> out) const {
    out[0] = static_cast<std::size_t>(a);
    std::size_t g = 1;
    for (int j = 0; j < num_players(); ++j) {
        if (j == owner_) continue;
        const auto mj = static_cast<std::size_t>(counts_[static_cast<std::size_t>(j)]);
        out[g] = offsets_[g] + static_cast<std::size_t>(a) * mj + static_cast<std::size_t>(x[static_cast<std::size_t>(j)]);
        ++g;
    }
}

Eigen::VectorXd FeatureVector::flat() const {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.size();
    Eigen::VectorXd out(n);
    Eigen::Index k = 0;
    for (const auto& b : blocks) {
        out.segment(k, b.size()) = b;
        k += b.size();
    }
    return out;
}

FeatureVector featurize(const std::vector<int>& strategy_counts, int player, Strategy a, ProfileView x) {
    ProfileSpace space(strategy_counts);
    space.validate_strategy(player, a);
    if (x.size() != strategy_counts.size()) throw InvalidInput("profile length does not match the game");
    for (int j = 0; j < space.num_players(); ++j) {
        if (j != player) space.validate_strategy(j, x[static_cast<std::size_t>(j)]);
    }
    const int mi = strategy_counts[static_cast<std::size_t>(player)];
    FeatureVector f;
    f.blocks.push_back(Eigen::VectorXd::Zero(mi));
    f.blocks.back()(a) = 1.0;
    for (int j = 0; j < space.num_players(); ++j) {
        if (j == player) continue;
        const int mj = strategy_counts[static_cast<std::size_t>(j)];
        Eigen::VectorXd block = Eigen::VectorXd::Zero(mi * mj);
        block(a * mj + x[static_cast<std::size_t>(j)]) = 1.0;
        f.blocks.push_back(std::move(block));
    }
    return f;
}

// --- GroupedParameterVector -------------------------------------------------

GroupedParameterVector::GroupedParameterVector(FeatureLayout layout)
    : layout_(std::move(layout)), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.dimension()))) {}

GroupedParameterVector::GroupedParameterVector(FeatureLayout layout, Eigen::VectorXd values)
    : layout_(std::move(layout)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != layout_.dimension()) {
        throw InvalidInput("parameter vector has " + std::to_string(values_.size()) + " entries, layout expects " +
                           std::to_string(layout_.dimension()));
    }
}

std::vector<double> GroupedParameterVector::group_norms() const {
    std::vector<double> out(static_cast<std::size_t>(layout_.num_groups()));
    for (int g = 0; g < layout_.num_groups(); ++g) out[static_cast<std::size_t>(g)] = group_norm(g);
    return out;
}

double GroupedParameterVector::norm_12() const {
    double s = 0.0;
    for (int g = 0; g < layout_.num_groups(); ++g) s += group_norm(g);
    return s;
}

double GroupedParameterVector::norm_inf2() const {
    double s = 0.0;
    for (int g = 0; g < layout_.num_groups(); ++g) s = std::max(s, group_norm(g));
    return s;
}

double GroupedParameterVector::score(Strategy a, ProfileView x) const {
    const int i = layout_.owner();
    const auto& counts = layout_.strategy_counts();
    double s = values_(a);
    std::size_t g = 1;
    for (int j = 0; j < layout_.num_players(); ++j) {
        if (j == i) continue;
        const auto mj = static_cast<std::size_t>(counts[static_cast<std::size_t>(j)]);
        s += values_(static_cast<Eigen::Index>(layout_.group_offset(static_cast<int>(g)) +
                                              static_cast<std::size_t>(a) * mj +
                                              static_cast<std::size_t>(x[static_cast<std::size_t>(j)])));
        ++g;
    }
    return s;
}

std::vector<int> GroupedParameterVector::nonzero_groups() const {
    std::vector<int> out;
    for (int g = 0; g < layout_.num_groups(); ++g) {
        if ((group(g).array() != 0.0).any()) out.push_back(g);
    }
    return out;
}

double dot(const GroupedParameterVector& theta, const FeatureVector& f) { return theta.values().dot(f.flat()); }

GroupedParameterVector pack_parameters(const PolymatrixGame& game, int player) {
    game.space().validate_player(player);
    GroupedParameterVector theta(FeatureLayout(game.strategy_counts(), player));
    theta.group(0) = game.individual(player);
    const int mi = game.strategies(player);
    for (const auto& e : game.in_edges(player)) {
        const int g = theta.layout().group_of_player(e.source);
        const int mj = game.strategies(e.source);
        auto block = theta.group(g);
        for (int a = 0; a < mi; ++a)
            for (int b = 0; b < mj; ++b) block(a * mj + b) = e.payoff(a, b);
    }
    return theta;
}

void unpack_parameters(const GroupedParameterVector& theta, GameBuilder& builder) {
    unpack_parameters(theta, builder, [](int) { return true; });
}

PolymatrixGame unpack_game(std::span<const GroupedParameterVector> thetas) {
    if (thetas.empty()) throw InvalidInput("no parameter vectors");
    GameBuilder builder(thetas.front().layout().strategy_counts());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        if (thetas[i].owner() != static_cast<int>(i)) throw InvalidInput("parameter vectors out of player order");
        unpack_parameters(thetas[i], builder);
    }
    return builder.build();
}

}  // namespace polylearn
