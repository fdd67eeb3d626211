#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "polylearn/profile.hpp"

namespace polylearn {

/// Payoff matrix u^{i,j} for the edge i <- j, stored at the destination i.
/// Rows index the destination's strategies, columns the source's.
struct InEdge {
    int source = 0;
    Eigen::MatrixXd payoff;
};

/// A p-player polymatrix game. Immutable once built; all queries are const
/// and safe to share across threads.
///
/// Invariant: an edge (i, j) is stored iff u^{i,j} has a nonzero entry.
class PolymatrixGame {
public:
    PolymatrixGame() = default;

    const ProfileSpace& space() const noexcept { return space_; }
    int num_players() const noexcept { return space_.num_players(); }
    int strategies(int player) const { return space_.strategies(player); }
    const std::vector<int>& strategy_counts() const noexcept { return space_.counts(); }

    const Eigen::VectorXd& individual(int player) const { return individual_.at(static_cast<std::size_t>(player)); }
    /// In-edges of a player sorted by source.
    std::span<const InEdge> in_edges(int player) const { return in_edges_.at(static_cast<std::size_t>(player)); }
    /// nullptr when (i, j) is not an edge.
    const Eigen::MatrixXd* edge_payoff(int player, int source) const;

    /// All edges (i, j) in (i, j) lexicographic order.
    std::vector<std::pair<int, int>> edges() const;
    std::size_t num_edges() const noexcept;
    int degree(int player) const { return static_cast<int>(in_edges(player).size()); }
    int max_degree() const noexcept;

    /// Smallest entry over every stored payoff (individual vectors and edge matrices).
    double min_payoff_entry() const noexcept;

    friend bool operator==(const PolymatrixGame& a, const PolymatrixGame& b);

private:
    friend class GameBuilder;

    ProfileSpace space_;
    std::vector<Eigen::VectorXd> individual_;
    std::vector<std::vector<InEdge>> in_edges_;
};

class GameBuilder {
public:
    /// Starts from the all-zero game over the given strategy counts.
    explicit GameBuilder(std::vector<int> strategy_counts);
    explicit GameBuilder(const PolymatrixGame& game);

    GameBuilder& set_individual(int player, Eigen::VectorXd payoffs);
    /// Stores u^{i,j}; an all-zero matrix removes the edge instead.
    GameBuilder& set_edge(int player, int source, Eigen::MatrixXd payoffs);
    GameBuilder& remove_edge(int player, int source);
    bool has_edge(int player, int source) const { return game_.edge_payoff(player, source) != nullptr; }

    /// Validates finiteness and returns the game.
    PolymatrixGame build() const;

private:
    PolymatrixGame game_;
};

// --- payoffs ---------------------------------------------------------------

/// u^i(x) = u^{i,i}(x_i) + sum_{j in Nb_i} u^{i,j}(x_i, x_j).
double payoff(const PolymatrixGame& game, int player, ProfileView x);

/// u^i(a, x_{-i}) for every a in A_i, written to out (size m_i). x_i is ignored.
void deviation_payoffs(const PolymatrixGame& game, int player, ProfileView x, std::span<double> out);

/// All maximizers of u^i(., x_{-i}), ties included, ascending.
std::vector<Strategy> best_responses(const PolymatrixGame& game, int player, ProfileView x);

bool is_psne(const PolymatrixGame& game, ProfileView x);
/// Every unilateral deviation gains at most eps. Throws InvalidParameter on eps < 0.
bool is_eps_ne(const PolymatrixGame& game, ProfileView x, double eps);

// --- equilibrium sets -------------------------------------------------------

struct EnumerationOptions {
    std::uint64_t cap = kDefaultEnumerationCap;
};

/// A set of pure profiles that passed a (possibly approximate) equilibrium
/// test. Stored as sorted profile indices over the owning game's space.
class PsneSet {
public:
    PsneSet() = default;
    PsneSet(ProfileSpace space, double epsilon, std::vector<std::uint64_t> sorted_indices);

    const ProfileSpace& space() const noexcept { return space_; }
    double epsilon() const noexcept { return epsilon_; }
    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }

    const std::vector<std::uint64_t>& indices() const noexcept { return indices_; }
    bool contains_index(std::uint64_t index) const noexcept;
    bool contains(ProfileView x) const;
    Profile profile(std::size_t k) const { return space_.decode(indices_.at(k)); }
    std::vector<Profile> profiles() const;

    bool is_subset_of(const PsneSet& other) const;
    /// Profile sets are equal; epsilon is not compared.
    bool same_profiles(const PsneSet& other) const { return space_ == other.space_ && indices_ == other.indices_; }

private:
    ProfileSpace space_;
    double epsilon_ = 0.0;
    std::vector<std::uint64_t> indices_;
};

/// Brute-force scan of A, split across OpenMP threads. The result does not
/// depend on the thread count.
PsneSet enumerate_psne(const PolymatrixGame& game, const EnumerationOptions& options = {});
PsneSet enumerate_eps_ne(const PolymatrixGame& game, double eps, const EnumerationOptions& options = {});

namespace serial {
/// Single-threaded reference scan used to check the parallel kernel.
PsneSet enumerate_eps_ne(const PolymatrixGame& game, double eps, const EnumerationOptions& options = {});
}  // namespace serial

/// For every i, every (x_i, x_{-i}) in NE and every (x_i', x_{-i}) not in NE:
/// u^i(x_i, x_{-i}) > u^i(x_i', x_{-i}) + eps.
bool check_separability(const PolymatrixGame& game, double eps, const EnumerationOptions& options = {});
bool check_separability(const PolymatrixGame& game, const PsneSet& psne, double eps);

// --- welfare ---------------------------------------------------------------

/// Global shift c = -min stored payoff entry, or 0 if that entry is >= 0.
double welfare_shift(const PolymatrixGame& game) noexcept;

/// Sum of all players' payoffs after adding welfare_shift to every stored entry.
double welfare(const PolymatrixGame& game, ProfileView x);

struct PoaResult {
    double shift = 0.0;
    double max_welfare = 0.0;
    double min_psne_welfare = 0.0;
    double ratio = 0.0;
    Profile argmax_profile;
    Profile argmin_psne_profile;
};

/// max_{x in A} welfare(x) / min_{x in psne} welfare(x).
/// Throws DegeneratePoa when the denominator is zero.
PoaResult price_of_anarchy(const PolymatrixGame& game, const PsneSet& psne, const EnumerationOptions& options = {});

}  // namespace polylearn
