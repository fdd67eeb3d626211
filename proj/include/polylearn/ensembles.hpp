#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "polylearn/game.hpp"

namespace polylearn {

/// Random polymatrix game: every player gets exactly d in-neighbors drawn
/// uniformly without replacement. Individual payoffs are zero; each edge
/// matrix has i.i.d. normal rows except the last row, which is zero.
struct RandomGameSpec {
    int p = 7;
    int d = 1;
    int m = 3;
    double payoff_std = std::sqrt(2.0);
    std::uint64_t seed = 0;
};

void validate(const RandomGameSpec& spec);
PolymatrixGame random_game(const RandomGameSpec& spec);

/// Most frequent strategy; ties go to the lowest one. Throws InvalidInput when empty.
Strategy maj(std::span<const Strategy> a);

/// Game with a single equilibrium: d influential players each want their own
/// target strategy, every other player wants to match as many influential
/// players as possible with a small bonus for low strategies.
struct HardEnsembleSpec {
    int p = 3;
    int d = 2;
    int m = 2;
    /// Influential players (0-indexed); drawn from seed when absent.
    std::optional<std::vector<int>> influential;
    /// Target strategy of each influential player, aligned with `influential`
    /// (0-indexed); drawn from seed when absent.
    std::optional<std::vector<Strategy>> target;
    std::uint64_t seed = 0;
};

/// A spec with the influential set and target filled in.
struct HardEnsemble {
    PolymatrixGame game;
    std::vector<int> influential;
    std::vector<Strategy> target;
    /// The unique equilibrium.
    Profile equilibrium;
};

void validate(const HardEnsembleSpec& spec);
HardEnsemble hard_ensemble(const HardEnsembleSpec& spec);
PolymatrixGame hard_game(const HardEnsembleSpec& spec);

}  // namespace polylearn
