#include "polylearn/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polylearn/error.hpp"

namespace polylearn {

DegeneratePoa::DegeneratePoa(double numerator, double denominator)
    : NumericError("degenerate_poa", "price of anarchy undefined: max welfare " + std::to_string(numerator) +
                                         " over min equilibrium welfare " + std::to_string(denominator)),
      numerator_(numerator),
      denominator_(denominator) {}

// --- PolymatrixGame --------------------------------------------------------

const Eigen::MatrixXd* PolymatrixGame::edge_payoff(int player, int source) const {
    for (const auto& e : in_edges(player)) {
        if (e.source == source) return &e.payoff;
    }
    return nullptr;
}

std::vector<std::pair<int, int>> PolymatrixGame::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < num_players(); ++i) {
        for (const auto& e : in_edges(i)) out.emplace_back(i, e.source);
    }
    return out;
}

std::size_t PolymatrixGame::num_edges() const noexcept {
    std::size_t n = 0;
    for (const auto& v : in_edges_) n += v.size();
    return n;
}

int PolymatrixGame::max_degree() const noexcept {
    std::size_t d = 0;
    for (const auto& v : in_edges_) d = std::max(d, v.size());
    return static_cast<int>(d);
}

double PolymatrixGame::min_payoff_entry() const noexcept {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& v : individual_) {
        if (v.size() > 0) lo = std::min(lo, v.minCoeff());
    }
    for (const auto& edges : in_edges_) {
        for (const auto& e : edges) lo = std::min(lo, e.payoff.minCoeff());
    }
    return lo;
}

bool operator==(const PolymatrixGame& a, const PolymatrixGame& b) {
    if (!(a.space_ == b.space_)) return false;
    for (int i = 0; i < a.num_players(); ++i) {
        if (a.individual(i) != b.individual(i)) return false;
        auto ea = a.in_edges(i);
        auto eb = b.in_edges(i);
        if (ea.size() != eb.size()) return false;
        for (std::size_t k = 0; k < ea.size(); ++k) {
            if (ea[k].source != eb[k].source || ea[k].payoff != eb[k].payoff) return false;
        }
    }
    return true;
}

// --- GameBuilder -----------------------------------------------------------

GameBuilder::GameBuilder(std::vector<int> strategy_counts) {
    game_.space_ = ProfileSpace(std::move(strategy_counts));
    const int p = game_.space_.num_players();
    game_.individual_.resize(static_cast<std::size_t>(p));
    game_.in_edges_.resize(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) game_.individual_[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(game_.strategies(i));
}

GameBuilder::GameBuilder(const PolymatrixGame& game) : game_(game) {}

GameBuilder& GameBuilder::set_individual(int player, Eigen::VectorXd payoffs) {
    game_.space_.validate_player(player);
    if (payoffs.size() != game_.strategies(player)) {
        throw InvalidInput("individual payoff of player " + std::to_string(player + 1) + " has " +
                           std::to_string(payoffs.size()) + " entries, expected " +
                           std::to_string(game_.strategies(player)));
    }
    game_.individual_[static_cast<std::size_t>(player)] = std::move(payoffs);
    return *this;
}

GameBuilder& GameBuilder::set_edge(int player, int source, Eigen::MatrixXd payoffs) {
    game_.space_.validate_player(player);
    game_.space_.validate_player(source);
    if (player == source) throw InvalidInput("self edge (" + std::to_string(player + 1) + ", " + std::to_string(player + 1) + ")");
    if (payoffs.rows() != game_.strategies(player) || payoffs.cols() != game_.strategies(source)) {
        throw InvalidInput("edge (" + std::to_string(player + 1) + ", " + std::to_string(source + 1) +
                           ") payoff matrix must be " + std::to_string(game_.strategies(player)) + " x " +
                           std::to_string(game_.strategies(source)));
    }
    if ((payoffs.array() == 0.0).all()) return remove_edge(player, source);

    auto& edges = game_.in_edges_[static_cast<std::size_t>(player)];
    auto it = std::lower_bound(edges.begin(), edges.end(), source,
                               [](const InEdge& e, int s) { return e.source < s; });
    if (it != edges.end() && it->source == source) {
        it->payoff = std::move(payoffs);
    } else {
        edges.insert(it, InEdge{source, std::move(payoffs)});
    }
    return *this;
}

GameBuilder& GameBuilder::remove_edge(int player, int source) {
    game_.space_.validate_player(player);
    auto& edges = game_.in_edges_[static_cast<std::size_t>(player)];
    std::erase_if(edges, [source](const InEdge& e) { return e.source == source; });
    return *this;
}

PolymatrixGame GameBuilder::build() const {
    for (int i = 0; i < game_.num_players(); ++i) {
        if (!game_.individual(i).allFinite()) {
            throw InvalidInput("individual payoff of player " + std::to_string(i + 1) + " is not finite");
        }
        for (const auto& e : game_.in_edges(i)) {
            if (!e.payoff.allFinite()) {
                throw InvalidInput("payoff of edge (" + std::to_string(i + 1) + ", " + std::to_string(e.source + 1) +
                                   ") is not finite");
            }
        }
    }
    return game_;
}

// --- payoffs ---------------------------------------------------------------

namespace {

double payoff_unchecked(const PolymatrixGame& game, int i, ProfileView x) {
    const int xi = x[static_cast<std::size_t>(i)];
    double u = game.individual(i)(xi);
    for (const auto& e : game.in_edges(i)) u += e.payoff(xi, x[static_cast<std::size_t>(e.source)]);
    return u;
}

void deviation_payoffs_unchecked(const PolymatrixGame& game, int i, ProfileView x, std::span<double> out) {
    const auto& ind = game.individual(i);
    const int mi = game.strategies(i);
    for (int a = 0; a < mi; ++a) out[static_cast<std::size_t>(a)] = ind(a);
    for (const auto& e : game.in_edges(i)) {
        const int xj = x[static_cast<std::size_t>(e.source)];
        for (int a = 0; a < mi; ++a) out[static_cast<std::size_t>(a)] += e.payoff(a, xj);
    }
}

}  // namespace

double payoff(const PolymatrixGame& game, int player, ProfileView x) {
    game.space().validate_player(player);
    game.space().validate(x);
    return payoff_unchecked(game, player, x);
}

void deviation_payoffs(const PolymatrixGame& game, int player, ProfileView x, std::span<double> out) {
    game.space().validate_player(player);
    game.space().validate(x);
    if (out.size() != static_cast<std::size_t>(game.strategies(player))) {
        throw InvalidInput("deviation payoff buffer has the wrong size");
    }
    deviation_payoffs_unchecked(game, player, x, out);
}

std::vector<Strategy> best_responses(const PolymatrixGame& game, int player, ProfileView x) {
    std::vector<double> u(static_cast<std::size_t>(game.space().strategies(player)));
    deviation_payoffs(game, player, x, u);
    const double best = *std::max_element(u.begin(), u.end());
    std::vector<Strategy> out;
    for (std::size_t a = 0; a < u.size(); ++a) {
        if (u[a] == best) out.push_back(static_cast<Strategy>(a));
    }
    return out;
}

namespace detail {

/// Membership test shared by the serial and parallel scans. scratch must hold
/// at least max m_i doubles.
bool eps_ne_unchecked(const PolymatrixGame& game, ProfileView x, double eps, std::span<double> scratch) {
    for (int i = 0; i < game.num_players(); ++i) {
        auto u = scratch.first(static_cast<std::size_t>(game.strategies(i)));
        deviation_payoffs_unchecked(game, i, x, u);
        const double own = u[static_cast<std::size_t>(x[static_cast<std::size_t>(i)])];
        const double best = *std::max_element(u.begin(), u.end());
        if (own < best - eps) return false;
    }
    return true;
}

}  // namespace detail

bool is_eps_ne(const PolymatrixGame& game, ProfileView x, double eps) {
    if (!(eps >= 0.0)) throw InvalidParameter("epsilon must be non-negative, got " + std::to_string(eps));
    game.space().validate(x);
    std::vector<double> scratch(static_cast<std::size_t>(game.space().max_strategies()));
    return detail::eps_ne_unchecked(game, x, eps, scratch);
}

bool is_psne(const PolymatrixGame& game, ProfileView x) { return is_eps_ne(game, x, 0.0); }

// --- PsneSet ---------------------------------------------------------------

PsneSet::PsneSet(ProfileSpace space, double epsilon, std::vector<std::uint64_t> sorted_indices)
    : space_(std::move(space)), epsilon_(epsilon), indices_(std::move(sorted_indices)) {
    if (!std::is_sorted(indices_.begin(), indices_.end()) ||
        std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
        std::sort(indices_.begin(), indices_.end());
        indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    }
}

bool PsneSet::contains_index(std::uint64_t index) const noexcept {
    return std::binary_search(indices_.begin(), indices_.end(), index);
}

bool PsneSet::contains(ProfileView x) const {
    space_.validate(x);
    return contains_index(space_.index_of(x));
}

std::vector<Profile> PsneSet::profiles() const {
    std::vector<Profile> out;
    out.reserve(indices_.size());
    for (auto idx : indices_) out.push_back(space_.decode(idx));
    return out;
}

bool PsneSet::is_subset_of(const PsneSet& other) const {
    return space_ == other.space_ &&
           std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(), indices_.end());
}

// --- separability ------------------------------------------------------------

bool check_separability(const PolymatrixGame& game, double eps, const EnumerationOptions& options) {
    return check_separability(game, enumerate_psne(game, options), eps);
}

bool check_separability(const PolymatrixGame& game, const PsneSet& psne, double eps) {
    if (!(eps >= 0.0)) throw InvalidParameter("epsilon must be non-negative, got " + std::to_string(eps));
    if (!(psne.space() == game.space())) throw InvalidInput("equilibrium set belongs to a different game");
    const ProfileSpace& space = game.space();
    std::vector<double> u(static_cast<std::size_t>(space.max_strategies()));
    Profile x(static_cast<std::size_t>(game.num_players()));
    for (auto idx : psne.indices()) {
        space.decode(idx, x);
        for (int i = 0; i < game.num_players(); ++i) {
            const int mi = game.strategies(i);
            auto ui = std::span<double>(u).first(static_cast<std::size_t>(mi));
            deviation_payoffs_unchecked(game, i, x, ui);
            const int xi = x[static_cast<std::size_t>(i)];
            const std::uint64_t base = idx - space.stride(i) * static_cast<std::uint64_t>(xi);
            for (int a = 0; a < mi; ++a) {
                if (a == xi) continue;
                if (psne.contains_index(base + space.stride(i) * static_cast<std::uint64_t>(a))) continue;
                if (!(ui[static_cast<std::size_t>(xi)] > ui[static_cast<std::size_t>(a)] + eps)) return false;
            }
        }
    }
    return true;
}

// --- welfare ---------------------------------------------------------------

double welfare_shift(const PolymatrixGame& game) noexcept {
    const double lo = game.min_payoff_entry();
    return lo < 0.0 ? -lo : 0.0;
}

namespace {

double welfare_with_shift(const PolymatrixGame& game, ProfileView x, double shift) {
    double w = 0.0;
    for (int i = 0; i < game.num_players(); ++i) {
        w += payoff_unchecked(game, i, x) + shift * static_cast<double>(1 + game.degree(i));
    }
    return w;
}

}  // namespace

double welfare(const PolymatrixGame& game, ProfileView x) {
    game.space().validate(x);
    return welfare_with_shift(game, x, welfare_shift(game));
}

PoaResult price_of_anarchy(const PolymatrixGame& game, const PsneSet& psne, const EnumerationOptions& options) {
    if (psne.empty()) throw InvalidInput("price of anarchy needs a nonempty equilibrium set");
    if (!(psne.space() == game.space())) throw InvalidInput("equilibrium set belongs to a different game");
    const ProfileSpace& space = game.space();
    const std::uint64_t total = space.require_enumerable(options.cap);

    PoaResult r;
    r.shift = welfare_shift(game);

    // Deterministic block-wise max: ties resolve to the lowest profile index.
    const std::uint64_t blocks = std::min<std::uint64_t>(total, 256);
    std::vector<double> block_best(blocks, -std::numeric_limits<double>::infinity());
    std::vector<std::uint64_t> block_arg(blocks, 0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
        const std::uint64_t begin = total * static_cast<std::uint64_t>(b) / blocks;
        const std::uint64_t end = total * static_cast<std::uint64_t>(b + 1) / blocks;
        Profile x = space.decode(begin);
        for (std::uint64_t idx = begin; idx < end; ++idx) {
            const double w = welfare_with_shift(game, x, r.shift);
            if (w > block_best[static_cast<std::size_t>(b)]) {
                block_best[static_cast<std::size_t>(b)] = w;
                block_arg[static_cast<std::size_t>(b)] = idx;
            }
            space.next(x);
        }
    }
    std::size_t best_block = 0;
    for (std::size_t b = 1; b < blocks; ++b) {
        if (block_best[b] > block_best[best_block]) best_block = b;
    }
    r.max_welfare = block_best[best_block];
    r.argmax_profile = space.decode(block_arg[best_block]);

    r.min_psne_welfare = std::numeric_limits<double>::infinity();
    for (auto idx : psne.indices()) {
        Profile x = space.decode(idx);
        const double w = welfare_with_shift(game, x, r.shift);
        if (w < r.min_psne_welfare) {
            r.min_psne_welfare = w;
            r.argmin_psne_profile = std::move(x);
        }
    }
    if (r.min_psne_welfare == 0.0) throw DegeneratePoa(r.max_welfare, r.min_psne_welfare);
    r.ratio = r.max_welfare / r.min_psne_welfare;
    return r;
}

}  // namespace polylearn
