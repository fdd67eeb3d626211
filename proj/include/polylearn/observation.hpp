#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polylearn/game.hpp"
#include "polylearn/profile.hpp"
#include "polylearn/rng.hpp"

namespace polylearn {

enum class NoiseKind { global, local };

/// Global model: mixture weight q of the uniform distribution on NE(G).
/// Local model: each coordinate of a uniformly drawn equilibrium is kept
/// with probability q_i and otherwise replaced by a uniform other strategy.
struct NoiseModel {
    NoiseKind kind = NoiseKind::global;
    double q = 1.0;
    std::vector<double> qi;

    static NoiseModel global(double q) { return NoiseModel{NoiseKind::global, q, {}}; }
    static NoiseModel local(std::vector<double> qi) { return NoiseModel{NoiseKind::local, 0.0, std::move(qi)}; }
    static NoiseModel local_uniform(int num_players, double q) {
        return local(std::vector<double>(static_cast<std::size_t>(num_players), q));
    }
};

/// An ordered multiset of observed profiles (0-indexed internally).
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<int> strategy_counts);

    const ProfileSpace& space() const noexcept { return space_; }
    const std::vector<int>& strategy_counts() const noexcept { return space_.counts(); }
    int num_players() const noexcept { return space_.num_players(); }
    std::size_t size() const noexcept { return num_players() == 0 ? 0 : flat_.size() / static_cast<std::size_t>(num_players()); }
    bool empty() const noexcept { return size() == 0; }

    ProfileView row(std::size_t l) const {
        const auto p = static_cast<std::size_t>(num_players());
        return ProfileView(flat_).subspan(l * p, p);
    }
    /// Validates and appends a 0-indexed profile.
    void push_back(ProfileView x);
    void reserve(std::size_t n) { flat_.reserve(n * static_cast<std::size_t>(num_players())); }

    const std::vector<Strategy>& flat() const noexcept { return flat_; }

    friend bool operator==(const Dataset& a, const Dataset& b) { return a.space_ == b.space_ && a.flat_ == b.flat_; }

private:
    friend class ObservationModel;
    friend Dataset sample_from_table(const ProfileSpace&, std::span<const double>, std::size_t, std::uint64_t);

    ProfileSpace space_;
    std::vector<Strategy> flat_;
};

/// A game plus a noise model, with the equilibrium set enumerated once.
class ObservationModel {
public:
    ObservationModel(const PolymatrixGame& game, NoiseModel noise, const EnumerationOptions& options = {});

    const PsneSet& equilibria() const noexcept { return psne_; }
    const NoiseModel& noise() const noexcept { return noise_; }
    const ProfileSpace& space() const noexcept { return psne_.space(); }

    double pmf(ProfileView x) const;
    /// Probabilities indexed by ProfileSpace::index_of.
    std::vector<double> pmf_table() const;

    /// n i.i.d. draws. Draws are generated in fixed-size chunks with one RNG
    /// stream per chunk, so the OpenMP and serial samplers agree exactly.
    Dataset sample(std::size_t n, std::uint64_t seed) const;
    Dataset sample_serial(std::size_t n, std::uint64_t seed) const;

    /// Multinomial counts of n draws, indexed like pmf_table. Cost is O(|A|)
    /// regardless of n, so very large samples stay cheap.
    std::vector<std::uint64_t> sample_counts(std::uint64_t n, std::uint64_t seed) const;

private:
    double pmf_index(std::uint64_t index, ProfileView x) const;
    void draw(Rng& rng, std::span<Strategy> out) const;

    NoiseModel noise_;
    PsneSet psne_;
    std::uint64_t space_size_ = 0;
};

inline constexpr std::size_t kSampleChunk = 4096;

double global_noise_pmf(const PolymatrixGame& game, const NoiseModel& noise, ProfileView x);
double local_noise_pmf(const PolymatrixGame& game, const NoiseModel& noise, ProfileView x);
Dataset sample_dataset(const PolymatrixGame& game, const NoiseModel& noise, std::size_t n, std::uint64_t seed);

/// Draws from a user-supplied pmf over an enumerable space (the general
/// observation model). The table must sum to 1 within 1e-9.
Dataset sample_from_table(const ProfileSpace& space, std::span<const double> pmf, std::size_t n, std::uint64_t seed);

/// min_{x in NE} P(x) > max_{x not in NE} P(x). Throws InvalidDistribution
/// if the table does not sum to 1 within 1e-9.
bool check_observation_condition(std::span<const double> pmf, const PsneSet& psne);

}  // namespace polylearn
