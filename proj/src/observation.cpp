#include "polylearn/observation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "polylearn/error.hpp"

namespace polylearn {

Dataset::Dataset(std::vector<int> strategy_counts) : space_(std::move(strategy_counts)) {}

void Dataset::push_back(ProfileView x) {
    space_.validate(x);
    flat_.insert(flat_.end(), x.begin(), x.end());
}

// --- ObservationModel --------------------------------------------------------

ObservationModel::ObservationModel(const PolymatrixGame& game, NoiseModel noise, const EnumerationOptions& options)
    : noise_(std::move(noise)) {
    space_size_ = game.space().require_enumerable(options.cap);
    if (noise_.kind == NoiseKind::local) {
        if (noise_.qi.size() != static_cast<std::size_t>(game.num_players())) {
            throw InvalidParameter("local noise needs one q_i per player (" + std::to_string(game.num_players()) +
                                   "), got " + std::to_string(noise_.qi.size()));
        }
        for (std::size_t i = 0; i < noise_.qi.size(); ++i) {
            const double qi = noise_.qi[i];
            if (!(qi > 0.5 && qi <= 1.0)) {
                throw InvalidParameter("local noise requires 0.5 < q_i <= 1; q_" + std::to_string(i + 1) + " = " +
                                       std::to_string(qi));
            }
            if (game.strategies(static_cast<int>(i)) < 2) {
                throw ModelUndefined("local noise is undefined when player " + std::to_string(i + 1) +
                                     " has a single strategy");
            }
        }
    } else if (!(noise_.q >= 0.0 && noise_.q <= 1.0)) {
        throw InvalidParameter("global noise requires q in (|NE|/|A|, 1], got " + std::to_string(noise_.q));
    }

    psne_ = enumerate_psne(game, options);
    if (psne_.empty()) throw ModelUndefined("the game has no pure-strategy Nash equilibrium; the noise model is undefined");

    if (noise_.kind == NoiseKind::global) {
        const auto ne = static_cast<double>(psne_.size());
        const auto a = static_cast<double>(space_size_);
        if (psne_.size() == space_size_ && noise_.q < 1.0) {
            throw ModelUndefined("every profile is an equilibrium; global noise with q < 1 has no complement to draw from");
        }
        if (noise_.q * a < ne) {
            throw InvalidParameter("global noise requires q >= |NE|/|A| = " + std::to_string(ne / a) + ", got " +
                                   std::to_string(noise_.q));
        }
    }
}

double ObservationModel::pmf_index(std::uint64_t index, ProfileView x) const {
    if (noise_.kind == NoiseKind::global) {
        const bool in_ne = psne_.contains_index(index);
        if (in_ne) return noise_.q / static_cast<double>(psne_.size());
        const std::uint64_t rest = space_size_ - psne_.size();
        return rest == 0 ? 0.0 : (1.0 - noise_.q) / static_cast<double>(rest);
    }
    const ProfileSpace& space = psne_.space();
    const auto p = static_cast<std::size_t>(space.num_players());
    Profile y(p);
    double total = 0.0;
    for (auto idx : psne_.indices()) {
        space.decode(idx, y);
        double prod = 1.0;
        for (std::size_t i = 0; i < p; ++i) {
            const double qi = noise_.qi[i];
            prod *= x[i] == y[i] ? qi : (1.0 - qi) / static_cast<double>(space.strategies(static_cast<int>(i)) - 1);
        }
        total += prod;
    }
    return total / static_cast<double>(psne_.size());
}

double ObservationModel::pmf(ProfileView x) const {
    space().validate(x);
    return pmf_index(space().index_of(x), x);
}

std::vector<double> ObservationModel::pmf_table() const {
    const ProfileSpace& sp = space();
    std::vector<double> table(space_size_);
#pragma omp parallel
    {
        Profile x(static_cast<std::size_t>(sp.num_players()));
#pragma omp for schedule(static)
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(space_size_); ++k) {
            sp.decode(static_cast<std::uint64_t>(k), x);
            table[static_cast<std::size_t>(k)] = pmf_index(static_cast<std::uint64_t>(k), x);
        }
    }
    return table;
}

void ObservationModel::draw(Rng& rng, std::span<Strategy> out) const {
    const ProfileSpace& sp = space();
    const auto& ne = psne_.indices();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_ne(0, ne.size() - 1);

    if (noise_.kind == NoiseKind::global) {
        const std::uint64_t rest = space_size_ - ne.size();
        if (rest == 0 || unit(rng) < noise_.q) {
            sp.decode(ne[pick_ne(rng)], out);
            return;
        }
        // k-th profile outside NE: shift past every equilibrium index <= k.
        std::uniform_int_distribution<std::uint64_t> pick_rest(0, rest - 1);
        std::uint64_t k = pick_rest(rng);
        for (auto e : ne) {
            if (e <= k) {
                ++k;
            } else {
                break;
            }
        }
        sp.decode(k, out);
        return;
    }

    sp.decode(ne[pick_ne(rng)], out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (unit(rng) < noise_.qi[i]) continue;
        const int mi = sp.strategies(static_cast<int>(i));
        std::uniform_int_distribution<int> other(0, mi - 2);
        const int r = other(rng);
        out[i] = r < out[i] ? r : r + 1;
    }
}

namespace {

template <class DrawFn>
void fill_chunks(std::vector<Strategy>& flat, std::size_t n, std::size_t p, std::uint64_t seed, bool parallel,
                 const DrawFn& draw) {
    flat.assign(n * p, 0);
    const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
    auto run_chunk = [&](std::size_t c) {
        Rng rng = make_rng(derive_seed(seed, {c}));
        const std::size_t end = std::min(n, (c + 1) * kSampleChunk);
        for (std::size_t l = c * kSampleChunk; l < end; ++l) draw(rng, std::span<Strategy>(flat).subspan(l * p, p));
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) run_chunk(static_cast<std::size_t>(c));
    } else {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    }
}

}  // namespace

Dataset ObservationModel::sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw InvalidInput("sample size must be at least 1");
    Dataset data(space().counts());
    fill_chunks(data.flat_, n, static_cast<std::size_t>(space().num_players()), seed, true,
                [this](Rng& rng, std::span<Strategy> out) { draw(rng, out); });
    return data;
}

Dataset ObservationModel::sample_serial(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw InvalidInput("sample size must be at least 1");
    Dataset data(space().counts());
    fill_chunks(data.flat_, n, static_cast<std::size_t>(space().num_players()), seed, false,
                [this](Rng& rng, std::span<Strategy> out) { draw(rng, out); });
    return data;
}

std::vector<std::uint64_t> ObservationModel::sample_counts(std::uint64_t n, std::uint64_t seed) const {
    if (n < 1) throw InvalidInput("sample size must be at least 1");
    const std::vector<double> table = pmf_table();
    std::vector<std::uint64_t> counts(table.size(), 0);
    Rng rng = make_rng(derive_seed(seed, {0x636f756e74ULL}));
    std::uint64_t remaining = n;
    double mass = 1.0;
    for (std::size_t k = 0; k < table.size() && remaining > 0; ++k) {
        if (k + 1 == table.size() || mass <= table[k]) {
            counts[k] = remaining;
            break;
        }
        const double prob = std::clamp(table[k] / mass, 0.0, 1.0);
        std::binomial_distribution<long long> binom(static_cast<long long>(remaining), prob);
        const auto c = static_cast<std::uint64_t>(binom(rng));
        counts[k] = c;
        remaining -= c;
        mass -= table[k];
    }
    return counts;
}

// --- free functions ------------------------------------------------------------

double global_noise_pmf(const PolymatrixGame& game, const NoiseModel& noise, ProfileView x) {
    if (noise.kind != NoiseKind::global) throw InvalidParameter("expected a global noise model");
    return ObservationModel(game, noise).pmf(x);
}

double local_noise_pmf(const PolymatrixGame& game, const NoiseModel& noise, ProfileView x) {
    if (noise.kind != NoiseKind::local) throw InvalidParameter("expected a local noise model");
    return ObservationModel(game, noise).pmf(x);
}

Dataset sample_dataset(const PolymatrixGame& game, const NoiseModel& noise, std::size_t n, std::uint64_t seed) {
    return ObservationModel(game, noise).sample(n, seed);
}

namespace {

void check_table(const ProfileSpace& space, std::span<const double> pmf) {
    if (space.overflows() || pmf.size() != space.size_saturated()) {
        throw InvalidDistribution("pmf table has " + std::to_string(pmf.size()) + " entries, the profile space has " +
                                  space.describe_size());
    }
    double sum = 0.0;
    for (double v : pmf) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidDistribution("pmf has a negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidDistribution("pmf sums to " + std::to_string(sum) + ", not 1");
}

}  // namespace

Dataset sample_from_table(const ProfileSpace& space, std::span<const double> pmf, std::size_t n, std::uint64_t seed) {
    check_table(space, pmf);
    if (n < 1) throw InvalidInput("sample size must be at least 1");
    std::vector<double> cdf(pmf.size());
    std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
    Dataset data(space.counts());
    fill_chunks(data.flat_, n, static_cast<std::size_t>(space.num_players()), seed, true,
                [&](Rng& rng, std::span<Strategy> out) {
                    std::uniform_real_distribution<double> unit(0.0, cdf.back());
                    const double u = unit(rng);
                    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                    auto k = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                                                 static_cast<std::ptrdiff_t>(cdf.size()) - 1));
                    space.decode(k, out);
                });
    return data;
}

bool check_observation_condition(std::span<const double> pmf, const PsneSet& psne) {
    check_table(psne.space(), pmf);
    double min_ne = std::numeric_limits<double>::infinity();
    double max_rest = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        if (psne.contains_index(k)) {
            min_ne = std::min(min_ne, pmf[k]);
        } else {
            max_rest = std::max(max_rest, pmf[k]);
        }
    }
    return min_ne > max_rest;
}

}  // namespace polylearn
