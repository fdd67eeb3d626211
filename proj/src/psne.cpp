#include <algorithm>
#include <cstdint>
#include <vector>

#include "polylearn/error.hpp"
#include "polylearn/game.hpp"

namespace polylearn {

namespace detail {
bool eps_ne_unchecked(const PolymatrixGame& game, ProfileView x, double eps, std::span<double> scratch);
}

namespace {

void check_eps(double eps) {
    if (!(eps >= 0.0)) throw InvalidParameter("epsilon must be non-negative, got " + std::to_string(eps));
}

void scan_range(const PolymatrixGame& game, double eps, std::uint64_t begin, std::uint64_t end,
                std::vector<std::uint64_t>& hits) {
    const ProfileSpace& space = game.space();
    std::vector<double> scratch(static_cast<std::size_t>(space.max_strategies()));
    Profile x = space.decode(begin);
    for (std::uint64_t idx = begin; idx < end; ++idx) {
        if (detail::eps_ne_unchecked(game, x, eps, scratch)) hits.push_back(idx);
        space.next(x);
    }
}

}  // namespace

PsneSet enumerate_eps_ne(const PolymatrixGame& game, double eps, const EnumerationOptions& options) {
    check_eps(eps);
    const std::uint64_t total = game.space().require_enumerable(options.cap);

    // Fixed block partition; blocks are concatenated in index order so the
    // result is independent of scheduling.
    const std::uint64_t blocks = std::min<std::uint64_t>(total, 1024);
    std::vector<std::vector<std::uint64_t>> hits(blocks);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
        const std::uint64_t begin = total * static_cast<std::uint64_t>(b) / blocks;
        const std::uint64_t end = total * static_cast<std::uint64_t>(b + 1) / blocks;
        scan_range(game, eps, begin, end, hits[static_cast<std::size_t>(b)]);
    }

    std::vector<std::uint64_t> all;
    for (auto& h : hits) all.insert(all.end(), h.begin(), h.end());
    return PsneSet(game.space(), eps, std::move(all));
}

PsneSet enumerate_psne(const PolymatrixGame& game, const EnumerationOptions& options) {
    return enumerate_eps_ne(game, 0.0, options);
}

namespace serial {

PsneSet enumerate_eps_ne(const PolymatrixGame& game, double eps, const EnumerationOptions& options) {
    check_eps(eps);
    const std::uint64_t total = game.space().require_enumerable(options.cap);
    std::vector<std::uint64_t> hits;
    scan_range(game, eps, 0, total, hits);
    return PsneSet(game.space(), eps, std::move(hits));
}

}  // namespace serial

}  // namespace polylearn
