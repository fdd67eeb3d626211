#include "polylearn/profile.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "polylearn/error.hpp"

namespace polylearn {

ProfileSpace::ProfileSpace(std::vector<int> strategy_counts) : counts_(std::move(strategy_counts)) {
    if (counts_.empty()) throw InvalidInput("a game needs at least one player");
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i] < 1) {
            throw InvalidInput("player " + std::to_string(i + 1) + " has " + std::to_string(counts_[i]) +
                               " strategies; at least 1 is required");
        }
    }
    strides_.assign(counts_.size(), 0);
    std::uint64_t stride = 1;
    for (std::size_t k = counts_.size(); k-- > 0;) {
        strides_[k] = overflow_ ? 0 : stride;
        const auto m = static_cast<std::uint64_t>(counts_[k]);
        if (!overflow_ && stride > std::numeric_limits<std::uint64_t>::max() / m) {
            overflow_ = true;
        } else if (!overflow_) {
            stride *= m;
        }
    }
    size_ = overflow_ ? std::numeric_limits<std::uint64_t>::max() : stride;
}

int ProfileSpace::max_strategies() const noexcept {
    return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

std::string ProfileSpace::describe_size() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (i) os << " x ";
        os << counts_[i];
    }
    os << " = ";
    if (overflow_) {
        os << "more than 2^64";
    } else {
        os << size_;
    }
    return os.str();
}

std::uint64_t ProfileSpace::require_enumerable(std::uint64_t cap) const {
    if (overflow_ || size_ > cap) {
        throw CapacityError("profile space " + describe_size() + " exceeds the enumeration cap of " +
                                std::to_string(cap) + " profiles",
                            describe_size());
    }
    return size_;
}

bool ProfileSpace::contains(ProfileView x) const noexcept {
    if (x.size() != counts_.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0 || x[i] >= counts_[i]) return false;
    }
    return true;
}

void ProfileSpace::validate(ProfileView x) const {
    if (x.size() != counts_.size()) {
        throw InvalidInput("profile has " + std::to_string(x.size()) + " entries, expected " +
                           std::to_string(counts_.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) validate_strategy(static_cast<int>(i), x[i]);
}

void ProfileSpace::validate_player(int player) const {
    if (player < 0 || player >= num_players()) {
        throw InvalidInput("player index " + std::to_string(player + 1) + " out of range [1, " +
                           std::to_string(num_players()) + "]");
    }
}

void ProfileSpace::validate_strategy(int player, Strategy s) const {
    validate_player(player);
    if (s < 0 || s >= counts_[static_cast<std::size_t>(player)]) {
        throw InvalidInput("strategy " + std::to_string(s + 1) + " of player " + std::to_string(player + 1) +
                           " out of range [1, " + std::to_string(counts_[static_cast<std::size_t>(player)]) + "]");
    }
}

std::uint64_t ProfileSpace::index_of(ProfileView x) const noexcept {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) idx += strides_[i] * static_cast<std::uint64_t>(x[i]);
    return idx;
}

void ProfileSpace::decode(std::uint64_t index, std::span<Strategy> out) const noexcept {
    for (std::size_t k = counts_.size(); k-- > 0;) {
        const auto m = static_cast<std::uint64_t>(counts_[k]);
        out[k] = static_cast<Strategy>(index % m);
        index /= m;
    }
}

Profile ProfileSpace::decode(std::uint64_t index) const {
    Profile x(counts_.size());
    decode(index, x);
    return x;
}

bool ProfileSpace::next(std::span<Strategy> x) const noexcept {
    for (std::size_t k = counts_.size(); k-- > 0;) {
        if (++x[k] < counts_[k]) return true;
        x[k] = 0;
    }
    return false;
}

Profile from_external(std::span<const int> one_indexed) {
    Profile x(one_indexed.begin(), one_indexed.end());
    for (auto& s : x) --s;
    return x;
}

Profile to_external(ProfileView zero_indexed) {
    Profile x(zero_indexed.begin(), zero_indexed.end());
    for (auto& s : x) ++s;
    return x;
}

}  // namespace polylearn
