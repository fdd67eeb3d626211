#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polylearn {

/// Pure strategies are 0-indexed inside the library. Files and the CLI use
/// 1-indexed strategies; conversion happens only at the I/O boundary.
using Strategy = int;
using Profile = std::vector<Strategy>;
using ProfileView = std::span<const Strategy>;

/// Default cap on the number of joint profiles any exhaustive scan may visit.
inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

/// The joint action space A = A_1 x ... x A_p with a mixed-radix indexing.
/// Player 0 is the most significant digit, so increasing index order is
/// lexicographic order on profiles.
class ProfileSpace {
public:
    ProfileSpace() = default;
    explicit ProfileSpace(std::vector<int> strategy_counts);

    int num_players() const noexcept { return static_cast<int>(counts_.size()); }
    int strategies(int player) const { return counts_.at(static_cast<std::size_t>(player)); }
    const std::vector<int>& counts() const noexcept { return counts_; }
    int max_strategies() const noexcept;

    /// |A|, or UINT64_MAX when the product overflows.
    std::uint64_t size_saturated() const noexcept { return size_; }
    bool overflows() const noexcept { return overflow_; }

    /// Returns |A|; throws CapacityError when |A| exceeds cap.
    std::uint64_t require_enumerable(std::uint64_t cap) const;

    /// "2 x 3 x 3 = 18" style description of |A|.
    std::string describe_size() const;

    bool contains(ProfileView x) const noexcept;
    /// Throws InvalidInput naming the first bad coordinate.
    void validate(ProfileView x) const;
    void validate_player(int player) const;
    void validate_strategy(int player, Strategy s) const;

    std::uint64_t index_of(ProfileView x) const noexcept;
    void decode(std::uint64_t index, std::span<Strategy> out) const noexcept;
    Profile decode(std::uint64_t index) const;

    /// Odometer step in lexicographic order; returns false after the last profile.
    bool next(std::span<Strategy> x) const noexcept;

    /// Place value of player i's digit in index_of.
    std::uint64_t stride(int player) const { return strides_.at(static_cast<std::size_t>(player)); }

    friend bool operator==(const ProfileSpace& a, const ProfileSpace& b) { return a.counts_ == b.counts_; }

private:
    std::vector<int> counts_;
    std::vector<std::uint64_t> strides_;
    std::uint64_t size_ = 1;
    bool overflow_ = false;
};

/// Converts a 1-indexed external profile to the internal 0-indexed form.
Profile from_external(std::span<const int> one_indexed);
Profile to_external(ProfileView zero_indexed);

}  // namespace polylearn
