#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace nvsplit {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// 32-bit FNV-1a; used to turn stream labels into counter words.
std::uint32_t fnv1a32(std::string_view text);
std::uint64_t fnv1a64(std::string_view text);

/// Counter-based stream addressed by (seed, tag, grid index, path index).
/// Two streams with different addresses never share a Philox block, so
/// per-path results do not depend on how paths are scheduled.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint32_t tag, std::uint32_t grid, std::uint32_t path,
                 bool antithetic = false);

    /// Uniform on [0, 1). Antithetic streams return 1 - u of the partner draw.
    double uniform();
    /// Standard normal (Box-Muller). Antithetic streams return the negated draw.
    double normal();

private:
    double raw_uniform();

    PhiloxKey key_;
    PhiloxCounter ctr_;
    PhiloxCounter block_{};
    int used_ = 4;
    bool antithetic_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace nvsplit
