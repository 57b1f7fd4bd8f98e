#include "nvsplit/rng.hpp"

#include <cmath>
#include <numbers>

namespace nvsplit {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

} // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key)
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::uint32_t fnv1a32(std::string_view text)
{
    std::uint32_t h = 2166136261u;
    for (unsigned char c : text) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view text)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint32_t tag, std::uint32_t grid, std::uint32_t path,
                           bool antithetic)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, path, grid, tag},
      antithetic_(antithetic)
{
}

double RandomStream::raw_uniform()
{
    if (used_ >= 4) {
        block_ = philox4x32_10(ctr_, key_);
        ++ctr_[0];
        used_ = 0;
    }
    const std::uint64_t bits = (static_cast<std::uint64_t>(block_[used_]) << 32) | block_[used_ + 1];
    used_ += 2;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double RandomStream::uniform()
{
    const double u = raw_uniform();
    return antithetic_ ? 1.0 - u : u;
}

double RandomStream::normal()
{
    double z;
    if (has_spare_) {
        has_spare_ = false;
        z = spare_;
    } else {
        const double u1 = 1.0 - raw_uniform();   // (0, 1]
        const double u2 = raw_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        z = r * std::cos(angle);
        spare_ = r * std::sin(angle);
        has_spare_ = true;
    }
    return antithetic_ ? -z : z;
}

} // namespace nvsplit
