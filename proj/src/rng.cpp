#include "opo/rng.hpp"

#include <cmath>

namespace opo {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// splitmix64 finalizer, used to spread user seeds over the key space
std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

Philox4x32::Philox4x32(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block) noexcept
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
      counter_lo_(first_block), counter_hi_(stream)
{
}

Philox4x32::Block Philox4x32::operator()() noexcept
{
    Block ctr{static_cast<std::uint32_t>(counter_lo_), static_cast<std::uint32_t>(counter_lo_ >> 32),
              static_cast<std::uint32_t>(counter_hi_), static_cast<std::uint32_t>(counter_hi_ >> 32)};
    auto k0 = key_[0];
    auto k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    ++counter_lo_;
    return ctr;
}

void Philox4x32::fill(std::array<Block, Lanes>& out) noexcept
{
    // independent counters interleave well; a single block is latency bound
    std::array<std::uint32_t, Lanes> c0, c1, c2, c3;
    for (int j = 0; j < Lanes; ++j) {
        const std::uint64_t lo = counter_lo_ + static_cast<std::uint64_t>(j);
        c0[j] = static_cast<std::uint32_t>(lo);
        c1[j] = static_cast<std::uint32_t>(lo >> 32);
        c2[j] = static_cast<std::uint32_t>(counter_hi_);
        c3[j] = static_cast<std::uint32_t>(counter_hi_ >> 32);
    }
    auto k0 = key_[0];
    auto k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
        for (int j = 0; j < Lanes; ++j) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0[j];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2[j];
            const auto n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1[j] ^ k0;
            const auto n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3[j] ^ k1;
            c1[j] = static_cast<std::uint32_t>(p1);
            c3[j] = static_cast<std::uint32_t>(p0);
            c0[j] = n0;
            c2[j] = n2;
        }
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    for (int j = 0; j < Lanes; ++j) {
        out[j] = {c0[j], c1[j], c2[j], c3[j]};
    }
    counter_lo_ += Lanes;
}

std::uint64_t stream_id(std::uint64_t trajectory, Channel channel) noexcept
{
    return (trajectory << 8) | static_cast<std::uint64_t>(channel);
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t trajectory, Channel channel) noexcept
    : NoiseStream(seed, stream_id(trajectory, channel))
{
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : gen_(mix64(seed), stream)
{
}

std::uint64_t NoiseStream::next_u64() noexcept
{
    if (used_ >= 4 * Philox4x32::Lanes) {
        gen_.fill(blocks_);
        used_ = 0;
    }
    const auto& b = blocks_[static_cast<std::size_t>(used_ / 4)];
    const std::uint64_t lo = b[static_cast<std::size_t>(used_ % 4)];
    const std::uint64_t hi = b[static_cast<std::size_t>(used_ % 4 + 1)];
    used_ += 2;
    return (hi << 32) | lo;
}

double NoiseStream::uniform() noexcept
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double NoiseStream::normal() noexcept
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

} // namespace opo
