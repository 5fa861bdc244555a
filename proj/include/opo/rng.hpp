#pragma once

#include <array>
#include <cstdint>

namespace opo {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output depends only on (key, counter), so substreams are independent of
/// scheduling and thread count.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    Philox4x32(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block = 0) noexcept;

    Block operator()() noexcept;

    /// The next `Lanes` blocks, computed side by side; same sequence as
    /// calling operator() `Lanes` times.
    static constexpr int Lanes = 8;
    void fill(std::array<Block, Lanes>& out) noexcept;

    std::uint64_t counter() const noexcept { return counter_lo_; }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t counter_lo_ = 0;
    std::uint64_t counter_hi_;
};

/// Named substreams. A trajectory owns one stream per channel.
enum class Channel : std::uint32_t {
    CavityInput = 0,
    LossPort = 1,
    PhaseDiffusion = 2,
    FrequencyDrift = 3,
    PumpNoise = 4,
    DetectorLoss = 5,
    ModeMismatch = 6,
    LoVacuum = 7,
    ElectronicNoise = 8,
    QuadratureLock = 9,
    InitialState = 10,
    ShotNoiseReference = 11,
};

/// Uniform and standard-normal variates from a Philox substream. Normals use
/// the Marsaglia polar method so the sequence is defined by this code alone,
/// not by the standard library's distribution implementation.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t trajectory, Channel channel) noexcept;
    NoiseStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    double normal() noexcept;

private:
    std::uint64_t next_u64() noexcept;

    Philox4x32 gen_;
    std::array<Philox4x32::Block, Philox4x32::Lanes> blocks_{};
    int used_ = 4 * Philox4x32::Lanes; ///< 32-bit words consumed from blocks_
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t stream_id(std::uint64_t trajectory, Channel channel) noexcept;

} // namespace opo
