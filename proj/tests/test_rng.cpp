#include "opo/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using opo::Channel;
using opo::NoiseStream;
using opo::Philox4x32;

TEST_CASE("Philox4x32-10 known-answer vectors")
{
    Philox4x32 zero(0, 0, 0);
    CHECK(zero() == Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

    Philox4x32 pi_digits(0x299f31d0a4093822ull, 0x0370734413198a2eull, 0x85a308d3243f6a88ull);
    CHECK(pi_digits() == Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("batched blocks match the sequential sequence")
{
    Philox4x32 a(42, 7);
    Philox4x32 b(42, 7);
    std::array<Philox4x32::Block, Philox4x32::Lanes> batch{};
    for (int rep = 0; rep < 3; ++rep) {
        a.fill(batch);
        for (const auto& blk : batch) {
            CHECK(blk == b());
        }
    }
    CHECK(a.counter() == b.counter());
}

TEST_CASE("streams are reproducible and distinct")
{
    NoiseStream a(9, 3, Channel::CavityInput);
    NoiseStream b(9, 3, Channel::CavityInput);
    NoiseStream c(9, 3, Channel::LossPort);
    NoiseStream d(9, 4, Channel::CavityInput);
    NoiseStream e(10, 3, Channel::CavityInput);
    std::set<double> firsts;
    for (auto* s : {&c, &d, &e}) {
        firsts.insert(s->normal());
    }
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(firsts.size() == 3);
    CHECK(firsts.count(x) == 0);
    CHECK(opo::stream_id(1, Channel::LossPort) == 0x101u);
}

TEST_CASE("uniform and normal moments")
{
    NoiseStream s(1, 0, Channel::CavityInput);
    const int n = 400000;
    double su = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double m4 = 0.0;
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        su += u;
        const double z = s.normal();
        m1 += z;
        m2 += z * z;
        m4 += z * z * z * z;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    // 5 sigma bands
    CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(m1 / n) < 5 / std::sqrt(double(n)));
    CHECK(std::abs(m2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
    CHECK(std::abs(m4 / n - 3.0) < 5 * std::sqrt(96.0 / n));
}

TEST_CASE("neighbouring streams are uncorrelated")
{
    NoiseStream a(5, 0, Channel::CavityInput);
    NoiseStream b(5, 1, Channel::CavityInput);
    const int n = 200000;
    double c = 0.0;
    for (int i = 0; i < n; ++i) {
        c += a.normal() * b.normal();
    }
    CHECK(std::abs(c / n) < 5 / std::sqrt(double(n)));
}
