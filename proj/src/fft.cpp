#include "opo/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace opo::fft {

namespace {

// FFTW planning is not thread-safe; executing a cached plan on fresh aligned
// buffers through the new-array interface is.
enum class Kind { R2C, C2R, C2C };

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct PlanCache {
    std::map<std::tuple<Kind, std::size_t>, fftw_plan> plans;
    ~PlanCache()
    {
        for (auto& [k, p] : plans) {
            fftw_destroy_plan(p);
        }
    }
};

PlanCache& cache()
{
    static PlanCache c;
    return c;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using AlignedBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
AlignedBuffer<T> aligned(std::size_t n)
{
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
    if (p == nullptr) {
        throw std::bad_alloc();
    }
    return AlignedBuffer<T>(p);
}

fftw_plan plan_for(Kind kind, std::size_t n)
{
    std::lock_guard lock(planner_mutex());
    auto& plans = cache().plans;
    if (auto it = plans.find({kind, n}); it != plans.end()) {
        return it->second;
    }
    const int len = static_cast<int>(n);
    fftw_plan p = nullptr;
    switch (kind) {
    case Kind::R2C: {
        auto in = aligned<double>(n);
        auto out = aligned<fftw_complex>(n / 2 + 1);
        p = fftw_plan_dft_r2c_1d(len, in.get(), out.get(), FFTW_ESTIMATE);
        break;
    }
    case Kind::C2R: {
        auto in = aligned<fftw_complex>(n / 2 + 1);
        auto out = aligned<double>(n);
        p = fftw_plan_dft_c2r_1d(len, in.get(), out.get(), FFTW_ESTIMATE);
        break;
    }
    case Kind::C2C: {
        auto in = aligned<fftw_complex>(n);
        auto out = aligned<fftw_complex>(n);
        p = fftw_plan_dft_1d(len, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
        break;
    }
    }
    if (p == nullptr) {
        throw std::runtime_error("FFTW could not create a plan of size " + std::to_string(n));
    }
    plans.emplace(std::make_tuple(kind, n), p);
    return p;
}

} // namespace

std::vector<std::complex<double>> forward_real(std::span<const double> in)
{
    const std::size_t n = in.size();
    if (n == 0) {
        return {};
    }
    auto buf = aligned<double>(n);
    auto out = aligned<fftw_complex>(n / 2 + 1);
    std::copy(in.begin(), in.end(), buf.get());
    fftw_execute_dft_r2c(plan_for(Kind::R2C, n), buf.get(), out.get());
    std::vector<std::complex<double>> result(n / 2 + 1);
    std::memcpy(static_cast<void*>(result.data()), out.get(), sizeof(fftw_complex) * result.size());
    return result;
}

std::vector<std::complex<double>> forward(std::span<const std::complex<double>> in)
{
    const std::size_t n = in.size();
    if (n == 0) {
        return {};
    }
    auto buf = aligned<fftw_complex>(n);
    auto out = aligned<fftw_complex>(n);
    std::memcpy(buf.get(), in.data(), sizeof(fftw_complex) * n);
    fftw_execute_dft(plan_for(Kind::C2C, n), buf.get(), out.get());
    std::vector<std::complex<double>> result(n);
    std::memcpy(static_cast<void*>(result.data()), out.get(), sizeof(fftw_complex) * n);
    return result;
}

std::vector<double> inverse_real(std::span<const std::complex<double>> half_spectrum, std::size_t n)
{
    if (half_spectrum.size() != n / 2 + 1) {
        throw std::invalid_argument("inverse_real: spectrum must have n/2+1 bins");
    }
    if (n == 0) {
        return {};
    }
    auto buf = aligned<fftw_complex>(n / 2 + 1);
    auto out = aligned<double>(n);
    std::memcpy(buf.get(), half_spectrum.data(), sizeof(fftw_complex) * half_spectrum.size());
    fftw_execute_dft_c2r(plan_for(Kind::C2R, n), buf.get(), out.get());
    return std::vector<double>(out.get(), out.get() + n);
}

} // namespace opo::fft
