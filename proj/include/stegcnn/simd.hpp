#pragma once

// Vector primitives behind every convolution and dense loop.
//
// Each primitive has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once at startup from the CPU's capabilities and can be overridden for
// equivalence testing. Variants differ only in summation order, so results
// agree to rounding (not bit-for-bit) across ISAs; on one machine a given ISA
// is fully deterministic.

#include <cstddef>
#include <span>
#include <string_view>

namespace stegcnn::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

/// True when this binary carries a variant for `isa` and the CPU can run it.
bool isa_available(Isa isa) noexcept;

/// Best available ISA on this machine.
Isa detect_isa() noexcept;

/// ISA currently used by the dispatching entry points below.
Isa active_isa() noexcept;

/// Forces a specific ISA (must be available). Not thread-safe with respect to
/// concurrent kernel calls; intended for tests and benchmarks.
void set_active_isa(Isa isa);

/// RAII override of the active ISA.
class ScopedIsa {
public:
    explicit ScopedIsa(Isa isa) : previous_{active_isa()} { set_active_isa(isa); }
    ~ScopedIsa() { set_active_isa(previous_); }
    ScopedIsa(const ScopedIsa&) = delete;
    ScopedIsa& operator=(const ScopedIsa&) = delete;

private:
    Isa previous_;
};

/// sum_i x[i] * y[i]
double dot(const double* x, const double* y, std::size_t n) noexcept;

/// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
    return dot(x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

// Per-ISA entry points; exposed for equivalence tests.
namespace scalar {
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
}  // namespace neon
#endif

}  // namespace stegcnn::simd
