#include "stegcnn/simd.hpp"

#include <stdexcept>
#include <string>

namespace stegcnn::simd {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) noexcept {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += x[i] * y[i];
    return sum;
}

void axpy(double a, const double* x, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace scalar

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t) noexcept;
using AxpyFn = void (*)(double, const double*, double*, std::size_t) noexcept;

struct Table {
    Isa isa;
    DotFn dot;
    AxpyFn axpy;
};

Table table_for(Isa isa) noexcept {
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::avx2:
            return {Isa::avx2, &avx2::dot, &avx2::axpy};
#endif
#if defined(__aarch64__)
        case Isa::neon:
            return {Isa::neon, &neon::dot, &neon::axpy};
#endif
        default:
            return {Isa::scalar, &scalar::dot, &scalar::axpy};
    }
}

Table& active() noexcept {
    static Table table = table_for(detect_isa());
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa detect_isa() noexcept {
    if (isa_available(Isa::avx2)) return Isa::avx2;
    if (isa_available(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

Isa active_isa() noexcept { return active().isa; }

void set_active_isa(Isa isa) {
    if (!isa_available(isa))
        throw std::invalid_argument("ISA not available on this machine: " + std::string(isa_name(isa)));
    active() = table_for(isa);
}

double dot(const double* x, const double* y, std::size_t n) noexcept { return active().dot(x, y, n); }

void axpy(double a, const double* x, double* y, std::size_t n) noexcept { active().axpy(a, x, y, n); }

}  // namespace stegcnn::simd
