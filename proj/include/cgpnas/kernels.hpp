#pragma once

// Inner-loop arithmetic for the tensor engine. Every kernel has a scalar
// reference and, on x86-64, an AVX2 variant chosen at runtime. Reductions
// use the same 4-lane striped order in both, so the variants agree
// bit-for-bit and training results do not depend on the host ISA.

#include <cstddef>
#include <span>
#include <string_view>

namespace cgpnas::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    void (*axpy)(double* y, double alpha, const double* x, std::size_t n);  // y += alpha * x
    void (*add)(double* y, const double* x, std::size_t n);                 // y += x
    void (*scale)(double* y, double alpha, std::size_t n);                  // y *= alpha
    void (*mul_add)(double* y, const double* a, const double* b, std::size_t n);  // y += a * b
};

namespace scalar {
extern const KernelTable table;
}

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa best_isa();
Isa active_isa();
/// Switches the process-wide dispatch; throws std::runtime_error when the
/// host lacks `isa`.
void set_isa(Isa isa);
const KernelTable& table_for(Isa isa);
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> x) {
    return active().sum(x.data(), x.size());
}
inline void axpy(std::span<double> y, double alpha, std::span<const double> x) {
    active().axpy(y.data(), alpha, x.data(), y.size());
}
inline void add(std::span<double> y, std::span<const double> x) {
    active().add(y.data(), x.data(), y.size());
}
inline void scale(std::span<double> y, double alpha) {
    active().scale(y.data(), alpha, y.size());
}
inline void mul_add(std::span<double> y, std::span<const double> a, std::span<const double> b) {
    active().mul_add(y.data(), a.data(), b.data(), y.size());
}

} // namespace cgpnas::kernels
