#include <atomic>
#include <stdexcept>
#include <string>

#include "cgpnas/kernels.hpp"

namespace cgpnas::kernels {

#if defined(CGPNAS_HAVE_AVX2)
namespace avx2 {
extern const KernelTable table;
}
#endif

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "?";
}

bool isa_supported(Isa isa) {
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
#if defined(CGPNAS_HAVE_AVX2)
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    }
    return false;
}

Isa best_isa() {
    return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

const KernelTable& table_for(Isa isa) {
    if (!isa_supported(isa)) {
        throw std::runtime_error("kernel ISA '" + std::string(isa_name(isa)) +
                                 "' is not available on this host");
    }
#if defined(CGPNAS_HAVE_AVX2)
    if (isa == Isa::Avx2) {
        return avx2::table;
    }
#endif
    return scalar::table;
}

namespace {

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<Isa> g_isa{Isa::Scalar};

const KernelTable* resolve() {
    const Isa isa = best_isa();
    g_isa.store(isa);
    const KernelTable* t = &table_for(isa);
    g_active.store(t);
    return t;
}

} // namespace

Isa active_isa() {
    active();
    return g_isa.load();
}

void set_isa(Isa isa) {
    const KernelTable* t = &table_for(isa);
    g_isa.store(isa);
    g_active.store(t);
}

const KernelTable& active() {
    const KernelTable* t = g_active.load(std::memory_order_acquire);
    return t ? *t : *resolve();
}

} // namespace cgpnas::kernels
