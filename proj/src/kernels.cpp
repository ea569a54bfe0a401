#include "fedsched/kernels.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace fedsched::kern {
namespace {

std::atomic<const KernelTable*> g_table{nullptr};

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* table_for(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return &scalar_table();
        case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return &avx2_table();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable* best_table() {
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2()) return &avx2_table();
#endif
    return &scalar_table();
}

const KernelTable* resolve_initial() {
    const char* env = std::getenv("FEDSCHED_KERNEL");
    if (env && *env) {
        const std::string name(env);
        if (name == "scalar") return &scalar_table();
        if (name == "avx2") {
            if (backend_supported(Backend::Avx2)) return table_for(Backend::Avx2);
            std::fprintf(stderr,
                         "fedsched: FEDSCHED_KERNEL=avx2 but this CPU lacks AVX2/FMA; "
                         "using scalar kernels\n");
            return &scalar_table();
        }
        if (name != "auto")
            std::fprintf(stderr, "fedsched: unknown FEDSCHED_KERNEL '%s'; using auto\n", env);
    }
    return best_table();
}

}  // namespace

const char* backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool backend_supported(Backend b) {
    if (b == Backend::Scalar) return true;
#if defined(__x86_64__) || defined(_M_X64)
    return b == Backend::Avx2 && cpu_has_avx2();
#else
    return false;
#endif
}

const KernelTable& active() {
    const KernelTable* t = g_table.load(std::memory_order_acquire);
    if (!t) {
        t = resolve_initial();
        g_table.store(t, std::memory_order_release);
    }
    return *t;
}

Backend active_backend() {
    return &active() == &scalar_table() ? Backend::Scalar : Backend::Avx2;
}

void set_backend(Backend b) {
    if (!backend_supported(b)) {
        throw std::runtime_error(std::string("kernel backend '") + backend_name(b) +
                                 "' is not supported on this CPU");
    }
    g_table.store(table_for(b), std::memory_order_release);
}

void select_backend(const std::string& name) {
    if (name == "auto") {
        g_table.store(best_table(), std::memory_order_release);
    } else if (name == "scalar") {
        set_backend(Backend::Scalar);
    } else if (name == "avx2") {
        set_backend(Backend::Avx2);
    } else {
        throw std::runtime_error("unknown kernel backend '" + name +
                                 "' (expected auto, scalar, or avx2)");
    }
}

}  // namespace fedsched::kern
