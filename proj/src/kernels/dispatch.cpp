#include "quinv/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace quinv::kernels {

#ifndef QUINV_HAVE_AVX2
const Table* avx2_table() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Isa pick() {
    const char* env = std::getenv("QUINV_FORCE_SCALAR");
    if (env && std::strcmp(env, "0") != 0 && *env) return Isa::scalar;
    if (avx2_table() && cpu_has_avx2()) return Isa::avx2;
    return Isa::scalar;
}

}  // namespace

Isa active_isa() {
    static const Isa isa = pick();
    return isa;
}

const Table& active() {
    static const Table& t = active_isa() == Isa::avx2 ? *avx2_table() : scalar_table();
    return t;
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace quinv::kernels
