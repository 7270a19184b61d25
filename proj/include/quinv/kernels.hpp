#pragma once

#include <cstddef>

// Dense double-precision kernels used by the EM contractions and moment sums.
// Each entry point dispatches once, at first use, to either the portable
// scalar loop or an AVX2+FMA variant. Setting QUINV_FORCE_SCALAR=1 in the
// environment pins the scalar path.

namespace quinv::kernels {

enum class Isa { scalar, avx2 };

struct Table {
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    void (*mul)(const double* x, const double* y, double* z, std::size_t n);
    // z[i] = x[i] / y[i], or 0 where y[i] == 0
    void (*safe_div)(const double* x, const double* y, double* z, std::size_t n);
};

const Table& scalar_table();
const Table* avx2_table();  // nullptr when not compiled in
bool cpu_has_avx2();

const Table& active();
Isa active_isa();
const char* isa_name(Isa isa);

inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }
inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline void mul(const double* x, const double* y, double* z, std::size_t n) { active().mul(x, y, z, n); }
inline void safe_div(const double* x, const double* y, double* z, std::size_t n) {
    active().safe_div(x, y, z, n);
}

}  // namespace quinv::kernels
