#include "quinv/kernels.hpp"

namespace quinv::kernels {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// four partial accumulators, same association order as the vector path
double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) acc[k] += x[i + k] * y[i + k];
    double s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc[4] = {0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) acc[k] += x[i + k];
    double s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for (; i < n; ++i) s += x[i];
    return s;
}

void mul_scalar(const double* x, const double* y, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void safe_div_scalar(const double* x, const double* y, double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] != 0.0 ? x[i] / y[i] : 0.0;
}

const Table kScalar{axpy_scalar, dot_scalar, sum_scalar, mul_scalar, safe_div_scalar};

}  // namespace

const Table& scalar_table() { return kScalar; }

}  // namespace quinv::kernels
