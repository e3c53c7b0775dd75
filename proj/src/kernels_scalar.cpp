#include "cgpnas/kernels.hpp"

namespace cgpnas::kernels::scalar {

namespace {

// Lane j accumulates indices i with i % 4 == j; lanes fold as
// (l0 + l2) + (l1 + l3), then the tail is added in order.
double dot(const double* a, const double* b, std::size_t n) {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        l0 += a[i] * b[i];
        l1 += a[i + 1] * b[i + 1];
        l2 += a[i + 2] * b[i + 2];
        l3 += a[i + 3] * b[i + 3];
    }
    double r = (l0 + l2) + (l1 + l3);
    for (; i < n; ++i) {
        r += a[i] * b[i];
    }
    return r;
}

double sum(const double* x, std::size_t n) {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        l0 += x[i];
        l1 += x[i + 1];
        l2 += x[i + 2];
        l3 += x[i + 3];
    }
    double r = (l0 + l2) + (l1 + l3);
    for (; i < n; ++i) {
        r += x[i];
    }
    return r;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void add(double* y, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += x[i];
    }
}

void scale(double* y, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] *= alpha;
    }
}

void mul_add(double* y, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a[i] * b[i];
    }
}

} // namespace

const KernelTable table = {dot, sum, axpy, add, scale, mul_add};

} // namespace cgpnas::kernels::scalar
