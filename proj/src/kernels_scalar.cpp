#include "hiernav/kernels.hpp"

namespace hiernav::kernels::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void affine(const double* w, const double* b, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = b[r] + dot(w + r * cols, x, cols);
}

void affine_transpose_acc(const double* w, const double* g, double* out, std::size_t rows,
                          std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * gr;
  }
}

void outer_acc(double* w, const double* g, const double* x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void momentum_step(double* theta, const double* grad, double* velocity, std::size_t n, double lr,
                   double momentum, double decay) {
  for (std::size_t i = 0; i < n; ++i) {
    velocity[i] = momentum * velocity[i] + (grad[i] + decay * theta[i]);
    theta[i] -= lr * velocity[i];
  }
}

constexpr Ops kScalar{dot, affine, affine_transpose_acc, outer_acc, axpy, momentum_step};

}  // namespace

const Ops& scalar_ops() { return kScalar; }

}  // namespace hiernav::kernels::detail
