#pragma once

#include <span>
#include <string_view>

// Dense inner loops used by the model and trainer. Each operation has a
// scalar reference implementation and, on x86-64 hosts with AVX2+FMA, a
// vectorized variant chosen at startup. All matrices are row-major.
namespace hiernav::kernels {

enum class Backend { scalar, avx2 };

struct Ops {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[r] = b[r] + sum_c w[r*cols + c] * x[c]
  void (*affine)(const double* w, const double* b, const double* x, double* y, std::size_t rows,
                 std::size_t cols);
  // out[c] += sum_r w[r*cols + c] * g[r]
  void (*affine_transpose_acc)(const double* w, const double* g, double* out, std::size_t rows,
                               std::size_t cols);
  // w[r*cols + c] += g[r] * x[c]
  void (*outer_acc)(double* w, const double* g, const double* x, std::size_t rows, std::size_t cols);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // v = momentum * v + (grad + decay * theta); theta -= lr * v
  void (*momentum_step)(double* theta, const double* grad, double* velocity, std::size_t n, double lr,
                        double momentum, double decay);
};

bool available(Backend b);
const Ops& ops(Backend b);
std::string_view name(Backend b);

// Process-wide selection; defaults to the best available backend.
Backend active();
void select(Backend b);

double dot(std::span<const double> a, std::span<const double> b);
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> y);
void affine_transpose_acc(std::span<const double> w, std::span<const double> g, std::span<double> out);
void outer_acc(std::span<double> w, std::span<const double> g, std::span<const double> x);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void momentum_step(std::span<double> theta, std::span<const double> grad, std::span<double> velocity,
                   double lr, double momentum, double decay);

namespace detail {
const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when not compiled in
}  // namespace detail

}  // namespace hiernav::kernels
