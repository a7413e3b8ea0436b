#include "hiernav/kernels.hpp"

#include <atomic>

#include "hiernav/error.hpp"

namespace hiernav::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend best_backend() { return available(Backend::avx2) ? Backend::avx2 : Backend::scalar; }

std::atomic<const Ops*>& current() {
  static std::atomic<const Ops*> ptr{&ops(best_backend())};
  return ptr;
}

std::atomic<Backend>& current_kind() {
  static std::atomic<Backend> kind{best_backend()};
  return kind;
}

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ValidationError(std::string("kernel size mismatch in ") + what);
}

}  // namespace

bool available(Backend b) {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: {
      static const bool ok = detail::avx2_ops() != nullptr && cpu_has_avx2();
      return ok;
    }
  }
  return false;
}

const Ops& ops(Backend b) {
  if (!available(b)) throw ValidationError("kernel backend '" + std::string(name(b)) + "' unavailable");
  return b == Backend::avx2 ? *detail::avx2_ops() : detail::scalar_ops();
}

std::string_view name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

Backend active() { return current_kind().load(); }

void select(Backend b) {
  const Ops& table = ops(b);
  current().store(&table);
  current_kind().store(b);
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "dot");
  return current().load()->dot(a.data(), b.data(), a.size());
}

void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> y) {
  require_same(b.size(), y.size(), "affine");
  require_same(w.size(), y.size() * x.size(), "affine");
  current().load()->affine(w.data(), b.data(), x.data(), y.data(), y.size(), x.size());
}

void affine_transpose_acc(std::span<const double> w, std::span<const double> g, std::span<double> out) {
  require_same(w.size(), g.size() * out.size(), "affine_transpose_acc");
  current().load()->affine_transpose_acc(w.data(), g.data(), out.data(), g.size(), out.size());
}

void outer_acc(std::span<double> w, std::span<const double> g, std::span<const double> x) {
  require_same(w.size(), g.size() * x.size(), "outer_acc");
  current().load()->outer_acc(w.data(), g.data(), x.data(), g.size(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size(), "axpy");
  current().load()->axpy(alpha, x.data(), y.data(), x.size());
}

void momentum_step(std::span<double> theta, std::span<const double> grad, std::span<double> velocity,
                   double lr, double momentum, double decay) {
  require_same(theta.size(), grad.size(), "momentum_step");
  require_same(theta.size(), velocity.size(), "momentum_step");
  current().load()->momentum_step(theta.data(), grad.data(), velocity.data(), theta.size(), lr, momentum,
                                  decay);
}

}  // namespace hiernav::kernels
