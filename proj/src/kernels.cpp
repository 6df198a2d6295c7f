#include "nucleus/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace nucleus::kernels {
namespace {

Isa pick_default() {
  if (const char* env = std::getenv("NUCLEUS_KERNEL_ISA")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Isa::avx2;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

Isa& current() {
  static Isa isa = pick_default();
  return isa;
}

const detail::Ops& ops() {
  return current() == Isa::avx2 ? detail::avx2_ops() : detail::scalar_ops();
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return current(); }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && !cpu_has_avx2()) isa = Isa::scalar;
  current() = isa;
}

double dot(const double* a, const double* b, std::size_t n) {
  return ops().dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  ops().axpy(alpha, x, y, n);
}
void vadd(const double* a, const double* b, double* out, std::size_t n) {
  ops().vadd(a, b, out, n);
}
void vmul(const double* a, const double* b, double* out, std::size_t n) {
  ops().vmul(a, b, out, n);
}
void vmul_acc(const double* a, const double* b, double* y, std::size_t n) {
  ops().vmul_acc(a, b, y, n);
}
void matvec(const double* a, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  ops().matvec(a, x, y, rows, cols);
}
void matvec_t_acc(const double* a, const double* x, double* y,
                  std::size_t rows, std::size_t cols) {
  ops().matvec_t_acc(a, x, y, rows, cols);
}
void ger_acc(double* a, const double* x, const double* y, std::size_t rows,
             std::size_t cols) {
  ops().ger_acc(a, x, y, rows, cols);
}
void adam_step(double* w, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, long t) {
  ops().adam_step(w, m, v, g, n, lr, beta1, beta2, eps, t);
}

}  // namespace nucleus::kernels
