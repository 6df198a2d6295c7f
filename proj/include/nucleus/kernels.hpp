#ifndef NUCLEUS_KERNELS_HPP
#define NUCLEUS_KERNELS_HPP

#include <cstddef>

// Double-precision inner loops used by the numeric engine. Each kernel has a
// scalar reference implementation and an AVX2 variant; the active variant is
// chosen at runtime from CPUID (overridable with force_isa or the
// NUCLEUS_KERNEL_ISA environment variable, values "scalar" / "avx2").
namespace nucleus::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
void force_isa(Isa isa);
bool cpu_has_avx2();

// y = sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// out[i] = a[i] + b[i]
void vadd(const double* a, const double* b, double* out, std::size_t n);

// out[i] = a[i] * b[i]
void vmul(const double* a, const double* b, double* out, std::size_t n);

// y[i] += a[i] * b[i]
void vmul_acc(const double* a, const double* b, double* y, std::size_t n);

// y = A x, A row-major rows x cols
void matvec(const double* a, const double* x, double* y, std::size_t rows,
            std::size_t cols);

// y += A^T x, A row-major rows x cols, x has rows elements, y has cols
void matvec_t_acc(const double* a, const double* x, double* y,
                  std::size_t rows, std::size_t cols);

// A += x y^T, A row-major rows x cols
void ger_acc(double* a, const double* x, const double* y, std::size_t rows,
             std::size_t cols);

// Adam with bias correction; t is the 1-based step count.
void adam_step(double* w, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, long t);

// Transcendentals stay scalar on every ISA.
void tanh_vec(const double* x, double* y, std::size_t n);
void logistic_vec(const double* x, double* y, std::size_t n);

namespace detail {
struct Ops {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*vadd)(const double*, const double*, double*, std::size_t);
  void (*vmul)(const double*, const double*, double*, std::size_t);
  void (*vmul_acc)(const double*, const double*, double*, std::size_t);
  void (*matvec)(const double*, const double*, double*, std::size_t,
                 std::size_t);
  void (*matvec_t_acc)(const double*, const double*, double*, std::size_t,
                       std::size_t);
  void (*ger_acc)(double*, const double*, const double*, std::size_t,
                  std::size_t);
  void (*adam_step)(double*, double*, double*, const double*, std::size_t,
                    double, double, double, double, long);
};
const Ops& scalar_ops();
const Ops& avx2_ops();
}  // namespace detail

}  // namespace nucleus::kernels

#endif
